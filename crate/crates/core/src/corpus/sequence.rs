use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Vocabulary;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Novel,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Novel => "novel",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Label::Normal),
            "novel" => Ok(Label::Novel),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(Error::Malformed(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub id: String,
    /// Token ids, without begin/end markers.
    pub tokens: Vec<u32>,
    pub label: Label,
    /// Generating component, when known (synthetic data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
}

impl LabeledSequence {
    pub fn new(id: impl Into<String>, tokens: Vec<u32>, label: Label) -> Self {
        LabeledSequence {
            id: id.into(),
            tokens,
            label,
            component: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub vocabulary: Vocabulary,
    pub sequences: Vec<LabeledSequence>,
}

impl Corpus {
    /// Checks that ids are unique and every sequence is non-empty and in range.
    pub fn new(vocabulary: Vocabulary, sequences: Vec<LabeledSequence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sequences.len());
        for s in &sequences {
            if s.tokens.is_empty() {
                return Err(Error::EmptySequence(Some(s.id.clone())));
            }
            if let Some(&bad) = s.tokens.iter().find(|&&t| t as usize >= vocabulary.len()) {
                return Err(Error::TokenOutOfRange {
                    id: bad,
                    size: vocabulary.len(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus {
            vocabulary,
            sequences,
        })
    }

    /// Builds the vocabulary from `docs` and encodes them. `labels`, when
    /// given, must have one entry per document.
    pub fn from_raw<S: AsRef<str>>(
        docs: &[Vec<S>],
        labels: Option<&[Label]>,
        min_frequency: usize,
    ) -> Result<Self> {
        let vocab = Vocabulary::build(docs, min_frequency)?;
        Self::encode_with(vocab, docs, labels)
    }

    /// Encodes `docs` with an existing vocabulary. Sequence ids are the
    /// zero-based document index.
    pub fn encode_with<S: AsRef<str>>(
        vocabulary: Vocabulary,
        docs: &[Vec<S>],
        labels: Option<&[Label]>,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if let Some(l) = labels {
            if l.len() != docs.len() {
                return Err(Error::LengthMismatch {
                    what: "labels vs sequences",
                    left: l.len(),
                    right: docs.len(),
                });
            }
        }
        let sequences = docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let tokens = vocabulary
                    .encode(d)
                    .map_err(|_| Error::EmptySequence(Some(i.to_string())))?;
                let label = labels.map_or(Label::Unlabeled, |l| l[i]);
                Ok(LabeledSequence::new(i.to_string(), tokens, label))
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(vocabulary, sequences)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.sequences.iter().map(|s| s.tokens.len()).sum()
    }

    pub fn token_lists(&self) -> Vec<&[u32]> {
        self.sequences.iter().map(|s| s.tokens.as_slice()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.sequences.iter().filter(|s| s.label == label).count()
    }

    /// A corpus with the same vocabulary holding the sequences selected by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&LabeledSequence) -> bool) -> Corpus {
        Corpus {
            vocabulary: self.vocabulary.clone(),
            sequences: self.sequences.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    /// Splits into (train, validation, test).
    ///
    /// Normal sequences are divided by `fractions` (train, validation; test
    /// takes the rest). Novel sequences never enter the training split; they
    /// are divided between validation and test in the ratio of those two
    /// fractions. Unlabeled sequences follow the normal ones.
    pub fn stratified_split(
        &self,
        train_fraction: f64,
        validation_fraction: f64,
        seed: u64,
    ) -> Result<(Corpus, Corpus, Corpus)> {
        if !(0.0..=1.0).contains(&train_fraction)
            || !(0.0..=1.0).contains(&validation_fraction)
            || train_fraction + validation_fraction > 1.0
        {
            return Err(Error::invalid("split fractions must lie in [0, 1] and sum to at most 1"));
        }
        let mut rng = rng::seeded(seed);
        let mut train = Vec::new();
        let mut val = Vec::new();
        let mut test = Vec::new();
        for label in [Label::Normal, Label::Unlabeled, Label::Novel] {
            let mut idx: Vec<usize> = (0..self.sequences.len())
                .filter(|&i| self.sequences[i].label == label)
                .collect();
            idx.shuffle(&mut rng);
            let n = idx.len();
            let (n_train, n_val) = if label == Label::Novel {
                let rest = 1.0 - train_fraction;
                let share = if rest > 0.0 { validation_fraction / rest } else { 0.0 };
                (0, (n as f64 * share).round() as usize)
            } else {
                let t = (n as f64 * train_fraction).round() as usize;
                let v = ((n as f64 * validation_fraction).round() as usize).min(n - t);
                (t, v)
            };
            for (pos, &i) in idx.iter().enumerate() {
                let s = self.sequences[i].clone();
                if pos < n_train {
                    train.push(s);
                } else if pos < n_train + n_val {
                    val.push(s);
                } else {
                    test.push(s);
                }
            }
        }
        let wrap = |sequences| Corpus {
            vocabulary: self.vocabulary.clone(),
            sequences,
        };
        Ok((wrap(train), wrap(val), wrap(test)))
    }
}

/// Token count vector of length `vocab_size`.
pub fn bag_of_words(tokens: &[u32], vocab_size: usize) -> Vec<f64> {
    let mut bag = vec![0.0; vocab_size];
    for &t in tokens {
        bag[t as usize] += 1.0;
    }
    bag
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize_text(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Reads one whitespace-separated sequence per line.
pub fn read_sequence_file(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    parse_sequences(&fs::read_to_string(path)?)
}

/// Parses sequence-file text: one whitespace-separated sequence per line.
pub fn parse_sequences(text: &str) -> Result<Vec<Vec<String>>> {
    let docs: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    if let Some(i) = docs.iter().position(Vec::is_empty) {
        return Err(Error::Malformed(format!("line {} is empty", i + 1)));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(docs)
}

/// Reads a label sidecar: one of `normal` / `novel` per line.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    parse_labels(&fs::read_to_string(path)?)
}

pub fn parse_labels(text: &str) -> Result<Vec<Label>> {
    text.lines().map(str::parse).collect()
}

impl Corpus {
    /// Parses sequence text and an optional label sidecar text.
    pub fn parse(text: &str, labels: Option<&str>, min_frequency: usize) -> Result<Corpus> {
        let docs = parse_sequences(text)?;
        let labels = labels
            .map(parse_labels)
            .transpose()?;
        Corpus::from_raw(&docs, labels.as_deref(), min_frequency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bag_counts() {
        assert_eq!(bag_of_words(&[3, 4, 3], 6), vec![0.0, 0.0, 0.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn text_tokenization() {
        assert_eq!(
            tokenize_text("Great food!! Won't return, 10/10"),
            vec!["great", "food", "won", "t", "return", "10", "10"]
        );
    }

    #[test]
    fn parse_with_labels() {
        let c = Corpus::parse("6 6 7\n7 8\n", Some("normal\nnovel\n"), 1).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.sequences[1].label, Label::Novel);
        assert_eq!(c.vocabulary.decode(&c.sequences[0].tokens), vec!["6", "6", "7"]);
        assert!(Corpus::parse("1 2\n", Some("normal\nnovel\n"), 1).is_err());
        assert!(Corpus::parse("1 2\n\n3\n", None, 1).is_err());
        assert!(Corpus::parse("1\n", Some("weird\n"), 1).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let v = Vocabulary::from_tokens(["a"], 1);
        let s = LabeledSequence::new("x", vec![3], Label::Normal);
        assert!(matches!(
            Corpus::new(v, vec![s.clone(), s]),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn out_of_range_rejected() {
        let v = Vocabulary::from_tokens(["a"], 1);
        let s = LabeledSequence::new("x", vec![9], Label::Normal);
        assert!(matches!(Corpus::new(v, vec![s]), Err(Error::TokenOutOfRange { .. })));
    }

    #[test]
    fn split_keeps_novel_out_of_training() {
        let docs: Vec<Vec<String>> = (0..100).map(|i| vec![format!("t{}", i % 7)]).collect();
        let labels: Vec<Label> = (0..100)
            .map(|i| if i % 5 == 0 { Label::Novel } else { Label::Normal })
            .collect();
        let c = Corpus::from_raw(&docs, Some(&labels), 1).unwrap();
        let (tr, va, te) = c.stratified_split(0.7, 0.15, 3).unwrap();
        assert_eq!(tr.len() + va.len() + te.len(), 100);
        assert_eq!(tr.count(Label::Novel), 0);
        assert_eq!(tr.count(Label::Normal), 56);
        assert_eq!(va.count(Label::Novel) + te.count(Label::Novel), 20);
        assert_eq!(va.count(Label::Novel), 10);
        let (tr2, _, _) = c.stratified_split(0.7, 0.15, 3).unwrap();
        assert_eq!(tr, tr2);
    }

    proptest! {
        #[test]
        fn bag_sums_to_length(tokens in prop::collection::vec(0u32..20, 1..50)) {
            let bag = bag_of_words(&tokens, 20);
            prop_assert_eq!(bag.iter().sum::<f64>(), tokens.len() as f64);
        }
    }
}

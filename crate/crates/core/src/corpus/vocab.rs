use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

/// Token-string to id mapping. Ids 0, 1 and 2 are reserved for the unknown,
/// begin-of-sequence and end-of-sequence markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    word_to_id: HashMap<String, u32>,
    id_to_word: Vec<String>,
    min_frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    words: Vec<String>,
    min_frequency: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Self::from_id_order(r.words, r.min_frequency)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            words: v.id_to_word,
            min_frequency: v.min_frequency,
        }
    }
}

impl Vocabulary {
    pub const UNK_ID: u32 = 0;
    pub const BOS_ID: u32 = 1;
    pub const EOS_ID: u32 = 2;
    pub const RESERVED: usize = 3;

    /// Builds a vocabulary keeping every token seen at least `min_frequency`
    /// times. Retained tokens are ordered by descending count, then by string.
    pub fn build<D, S>(docs: &[D], min_frequency: usize) -> Result<Self>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for tok in doc.as_ref() {
                *counts.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(w, c)| c >= min_frequency && !is_reserved(w))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_tokens(
            kept.into_iter().map(|(w, _)| w.to_string()),
            min_frequency,
        ))
    }

    /// A vocabulary holding exactly `tokens` (after the reserved ids), in order.
    pub fn from_tokens<I, S>(tokens: I, min_frequency: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut words: Vec<String> = vec![UNK.into(), BOS.into(), EOS.into()];
        for t in tokens {
            let t = t.into();
            if !is_reserved(&t) && !words.contains(&t) {
                words.push(t);
            }
        }
        Self::from_id_order(words, min_frequency)
    }

    fn from_id_order(words: Vec<String>, min_frequency: usize) -> Self {
        let word_to_id = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary {
            word_to_id,
            id_to_word: words,
            min_frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.len() <= Self::RESERVED
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.id_to_word.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.id_to_word
    }

    /// Maps tokens to ids; unknown tokens become [`Vocabulary::UNK_ID`].
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence(None));
        }
        Ok(tokens
            .iter()
            .map(|t| match self.word_to_id.get(t.as_ref()) {
                Some(&id) if id > Self::EOS_ID => id,
                _ => Self::UNK_ID,
            })
            .collect())
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .map(|&id| self.word(id).unwrap_or(UNK).to_string())
            .collect()
    }
}

fn is_reserved(w: &str) -> bool {
    w == UNK || w == BOS || w == EOS
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(v: &[&[&str]]) -> Vec<Vec<String>> {
        v.iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn frequency_cut() {
        let v = Vocabulary::build(&docs(&[&["a", "b", "a"], &["a", "c"]]), 2).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("a"), Some(3));
        assert_eq!(v.id("b"), None);
        assert_eq!(v.encode(&["b", "c", "a"]).unwrap(), vec![0, 0, 3]);
    }

    #[test]
    fn min_frequency_one_keeps_all() {
        let v = Vocabulary::build(&docs(&[&["a", "b", "a"], &["a", "c"]]), 1).unwrap();
        assert_eq!(v.len(), 6);
        for w in ["a", "b", "c"] {
            assert!(v.id(w).is_some());
        }
    }

    #[test]
    fn reserved_ids() {
        let v = Vocabulary::build(&docs(&[&["x"]]), 1).unwrap();
        assert_eq!(v.id(UNK), Some(Vocabulary::UNK_ID));
        assert_eq!(v.id(BOS), Some(Vocabulary::BOS_ID));
        assert_eq!(v.id(EOS), Some(Vocabulary::EOS_ID));
    }

    #[test]
    fn encode_examples() {
        let v = Vocabulary::from_tokens(["a"], 1);
        let a = v.id("a").unwrap();
        assert_eq!(v.encode(&["a", "z"]).unwrap(), vec![a, Vocabulary::UNK_ID]);
        assert_eq!(v.encode(&["a", "a"]).unwrap(), vec![a, a]);
        assert!(matches!(v.encode::<&str>(&[]), Err(Error::EmptySequence(_))));
        // markers in raw text are ordinary unknown words
        assert_eq!(v.encode(&[BOS]).unwrap(), vec![Vocabulary::UNK_ID]);
    }

    #[test]
    fn empty_input_rejected() {
        let empty: Vec<Vec<String>> = vec![];
        assert!(matches!(Vocabulary::build(&empty, 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocabulary::build(&docs(&[&["q", "r", "q"]]), 1).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&s).unwrap();
        assert_eq!(v, back);
    }

    proptest! {
        #[test]
        fn decode_encode_replaces_oov_with_unk(
            corpus in prop::collection::vec(prop::collection::vec("[a-e]", 1..8), 1..10),
            query in prop::collection::vec("[a-g]", 1..12),
            min_freq in 1usize..4,
        ) {
            let v = Vocabulary::build(&corpus, min_freq).unwrap();
            for (i, w) in v.words().iter().enumerate() {
                prop_assert_eq!(v.id(w), Some(i as u32));
            }
            let decoded = v.decode(&v.encode(&query).unwrap());
            prop_assert_eq!(decoded.len(), query.len());
            for (d, q) in decoded.iter().zip(&query) {
                if v.id(q).is_some() {
                    prop_assert_eq!(d, q);
                } else {
                    prop_assert_eq!(d.as_str(), UNK);
                }
            }
            let total: std::collections::HashMap<&str, usize> =
                corpus.iter().flatten().fold(Default::default(), |mut m, w| {
                    *m.entry(w.as_str()).or_default() += 1;
                    m
                });
            for w in &v.words()[Vocabulary::RESERVED..] {
                prop_assert!(total[w.as_str()] >= min_freq);
            }
        }
    }
}

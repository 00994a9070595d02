use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::definition::argmax;
use super::tsne::{tsne_project, TsneParams};
use crate::corpus::Vocabulary;
use crate::lda::{Topic, TopicSet};
use crate::Result;

pub const UNLABELED_CLASS: &str = "unlabeled";

/// When a sequence counts as associated with a topic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum ChordRule {
    /// The topic is the sequence's most probable topic within its run.
    #[default]
    Top1,
    /// The sequence gives the topic at least this probability.
    Threshold(f64),
}

/// Topics each sequence is associated with, per row of the sequence-topic matrix.
pub fn associations(set: &TopicSet, rule: ChordRule) -> Vec<Vec<usize>> {
    let ranges = set.run_ranges();
    set.sequence_topic_matrix
        .iter()
        .map(|row| match rule {
            ChordRule::Top1 => ranges
                .iter()
                .map(|r| r.start + argmax(&row[r.clone()]))
                .collect(),
            ChordRule::Threshold(t) => (0..row.len()).filter(|&j| row[j] >= t).collect(),
        })
        .collect()
}

/// `chord[i][j]` counts sequences associated with both topic `i` and topic
/// `j` (`i != j`); the diagonal stays zero.
pub fn chord_matrix(set: &TopicSet, rule: ChordRule) -> Vec<Vec<u64>> {
    let n = set.len();
    let mut chord = vec![vec![0u64; n]; n];
    for assoc in associations(set, rule) {
        for (a, &i) in assoc.iter().enumerate() {
            for &j in &assoc[a + 1..] {
                chord[i][j] += 1;
                chord[j][i] += 1;
            }
        }
    }
    chord
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphWord {
    pub word_id: u32,
    pub word: String,
    pub probability: f64,
    pub class: String,
}

/// Pie-chart glyph of a topic: its most probable words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub topic_id: usize,
    pub run_id: usize,
    /// Word class carrying the most probability mass in the topic.
    pub dominant_class: String,
    pub words: Vec<GlyphWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionParams {
    pub top_words: usize,
    pub tsne: TsneParams,
    #[serde(default)]
    pub chord_rule: ChordRule,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams {
            top_words: 10,
            tsne: TsneParams::default(),
            chord_rule: ChordRule::Top1,
        }
    }
}

/// Everything the grouping UI draws: 2D topic positions, glyphs and the
/// shared-sequence chord matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicProjection {
    pub topics: Vec<Topic>,
    pub coords: Vec<[f64; 2]>,
    pub glyphs: Vec<Glyph>,
    pub chord: Vec<Vec<u64>>,
    /// Number of sequences associated with each topic (arc sizes).
    pub topic_sizes: Vec<u64>,
    pub word_classes: Vec<String>,
    pub tsne_perplexity: f64,
    pub tsne_kl: [f64; 2],
}

pub fn project_topics(
    set: &TopicSet,
    vocab: &Vocabulary,
    word_classes: &HashMap<String, String>,
    params: &ProjectionParams,
) -> Result<TopicProjection> {
    let n = set.len();
    let perplexity = params
        .tsne
        .perplexity
        .min(((n as f64 - 1.0) / 3.0).max(1.0));
    let tsne = tsne_project(
        &set.topic_word_matrix,
        &TsneParams {
            perplexity,
            ..params.tsne.clone()
        },
    )?;

    let class_of = |w: &str| {
        word_classes
            .get(w)
            .cloned()
            .unwrap_or_else(|| UNLABELED_CLASS.to_string())
    };
    let glyphs = set
        .topics
        .iter()
        .map(|t| {
            let row = &set.topic_word_matrix[t.id];
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            let words = order
                .iter()
                .take(params.top_words)
                .map(|&w| {
                    let word = vocab.word(w as u32).unwrap_or("?").to_string();
                    GlyphWord {
                        word_id: w as u32,
                        class: class_of(&word),
                        word,
                        probability: row[w],
                    }
                })
                .collect();
            let mut mass: HashMap<String, f64> = HashMap::new();
            for (w, &p) in row.iter().enumerate() {
                *mass.entry(class_of(vocab.word(w as u32).unwrap_or("?"))).or_default() += p;
            }
            let mut classes: Vec<(String, f64)> = mass.into_iter().collect();
            classes.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            Glyph {
                topic_id: t.id,
                run_id: t.run_id,
                dominant_class: classes[0].0.clone(),
                words,
            }
        })
        .collect();

    let mut topic_sizes = vec![0u64; n];
    for assoc in associations(set, params.chord_rule) {
        for t in assoc {
            topic_sizes[t] += 1;
        }
    }
    let mut classes: BTreeSet<String> = word_classes.values().cloned().collect();
    classes.insert(UNLABELED_CLASS.to_string());

    Ok(TopicProjection {
        topics: set.topics.clone(),
        coords: tsne.coords,
        glyphs,
        chord: chord_matrix(set, params.chord_rule),
        topic_sizes,
        word_classes: classes.into_iter().collect(),
        tsne_perplexity: perplexity,
        tsne_kl: [tsne.initial_kl, tsne.final_kl],
    })
}

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::corpus::{bag_of_words, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentialPattern {
    pub pattern: Vec<u32>,
    /// Number of training sequences containing the pattern.
    pub support: usize,
}

/// Output order: higher support, then shorter, then lexicographically smaller.
fn rank(a: &SequentialPattern, b: &SequentialPattern) -> Ordering {
    b.support
        .cmp(&a.support)
        .then(a.pattern.len().cmp(&b.pattern.len()))
        .then_with(|| a.pattern.cmp(&b.pattern))
}

struct Node {
    pattern: SequentialPattern,
    /// (sequence, position just past the earliest match)
    projection: Vec<(usize, usize)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: the best-ranked pattern is the greatest
    fn cmp(&self, other: &Self) -> Ordering {
        rank(&other.pattern, &self.pattern)
    }
}

fn extensions(
    seqs: &[&[u32]],
    prefix: &[u32],
    projection: &[(usize, usize)],
    min_support: usize,
) -> Vec<Node> {
    let mut next: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for &(s, start) in projection {
        let seq = seqs[s];
        let mut seen = std::collections::BTreeSet::new();
        for (off, &item) in seq[start..].iter().enumerate() {
            if seen.insert(item) {
                next.entry(item).or_default().push((s, start + off + 1));
            }
        }
    }
    next.into_iter()
        .filter(|(_, p)| p.len() >= min_support)
        .map(|(item, projection)| {
            let mut pattern = prefix.to_vec();
            pattern.push(item);
            Node {
                pattern: SequentialPattern {
                    pattern,
                    support: projection.len(),
                },
                projection,
            }
        })
        .collect()
}

/// The `top_k` most frequent subsequence patterns with support at least
/// `min_support`, ordered by support (desc), length (asc), then tokens.
///
/// Prefix-projected growth explored best-first: extending a pattern never
/// raises its support and always lengthens it, so patterns leave the queue
/// in final order and the search stops after `top_k` of them.
pub fn prefixspan_top_k(
    sequences: &[&[u32]],
    top_k: usize,
    min_support: usize,
) -> Result<Vec<SequentialPattern>> {
    if sequences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let min_support = min_support.max(1);
    let root: Vec<(usize, usize)> = (0..sequences.len()).map(|i| (i, 0)).collect();
    let mut heap: BinaryHeap<Node> = extensions(sequences, &[], &root, min_support).into();
    let mut out = Vec::with_capacity(top_k.min(1024));
    while out.len() < top_k {
        let Some(node) = heap.pop() else { break };
        heap.extend(extensions(
            sequences,
            &node.pattern.pattern,
            &node.projection,
            min_support,
        ));
        out.push(node.pattern);
    }
    Ok(out)
}

/// Greedy left-to-right subsequence test.
pub fn is_subsequence(pattern: &[u32], seq: &[u32]) -> bool {
    let mut it = seq.iter();
    pattern.iter().all(|p| it.any(|x| x == p))
}

/// Binary presence vector, one entry per pattern.
pub fn pattern_features(seq: &[u32], patterns: &[SequentialPattern]) -> Vec<f64> {
    patterns
        .iter()
        .map(|p| is_subsequence(&p.pattern, seq) as u8 as f64)
        .collect()
}

/// Bag of words followed by pattern presence.
pub fn bow_sp_features(seq: &[u32], vocab_size: usize, patterns: &[SequentialPattern]) -> Vec<f64> {
    let mut v = bag_of_words(seq, vocab_size);
    v.extend(pattern_features(seq, patterns));
    v
}

/// Patterns as token strings with supports, for inspection.
pub fn patterns_json(patterns: &[SequentialPattern], vocab: &Vocabulary) -> serde_json::Value {
    serde_json::Value::Array(
        patterns
            .iter()
            .map(|p| {
                serde_json::json!({
                    "pattern": vocab.decode(&p.pattern),
                    "support": p.support,
                })
            })
            .collect(),
    )
}

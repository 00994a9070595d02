use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::lda::{fold_in_topicset, FoldInParams, TopicSet};
use crate::{Error, Result};

/// Grouping of global topic ids into `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DefinitionRepr", into = "DefinitionRepr")]
pub struct ClusterDefinition {
    pub name: String,
    pub k: usize,
    assignment: BTreeMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct DefinitionRepr {
    name: String,
    k: usize,
    assignment: Vec<AssignmentEntry>,
}

#[derive(Serialize, Deserialize)]
struct AssignmentEntry {
    topic_id: usize,
    cluster: usize,
}

impl TryFrom<DefinitionRepr> for ClusterDefinition {
    type Error = Error;

    fn try_from(r: DefinitionRepr) -> Result<Self> {
        ClusterDefinition::new(
            r.name,
            r.k,
            r.assignment.into_iter().map(|e| (e.topic_id, e.cluster)),
        )
    }
}

impl From<ClusterDefinition> for DefinitionRepr {
    fn from(d: ClusterDefinition) -> Self {
        DefinitionRepr {
            name: d.name,
            k: d.k,
            assignment: d
                .assignment
                .into_iter()
                .map(|(topic_id, cluster)| AssignmentEntry { topic_id, cluster })
                .collect(),
        }
    }
}

impl ClusterDefinition {
    /// Rejects duplicate topic ids and cluster indices outside `0..k`.
    pub fn new(
        name: impl Into<String>,
        k: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cluster definition needs k >= 1"));
        }
        let mut assignment = BTreeMap::new();
        let mut dups = BTreeSet::new();
        for (topic, cluster) in entries {
            if cluster >= k {
                return Err(Error::invalid(format!(
                    "topic {topic} assigned to cluster {cluster}, but k = {k}"
                )));
            }
            if assignment.insert(topic, cluster).is_some() {
                dups.insert(topic);
            }
        }
        if !dups.is_empty() {
            return Err(Error::DuplicateTopic(dups.into_iter().collect()));
        }
        Ok(ClusterDefinition {
            name: name.into(),
            k,
            assignment,
        })
    }

    /// One cluster per group, in group order.
    pub fn from_groups(name: impl Into<String>, groups: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            name,
            groups.len(),
            groups
                .iter()
                .enumerate()
                .flat_map(|(c, g)| g.iter().map(move |&t| (t, c))),
        )
    }

    /// Every topic in one cluster.
    pub fn single(num_topics: usize) -> Self {
        Self::new("global", 1, (0..num_topics).map(|t| (t, 0))).expect("valid")
    }

    /// Every topic its own cluster.
    pub fn per_topic(num_topics: usize) -> Result<Self> {
        Self::new("per-topic", num_topics, (0..num_topics).map(|t| (t, t)))
    }

    pub fn cluster_of(&self, topic: usize) -> Option<usize> {
        self.assignment.get(&topic).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment.iter().map(|(&t, &c)| (t, c))
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.entries()
            .filter(|&(_, c)| c == cluster)
            .map(|(t, _)| t)
            .collect()
    }

    /// Checks totality over `0..num_topics` and that no cluster is empty.
    pub fn validate(&self, num_topics: usize) -> Result<()> {
        let missing: Vec<usize> = (0..num_topics)
            .filter(|t| !self.assignment.contains_key(t))
            .collect();
        let unknown: Vec<usize> = self
            .assignment
            .keys()
            .copied()
            .filter(|&t| t >= num_topics)
            .collect();
        if !missing.is_empty() || !unknown.is_empty() {
            return Err(Error::NotTotal { missing, unknown });
        }
        let mut used = vec![false; self.k];
        for &c in self.assignment.values() {
            used[c] = true;
        }
        if let Some(cluster) = used.iter().position(|u| !u) {
            return Err(Error::EmptyCluster { cluster });
        }
        Ok(())
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean topic probability per cluster. Probabilities from runs with
/// different topic counts are averaged as they are.
pub fn cluster_scores(topic_probs: &[f64], def: &ClusterDefinition) -> Vec<f64> {
    let mut sum = vec![0.0; def.k];
    let mut n = vec![0usize; def.k];
    for (t, c) in def.entries() {
        if let Some(&p) = topic_probs.get(t) {
            sum[c] += p;
            n[c] += 1;
        }
    }
    sum.iter()
        .zip(&n)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub cluster: usize,
    pub scores: Vec<f64>,
}

impl ClusterAssignment {
    pub fn from_topic_probs(topic_probs: &[f64], def: &ClusterDefinition) -> Self {
        let scores = cluster_scores(topic_probs, def);
        ClusterAssignment {
            cluster: argmax(&scores),
            scores,
        }
    }
}

/// Routes an unseen sequence: fold in against every run, then pick the
/// cluster with the largest average topic probability.
pub fn assign_cluster(
    tokens: &[u32],
    set: &TopicSet,
    def: &ClusterDefinition,
    params: &FoldInParams,
) -> ClusterAssignment {
    if def.k == 1 {
        return ClusterAssignment {
            cluster: 0,
            scores: vec![1.0],
        };
    }
    ClusterAssignment::from_topic_probs(&fold_in_topicset(tokens, set, params), def)
}

/// Cluster of a training sequence under a single LDA run: its most probable topic.
pub fn lda_cluster_assign(theta: &[f64]) -> usize {
    argmax(theta)
}

/// Disjoint cover of a corpus by `k` subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub subsets: Vec<Vec<String>>,
    /// Cluster of each corpus sequence, in corpus order.
    pub labels: Vec<usize>,
}

impl Partition {
    /// Builds the partition from per-sequence cluster labels.
    pub fn from_labels(ids: &[&str], labels: Vec<usize>, k: usize) -> Self {
        let mut subsets = vec![Vec::new(); k];
        for (id, &c) in ids.iter().zip(&labels) {
            subsets[c].push(id.to_string());
        }
        let p = Partition { subsets, labels };
        p.assert_cover(ids);
        p
    }

    pub fn k(&self) -> usize {
        self.subsets.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(Vec::len).collect()
    }

    /// Corpus positions per subset.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    fn assert_cover(&self, ids: &[&str]) {
        let mut all: Vec<&str> = self.subsets.iter().flatten().map(String::as_str).collect();
        all.sort_unstable();
        let mut expected = ids.to_vec();
        expected.sort_unstable();
        assert_eq!(all, expected, "partition must be a disjoint cover of the corpus");
    }
}

/// Partitions the training corpus using the sequence-topic rows stored in the
/// topic set (no fold-in).
pub fn partition_corpus(
    corpus: &Corpus,
    set: &TopicSet,
    def: &ClusterDefinition,
) -> Result<Partition> {
    def.validate(set.len())?;
    if set.sequence_ids.len() != corpus.len()
        || set
            .sequence_ids
            .iter()
            .zip(&corpus.sequences)
            .any(|(a, s)| a != &s.id)
    {
        return Err(Error::Malformed(
            "topic set was not fitted on this corpus".into(),
        ));
    }
    let labels = set
        .sequence_topic_matrix
        .iter()
        .map(|row| ClusterAssignment::from_topic_probs(row, def).cluster)
        .collect();
    let ids: Vec<&str> = corpus.sequences.iter().map(|s| s.id.as_str()).collect();
    Ok(Partition::from_labels(&ids, labels, def.k))
}

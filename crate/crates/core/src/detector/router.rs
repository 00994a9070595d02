use serde::{Deserialize, Serialize};

use crate::clustering::{
    assign_cluster, kmeans, nearest_centroid, partition_corpus, select_k_by_silhouette,
    ClusterDefinition, Partition,
};
use crate::corpus::{bag_of_words, Corpus};
use crate::lda::{FoldInParams, TopicSet};
use crate::{par, Error, Result};

/// Decides which cluster, and therefore which model, handles a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Router {
    /// One cluster holding everything.
    Single,
    /// Topic groups over an LDA ensemble. Training sequences use their
    /// stored topic rows, new ones are folded in.
    Informed {
        topic_set: TopicSet,
        definition: ClusterDefinition,
        fold_in: FoldInParams,
    },
    /// Nearest centroid over term-frequency vectors.
    KMeans {
        centroids: Vec<Vec<f64>>,
        vocab_size: usize,
    },
}

/// Bag of words divided by sequence length.
pub fn tf_features(tokens: &[u32], vocab_size: usize) -> Vec<f64> {
    let mut v = bag_of_words(tokens, vocab_size);
    let n = tokens.len().max(1) as f64;
    for x in v.iter_mut() {
        *x /= n;
    }
    v
}

impl Router {
    pub fn informed(
        topic_set: TopicSet,
        definition: ClusterDefinition,
        fold_in: FoldInParams,
    ) -> Result<Self> {
        definition.validate(topic_set.len())?;
        Ok(Router::Informed {
            topic_set,
            definition,
            fold_in,
        })
    }

    /// One cluster per topic of a single LDA run: a sequence goes to its most
    /// probable topic.
    pub fn lda_argmax(topic_set: TopicSet, fold_in: FoldInParams) -> Result<Self> {
        if topic_set.runs.len() != 1 {
            return Err(Error::invalid(format!(
                "argmax routing needs a single LDA run, got {}",
                topic_set.runs.len()
            )));
        }
        let def = ClusterDefinition::per_topic(topic_set.len())?;
        Router::informed(topic_set, def, fold_in)
    }

    /// Fits k-means on the term-frequency vectors of `corpus`. With `k` unset,
    /// k is picked by silhouette over `2..=10`; the scores are returned.
    pub fn kmeans(
        corpus: &Corpus,
        k: Option<usize>,
        seed: u64,
        max_iters: usize,
    ) -> Result<(Self, Vec<(usize, f64)>)> {
        let v = corpus.vocabulary.len();
        let features: Vec<Vec<f64>> = par::map(&corpus.sequences, |s| tf_features(&s.tokens, v));
        let (k, scores) = match k {
            Some(k) => (k, Vec::new()),
            None => {
                let hi = 10.min(features.len().saturating_sub(1));
                select_k_by_silhouette(&features, 2..=hi, seed, max_iters)?
            }
        };
        let fit = kmeans(&features, k, seed, max_iters)?;
        Ok((
            Router::KMeans {
                centroids: fit.centroids,
                vocab_size: v,
            },
            scores,
        ))
    }

    pub fn k(&self) -> usize {
        match self {
            Router::Single => 1,
            Router::Informed { definition, .. } => definition.k,
            Router::KMeans { centroids, .. } => centroids.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Router::Single => "single",
            Router::Informed { .. } => "informed",
            Router::KMeans { .. } => "kmeans",
        }
    }

    /// Cluster of an unseen sequence.
    pub fn route(&self, tokens: &[u32]) -> usize {
        match self {
            Router::Single => 0,
            Router::Informed {
                topic_set,
                definition,
                fold_in,
            } => assign_cluster(tokens, topic_set, definition, fold_in).cluster,
            Router::KMeans {
                centroids,
                vocab_size,
            } => nearest_centroid(&tf_features(tokens, *vocab_size), centroids),
        }
    }

    /// Splits a training corpus into the router's clusters.
    pub fn partition(&self, corpus: &Corpus) -> Result<Partition> {
        let ids: Vec<&str> = corpus.sequences.iter().map(|s| s.id.as_str()).collect();
        match self {
            Router::Single => Ok(Partition::from_labels(&ids, vec![0; ids.len()], 1)),
            Router::Informed {
                topic_set,
                definition,
                ..
            } => partition_corpus(corpus, topic_set, definition),
            Router::KMeans { .. } => {
                let labels = par::map(&corpus.sequences, |s| self.route(&s.tokens));
                Ok(Partition::from_labels(&ids, labels, self.k()))
            }
        }
    }
}

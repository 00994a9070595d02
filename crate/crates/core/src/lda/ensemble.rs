use std::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gibbs::{fit_lda, fold_in, FoldInParams, LdaParams, LdaRun};
use crate::corpus::Corpus;
use crate::{par, rng, Error, Result};

/// Which topic counts the ensemble fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleSpec {
    Fixed(Vec<usize>),
    /// `num_runs` runs with K drawn uniformly from `k_min..=k_max`.
    Random {
        num_runs: usize,
        k_min: usize,
        k_max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub spec: EnsembleSpec,
    /// Symmetric document-topic prior; `None` means `50 / K` per run.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn fixed(ks: Vec<usize>, seed: u64) -> Self {
        EnsembleParams {
            spec: EnsembleSpec::Fixed(ks),
            alpha: None,
            beta: 0.01,
            iterations: 300,
            burn_in: 100,
            seed,
        }
    }

    /// Topic counts of each run, in run order.
    pub fn topic_counts(&self) -> Result<Vec<usize>> {
        match &self.spec {
            EnsembleSpec::Fixed(ks) => {
                if ks.is_empty() {
                    return Err(Error::invalid("ensemble needs at least one run"));
                }
                Ok(ks.clone())
            }
            &EnsembleSpec::Random {
                num_runs,
                k_min,
                k_max,
            } => {
                if num_runs == 0 || k_min == 0 || k_min > k_max {
                    return Err(Error::invalid(
                        "random ensemble needs num_runs >= 1 and 1 <= k_min <= k_max",
                    ));
                }
                let mut r = rng::seeded(self.seed);
                Ok((0..num_runs).map(|_| r.random_range(k_min..=k_max)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: usize,
    pub run_id: usize,
    pub local_index: usize,
}

/// Topics pooled from several LDA runs.
///
/// Global topic ids are ordered by run, then by topic index within the run.
/// Each row of `sequence_topic_matrix` holds one distribution per run side by
/// side, so the full row is not itself a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSet {
    pub topics: Vec<Topic>,
    pub topic_word_matrix: Vec<Vec<f64>>,
    pub sequence_topic_matrix: Vec<Vec<f64>>,
    pub sequence_ids: Vec<String>,
    pub runs: Vec<LdaRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EnsembleParams>,
}

impl TopicSet {
    /// Assembles a topic set from fitted runs. `sequence_ids` label the rows
    /// of each run's theta.
    pub fn from_runs(runs: Vec<LdaRun>, sequence_ids: Vec<String>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::invalid("topic set needs at least one run"));
        }
        let mut topics = Vec::new();
        let mut topic_word_matrix = Vec::new();
        for (r, run) in runs.iter().enumerate() {
            if run.theta.len() != sequence_ids.len() {
                return Err(Error::LengthMismatch {
                    what: "run theta rows vs sequences",
                    left: run.theta.len(),
                    right: sequence_ids.len(),
                });
            }
            for (k, row) in run.phi.iter().enumerate() {
                topics.push(Topic {
                    id: topics.len(),
                    run_id: r,
                    local_index: k,
                });
                topic_word_matrix.push(row.clone());
            }
        }
        let sequence_topic_matrix = (0..sequence_ids.len())
            .map(|i| {
                runs.iter()
                    .flat_map(|run| run.theta[i].iter().copied())
                    .collect()
            })
            .collect();
        Ok(TopicSet {
            topics,
            topic_word_matrix,
            sequence_topic_matrix,
            sequence_ids,
            runs,
            params: None,
        })
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.topic_word_matrix.first().map_or(0, Vec::len)
    }

    /// Global topic id range covered by each run.
    pub fn run_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.runs
            .iter()
            .map(|r| {
                let range = start..start + r.topics;
                start += r.topics;
                range
            })
            .collect()
    }
}

/// Fits every run of the ensemble and pools the topics. Run `r` is seeded
/// with `seed + r`; runs are independent and may execute in parallel.
pub fn run_ensemble(corpus: &Corpus, params: &EnsembleParams) -> Result<TopicSet> {
    let ks = params.topic_counts()?;
    let docs = corpus.token_lists();
    let vocab_size = corpus.vocabulary.len();
    let runs = par::try_map_range(ks.len(), |r| {
        let p = LdaParams {
            topics: ks[r],
            alpha: params.alpha,
            beta: params.beta,
            iterations: params.iterations,
            burn_in: params.burn_in,
        };
        fit_lda(&docs, vocab_size, &p, r, rng::derive(params.seed, r as u64)).map_err(|e| {
            Error::Run {
                run: r,
                source: Box::new(e),
            }
        })
    })?;
    let ids = corpus.sequences.iter().map(|s| s.id.clone()).collect();
    let mut set = TopicSet::from_runs(runs, ids)?;
    set.params = Some(params.clone());
    Ok(set)
}

/// Fold-in against every run, concatenated in global topic order. Run `r`
/// uses seed `params.seed + r`.
pub fn fold_in_topicset(tokens: &[u32], set: &TopicSet, params: &FoldInParams) -> Vec<f64> {
    par::map(&set.runs, |run| {
        fold_in(
            tokens,
            run,
            params.iterations,
            rng::derive(params.seed, run.run_id as u64),
        )
    })
    .into_iter()
    .flatten()
    .collect()
}

use serde::{Deserialize, Serialize};

use super::Router;
use crate::clustering::Partition;
use crate::corpus::{Corpus, Label, Vocabulary};
use crate::lstm::{train, LstmLanguageModel, ModelDims, TrainConfig, TrainReport};
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub dims: ModelDims,
    /// Cluster `i` is initialized and shuffled with `train.seed + i`.
    pub train: TrainConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            dims: ModelDims::default(),
            train: TrainConfig::default(),
        }
    }
}

impl DetectorConfig {
    pub fn cluster_seed(&self, cluster: usize) -> u64 {
        rng::derive(self.train.seed, cluster as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub cluster: usize,
    pub perplexity: f64,
}

/// A router plus one language model per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyDetector {
    pub vocabulary: Vocabulary,
    pub router: Router,
    pub models: Vec<LstmLanguageModel>,
    pub config: DetectorConfig,
    /// Training sequences per cluster.
    pub cluster_sizes: Vec<usize>,
    pub reports: Vec<TrainReport>,
}

/// Partitions `corpus` with `router` and trains one model per subset.
///
/// Every sequence must be labeled normal or unlabeled, and every cluster
/// must receive at least one sequence.
pub fn train_detector(
    corpus: &Corpus,
    router: Router,
    config: &DetectorConfig,
) -> Result<NoveltyDetector> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(s) = corpus.sequences.iter().find(|s| s.label == Label::Novel) {
        return Err(Error::NovelInTraining(s.id.clone()));
    }
    config.train.validate()?;
    let partition: Partition = router.partition(corpus)?;
    let subsets = partition.indices();
    if let Some(cluster) = subsets.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCluster { cluster });
    }
    let v = corpus.vocabulary.len();
    let trained = par::try_map_range(subsets.len(), |i| {
        let seed = config.cluster_seed(i);
        let mut model = LstmLanguageModel::init(v, config.dims, seed)?;
        let seqs: Vec<&[u32]> = subsets[i]
            .iter()
            .map(|&j| corpus.sequences[j].tokens.as_slice())
            .collect();
        let cfg = TrainConfig {
            seed,
            ..config.train.clone()
        };
        let report = train(&mut model, &seqs, &cfg)?;
        log::info!(
            "cluster {i}: {} sequences, final loss {:.4}",
            seqs.len(),
            report.epoch_losses.last().copied().unwrap_or(f64::NAN)
        );
        Ok::<_, Error>((model, report))
    })?;
    let (models, reports) = trained.into_iter().unzip();
    Ok(NoveltyDetector {
        vocabulary: corpus.vocabulary.clone(),
        router,
        models,
        config: config.clone(),
        cluster_sizes: partition.sizes(),
        reports,
    })
}

impl NoveltyDetector {
    pub fn k(&self) -> usize {
        self.models.len()
    }

    /// Routes the sequence and scores it with that cluster's model only.
    pub fn score(&self, tokens: &[u32]) -> Result<Score> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence(None));
        }
        let cluster = self.router.route(tokens);
        let perplexity = self.models[cluster].perplexity(tokens)?;
        Ok(Score {
            cluster,
            perplexity,
        })
    }

    pub fn score_batch(&self, sequences: &[&[u32]]) -> Result<Vec<Score>> {
        par::map(sequences, |s| self.score(s)).into_iter().collect()
    }

    pub fn score_corpus(&self, corpus: &Corpus) -> Result<Vec<Score>> {
        self.score_batch(&corpus.token_lists())
    }
}

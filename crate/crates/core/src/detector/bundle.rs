//! Detector bundle directory:
//!
//! ```text
//! manifest.json            format version, router kind, dims, training config,
//!                          per-cluster seeds and sizes, sha256 of every file
//! vocabulary.json
//! cluster_definition.json  informed routing only
//! topicset.json            informed routing only
//! centroids.json           k-means routing only
//! model_<i>.ckpt           one per cluster
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DetectorConfig, NoveltyDetector, Router};
use crate::clustering::ClusterDefinition;
use crate::corpus::Vocabulary;
use crate::lda::{FoldInParams, TopicSet};
use crate::lstm::{LstmLanguageModel, TrainReport};
use crate::{Error, Result};

pub const BUNDLE_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub version: u32,
    pub router: String,
    pub k: usize,
    pub vocab_size: usize,
    pub config: DetectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_in: Option<FoldInParams>,
    pub seeds: Vec<u64>,
    pub cluster_sizes: Vec<usize>,
    pub reports: Vec<TrainReport>,
    /// File name to sha256 of its contents.
    pub files: BTreeMap<String, String>,
}

impl BundleManifest {
    pub fn hash_of(&self, file: &str) -> Option<&str> {
        self.files.get(file).map(String::as_str)
    }
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(value)?)
}

impl NoveltyDetector {
    /// Serialized bundle files, manifest last.
    pub fn bundle_files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut files: Vec<(String, Vec<u8>)> =
            vec![("vocabulary.json".into(), json(&self.vocabulary)?)];
        let mut fold = None;
        match &self.router {
            Router::Single => {}
            Router::Informed {
                topic_set,
                definition,
                fold_in,
            } => {
                files.push(("cluster_definition.json".into(), json(definition)?));
                files.push(("topicset.json".into(), json(topic_set)?));
                fold = Some(*fold_in);
            }
            Router::KMeans {
                centroids,
                vocab_size,
            } => files.push((
                "centroids.json".into(),
                json(&serde_json::json!({ "vocab_size": vocab_size, "centroids": centroids }))?,
            )),
        }
        for (i, m) in self.models.iter().enumerate() {
            files.push((format!("model_{i}.ckpt"), m.to_bytes()));
        }
        let manifest = BundleManifest {
            version: BUNDLE_VERSION,
            router: self.router.kind().into(),
            k: self.k(),
            vocab_size: self.vocabulary.len(),
            config: self.config.clone(),
            fold_in: fold,
            seeds: (0..self.k()).map(|i| self.config.cluster_seed(i)).collect(),
            cluster_sizes: self.cluster_sizes.clone(),
            reports: self.reports.clone(),
            files: files
                .iter()
                .map(|(n, b)| (n.clone(), sha256_hex(b)))
                .collect(),
        };
        files.push(("manifest.json".into(), json(&manifest)?));
        Ok(files)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<BundleManifest> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let files = self.bundle_files()?;
        for (name, bytes) in &files {
            fs::write(dir.join(name), bytes)?;
        }
        let manifest = &files.last().expect("manifest").1;
        Ok(serde_json::from_slice(manifest)?)
    }

    /// Loads a bundle, verifying every file against the manifest hashes.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: BundleManifest =
            serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        if manifest.version != BUNDLE_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported bundle version {}",
                manifest.version
            )));
        }
        let read = |name: &str| -> Result<Vec<u8>> {
            let bytes = fs::read(dir.join(name))?;
            match manifest.hash_of(name) {
                Some(h) if h == sha256_hex(&bytes) => Ok(bytes),
                Some(_) => Err(Error::Checkpoint(format!("{name}: content hash mismatch"))),
                None => Err(Error::Checkpoint(format!("{name}: not listed in manifest"))),
            }
        };
        let vocabulary: Vocabulary = serde_json::from_slice(&read("vocabulary.json")?)?;
        let router = match manifest.router.as_str() {
            "single" => Router::Single,
            "informed" => {
                let definition: ClusterDefinition =
                    serde_json::from_slice(&read("cluster_definition.json")?)?;
                let topic_set: TopicSet = serde_json::from_slice(&read("topicset.json")?)?;
                let fold_in: FoldInParams = manifest
                    .fold_in
                    .ok_or_else(|| Error::Checkpoint("informed bundle without fold-in".into()))?;
                Router::informed(topic_set, definition, fold_in)?
            }
            "kmeans" => {
                #[derive(Deserialize)]
                struct Centroids {
                    vocab_size: usize,
                    centroids: Vec<Vec<f64>>,
                }
                let c: Centroids = serde_json::from_slice(&read("centroids.json")?)?;
                Router::KMeans {
                    centroids: c.centroids,
                    vocab_size: c.vocab_size,
                }
            }
            other => return Err(Error::Checkpoint(format!("unknown router `{other}`"))),
        };
        let models = (0..manifest.k)
            .map(|i| LstmLanguageModel::from_bytes(&read(&format!("model_{i}.ckpt"))?))
            .collect::<Result<Vec<_>>>()?;
        if router.k() != models.len() {
            return Err(Error::Checkpoint("router and model count disagree".into()));
        }
        Ok(NoveltyDetector {
            vocabulary,
            router,
            models,
            config: manifest.config,
            cluster_sizes: manifest.cluster_sizes,
            reports: manifest.reports,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Label, LabeledSequence};
    use crate::detector::train_detector;
    use crate::lstm::{ModelDims, TrainConfig};

    #[test]
    fn bundle_round_trip_and_tamper_detection() {
        let vocab = Vocabulary::from_tokens(["a", "b"].map(String::from), 1);
        let seqs = (0..8)
            .map(|i| LabeledSequence::new(i.to_string(), vec![3 + (i % 2) as u32, 4], Label::Normal))
            .collect();
        let c = Corpus::new(vocab, seqs).unwrap();
        let cfg = DetectorConfig {
            dims: ModelDims {
                embed_dim: 2,
                hidden_dim: 3,
            },
            train: TrainConfig {
                epochs: 1,
                ..Default::default()
            },
        };
        let (router, _) = Router::kmeans(&c, Some(2), 0, 20).unwrap();
        let det = train_detector(&c, router, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = det.save(dir.path()).unwrap();
        assert_eq!(manifest.k, 2);
        assert_eq!(manifest.seeds, vec![0, 1]);
        let back = NoveltyDetector::load(dir.path()).unwrap();
        assert_eq!(back, det);

        fs::write(dir.path().join("model_1.ckpt"), b"x").unwrap();
        assert!(matches!(
            NoveltyDetector::load(dir.path()),
            Err(Error::Checkpoint(_))
        ));
    }
}

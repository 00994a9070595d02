//! On-disk project store.
//!
//! ```text
//! <root>/jobs/<job-id>.json
//! <root>/projects/<project-id>/
//!     project.json
//!     corpus.json
//!     topicsets/<hash>.json
//!     definitions/<hash>.json
//!     detectors/<detector-id>/      detector bundle
//! ```
//!
//! Files are written to a temporary name and renamed into place.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use seqnovelty::clustering::ClusterDefinition;
use seqnovelty::corpus::Corpus;
use seqnovelty::detector::{sha256_hex, NoveltyDetector};
use seqnovelty::lda::TopicSet;
use uuid::Uuid;

use crate::jobs::Job;
use crate::{ServiceError, ServiceResult};

const ID_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitionRecord {
    pub id: String,
    pub name: String,
    pub k: usize,
    pub hash: String,
    pub topicset_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRecord {
    pub id: String,
    pub router: String,
    pub k: usize,
    #[serde(default)]
    pub definition_id: Option<String>,
    #[serde(default)]
    pub definition_hash: Option<String>,
    #[serde(default)]
    pub topicset_hash: Option<String>,
    pub manifest_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub name: String,
    pub seed: u64,
    pub corpus_hash: String,
    pub sequences: usize,
    pub vocab_size: usize,
    /// Most recently fitted topic set.
    #[serde(default)]
    pub topicset_hash: Option<String>,
    #[serde(default)]
    pub topicsets: Vec<String>,
    #[serde(default)]
    pub definitions: Vec<DefinitionRecord>,
    #[serde(default)]
    pub detectors: Vec<DetectorRecord>,
    #[serde(default)]
    pub word_classes: HashMap<String, String>,
}

fn short(hash: &str) -> String {
    hash[..ID_LEN].to_string()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".tmp-{}", Uuid::new_v4()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn pretty<T: Serialize>(value: &T) -> ServiceResult<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(value)?)
}

pub struct Store {
    root: PathBuf,
    /// Serializes read-modify-write cycles on project records.
    writer: Mutex<()>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> ServiceResult<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("projects"))?;
        fs::create_dir_all(root.join("jobs"))?;
        Ok(Store {
            root,
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_dir(&self, id: &str) -> ServiceResult<PathBuf> {
        if !valid_id(id) {
            return Err(ServiceError::NotFound(format!("project `{id}`")));
        }
        let dir = self.root.join("projects").join(id);
        if !dir.join("project.json").is_file() {
            return Err(ServiceError::NotFound(format!("project `{id}`")));
        }
        Ok(dir)
    }

    /// Creates a project, or returns the existing one for an identical
    /// corpus, seed and word-class map.
    pub fn create_project(
        &self,
        name: &str,
        corpus: &Corpus,
        seed: u64,
        word_classes: HashMap<String, String>,
    ) -> ServiceResult<(ProjectRecord, bool)> {
        let corpus_bytes = pretty(corpus)?;
        let corpus_hash = sha256_hex(&corpus_bytes);
        let mut classes: Vec<_> = word_classes.iter().collect();
        classes.sort();
        let key = serde_json::to_vec(&(&corpus_hash, seed, &classes))?;
        let id = short(&sha256_hex(&key));
        let _w = self.writer.lock().expect("store lock");
        let dir = self.root.join("projects").join(&id);
        if dir.join("project.json").is_file() {
            return Ok((self.read_record(&dir)?, false));
        }
        write_atomic(&dir.join("corpus.json"), &corpus_bytes)?;
        let rec = ProjectRecord {
            id,
            name: name.to_string(),
            seed,
            corpus_hash,
            sequences: corpus.len(),
            vocab_size: corpus.vocabulary.len(),
            topicset_hash: None,
            topicsets: Vec::new(),
            definitions: Vec::new(),
            detectors: Vec::new(),
            word_classes,
        };
        write_atomic(&dir.join("project.json"), &pretty(&rec)?)?;
        Ok((rec, true))
    }

    fn read_record(&self, dir: &Path) -> ServiceResult<ProjectRecord> {
        Ok(serde_json::from_slice(&fs::read(dir.join("project.json"))?)?)
    }

    pub fn project(&self, id: &str) -> ServiceResult<ProjectRecord> {
        self.read_record(&self.project_dir(id)?)
    }

    fn update<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut ProjectRecord, &Path) -> ServiceResult<R>,
    ) -> ServiceResult<R> {
        let dir = self.project_dir(id)?;
        let _w = self.writer.lock().expect("store lock");
        let mut rec = self.read_record(&dir)?;
        let out = f(&mut rec, &dir)?;
        write_atomic(&dir.join("project.json"), &pretty(&rec)?)?;
        Ok(out)
    }

    pub fn corpus(&self, id: &str) -> ServiceResult<Corpus> {
        let dir = self.project_dir(id)?;
        Ok(serde_json::from_slice(&fs::read(dir.join("corpus.json"))?)?)
    }

    /// Stores a topic set and makes it the project's current one.
    pub fn add_topicset(&self, id: &str, set: &TopicSet) -> ServiceResult<String> {
        let bytes = pretty(set)?;
        let hash = sha256_hex(&bytes);
        self.update(id, |rec, dir| {
            write_atomic(&dir.join("topicsets").join(format!("{hash}.json")), &bytes)?;
            if !rec.topicsets.contains(&hash) {
                rec.topicsets.push(hash.clone());
            }
            rec.topicset_hash = Some(hash.clone());
            Ok(hash.clone())
        })
    }

    pub fn topicset_bytes(&self, id: &str, hash: Option<&str>) -> ServiceResult<(String, Vec<u8>)> {
        let rec = self.project(id)?;
        let hash = match hash {
            Some(h) => h.to_string(),
            None => rec
                .topicset_hash
                .clone()
                .ok_or_else(|| ServiceError::NotFound(format!("topic set of project `{id}`")))?,
        };
        if !rec.topicsets.contains(&hash) {
            return Err(ServiceError::NotFound(format!("topic set `{hash}`")));
        }
        let path = self.project_dir(id)?.join("topicsets").join(format!("{hash}.json"));
        Ok((hash, fs::read(path)?))
    }

    pub fn topicset(&self, id: &str, hash: Option<&str>) -> ServiceResult<(String, TopicSet)> {
        let (hash, bytes) = self.topicset_bytes(id, hash)?;
        Ok((hash, serde_json::from_slice(&bytes)?))
    }

    /// Validates `def` against the current topic set and stores it.
    pub fn add_definition(&self, id: &str, def: &ClusterDefinition) -> ServiceResult<DefinitionRecord> {
        let (topicset_hash, set) = self.topicset(id, None)?;
        def.validate(set.len())?;
        let bytes = pretty(def)?;
        let hash = sha256_hex(&bytes);
        let record = DefinitionRecord {
            id: short(&sha256_hex(format!("{hash}:{topicset_hash}").as_bytes())),
            name: def.name.clone(),
            k: def.k,
            hash: hash.clone(),
            topicset_hash,
        };
        self.update(id, |rec, dir| {
            write_atomic(&dir.join("definitions").join(format!("{hash}.json")), &bytes)?;
            if !rec.definitions.iter().any(|d| d.id == record.id) {
                rec.definitions.push(record.clone());
            }
            Ok(record.clone())
        })
    }

    pub fn definition(&self, id: &str, def_id: &str) -> ServiceResult<(DefinitionRecord, ClusterDefinition)> {
        let rec = self.project(id)?;
        let d = rec
            .definitions
            .iter()
            .find(|d| d.id == def_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("cluster definition `{def_id}`")))?;
        let path = self.project_dir(id)?.join("definitions").join(format!("{}.json", d.hash));
        Ok((d, serde_json::from_slice(&fs::read(path)?)?))
    }

    /// Content-derived id for a detector trained from `key`.
    pub fn detector_id(project: &str, key: &serde_json::Value) -> String {
        short(&sha256_hex(format!("{project}:{key}").as_bytes()))
    }

    /// Writes a detector bundle under `record.id` and registers it.
    pub fn add_detector(
        &self,
        id: &str,
        detector: &NoveltyDetector,
        mut record: DetectorRecord,
    ) -> ServiceResult<DetectorRecord> {
        if !valid_id(&record.id) {
            return Err(ServiceError::Internal("invalid detector id".into()));
        }
        let dir = self.project_dir(id)?.join("detectors");
        fs::create_dir_all(&dir)?;
        let tmp = dir.join(format!(".tmp-{}", Uuid::new_v4()));
        detector.save(&tmp)?;
        record.manifest_hash = sha256_hex(&fs::read(tmp.join("manifest.json"))?);
        self.update(id, |rec, _| {
            let target = dir.join(&record.id);
            if target.exists() {
                fs::remove_dir_all(&target)?;
            }
            fs::rename(&tmp, &target)?;
            rec.detectors.retain(|d| d.id != record.id);
            rec.detectors.push(record.clone());
            Ok(record.clone())
        })
    }

    /// Finds a detector bundle directory by id across projects.
    pub fn detector_dir(&self, detector_id: &str) -> ServiceResult<PathBuf> {
        if valid_id(detector_id) {
            for entry in fs::read_dir(self.root.join("projects"))? {
                let dir = entry?.path().join("detectors").join(detector_id);
                if dir.join("manifest.json").is_file() {
                    return Ok(dir);
                }
            }
        }
        Err(ServiceError::NotFound(format!("detector `{detector_id}`")))
    }

    pub fn save_job(&self, job: &Job) -> ServiceResult<()> {
        write_atomic(&self.root.join("jobs").join(format!("{}.json", job.id)), &pretty(job)?)?;
        Ok(())
    }

    pub fn load_jobs(&self) -> ServiceResult<Vec<Job>> {
        let mut jobs = Vec::new();
        for entry in fs::read_dir(self.root.join("jobs"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                jobs.push(serde_json::from_slice(&fs::read(path)?)?);
            }
        }
        Ok(jobs)
    }

    /// Recomputes every content hash recorded for a project and reports the
    /// first mismatch.
    pub fn verify(&self, id: &str) -> ServiceResult<()> {
        let rec = self.project(id)?;
        let dir = self.project_dir(id)?;
        let check = |path: PathBuf, expected: &str| -> ServiceResult<()> {
            let actual = sha256_hex(&fs::read(&path)?);
            if actual != expected {
                return Err(ServiceError::Conflict(format!(
                    "{} does not match its recorded hash",
                    path.display()
                )));
            }
            Ok(())
        };
        check(dir.join("corpus.json"), &rec.corpus_hash)?;
        for h in &rec.topicsets {
            check(dir.join("topicsets").join(format!("{h}.json")), h)?;
        }
        for d in &rec.definitions {
            check(dir.join("definitions").join(format!("{}.json", d.hash)), &d.hash)?;
            if !rec.topicsets.contains(&d.topicset_hash) {
                return Err(ServiceError::Conflict(format!("definition {} lost its topic set", d.id)));
            }
        }
        for d in &rec.detectors {
            let bundle = dir.join("detectors").join(&d.id);
            check(bundle.join("manifest.json"), &d.manifest_hash)?;
            NoveltyDetector::load(&bundle)?;
            if let Some(h) = &d.topicset_hash {
                if !rec.topicsets.contains(h) {
                    return Err(ServiceError::Conflict(format!("detector {} lost its topic set", d.id)));
                }
            }
            if let Some(h) = &d.definition_hash {
                if !rec.definitions.iter().any(|x| &x.hash == h) {
                    return Err(ServiceError::Conflict(format!("detector {} lost its definition", d.id)));
                }
            }
        }
        Ok(())
    }
}

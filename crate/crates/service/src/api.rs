//! HTTP endpoints.
//!
//! | method | path                          | body / result                         |
//! |--------|-------------------------------|---------------------------------------|
//! | POST   | /projects                     | corpus → project record               |
//! | GET    | /projects/{id}                | project record                        |
//! | POST   | /projects/{id}/lda            | ensemble params → job                 |
//! | GET    | /projects/{id}/topics         | topic projection (UI payload)         |
//! | GET    | /projects/{id}/topicset       | current topic set                     |
//! | POST   | /projects/{id}/clusters       | cluster definition → definition record|
//! | GET    | /projects/{id}/clusters       | definition records                    |
//! | GET    | /projects/{id}/clusters/{def} | cluster definition                    |
//! | POST   | /projects/{id}/train          | router + config → job                 |
//! | GET    | /detectors/{id}               | bundle manifest                       |
//! | POST   | /detectors/{id}/score         | sequences → scores                    |
//! | POST   | /detectors/{id}/evaluate      | labeled sequences → evaluation report |
//! | GET    | /jobs/{id}                    | job                                   |

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use seqnovelty::clustering::{project_topics, ClusterDefinition, ProjectionParams};
use seqnovelty::corpus::{parse_labels, parse_sequences, Corpus, Label};
use seqnovelty::detector::{
    evaluate, train_detector, DetectorConfig, EvalReport, NoveltyDetector, Router, Score,
    ScoredSequence, ThresholdPolicy,
};
use seqnovelty::lda::{run_ensemble, EnsembleParams, EnsembleSpec, FoldInParams};
use tower_http::services::ServeDir;
use uuid::Uuid;

use crate::jobs::{Job, JobKind, JobState};
use crate::store::DetectorRecord;
use crate::{ServiceConfig, ServiceError, ServiceResult, Store};

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: Store,
    config: ServiceConfig,
    jobs: Mutex<HashMap<Uuid, Job>>,
    project_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    detectors: Mutex<HashMap<String, Arc<NoveltyDetector>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> ServiceResult<Self> {
        let store = Store::open(&config.root)?;
        let mut jobs = HashMap::new();
        for mut job in store.load_jobs()? {
            // a job still pending from an earlier process will never finish
            if job.finish(Err("interrupted by service restart".into())) {
                store.save_job(&job)?;
            }
            jobs.insert(job.id, job);
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                store,
                config,
                jobs: Mutex::new(jobs),
                project_locks: Mutex::new(HashMap::new()),
                detectors: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn job(&self, id: Uuid) -> Option<Job> {
        self.inner.jobs.lock().expect("jobs lock").get(&id).cloned()
    }

    fn update_job(&self, id: Uuid, f: impl FnOnce(&mut Job) -> bool) {
        let snapshot = {
            let mut jobs = self.inner.jobs.lock().expect("jobs lock");
            let Some(job) = jobs.get_mut(&id) else { return };
            if !f(job) {
                return;
            }
            job.clone()
        };
        if let Err(e) = self.store().save_job(&snapshot) {
            log::error!("persisting job {id}: {e}");
        }
    }

    fn project_lock(&self, project: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.inner
            .project_locks
            .lock()
            .expect("lock table")
            .entry(project.to_string())
            .or_default()
            .clone()
    }

    /// Queues `work` as a job. Jobs of one project run one after another
    /// unless the service is configured otherwise.
    fn spawn_job<F>(&self, project: &str, kind: JobKind, work: F) -> ServiceResult<Job>
    where
        F: FnOnce(&AppState, &Progress) -> ServiceResult<serde_json::Value> + Send + 'static,
    {
        let job = Job::new(project, kind);
        self.store().save_job(&job)?;
        self.inner
            .jobs
            .lock()
            .expect("jobs lock")
            .insert(job.id, job.clone());
        let state = self.clone();
        let id = job.id;
        let lock = self.project_lock(project);
        let serial = self.inner.config.serial_jobs;
        tokio::spawn(async move {
            let _guard = if serial { Some(lock.lock().await) } else { None };
            state.update_job(id, |j| j.advance(JobState::Running, 0.0));
            let worker = state.clone();
            let outcome = tokio::task::spawn_blocking(move || {
                let progress = Progress {
                    state: worker.clone(),
                    id,
                };
                work(&worker, &progress)
            })
            .await;
            let outcome = match outcome {
                Ok(Ok(v)) => Ok(v),
                Ok(Err(e)) => Err(e.to_string()),
                Err(e) => Err(format!("job panicked: {e}")),
            };
            if let Err(e) = &outcome {
                log::warn!("job {id} failed: {e}");
            }
            state.update_job(id, |j| j.finish(outcome));
        });
        Ok(job)
    }

    fn detector(&self, id: &str) -> ServiceResult<Arc<NoveltyDetector>> {
        if let Some(d) = self.inner.detectors.lock().expect("cache").get(id) {
            return Ok(d.clone());
        }
        let det = Arc::new(NoveltyDetector::load(self.store().detector_dir(id)?)?);
        self.inner
            .detectors
            .lock()
            .expect("cache")
            .insert(id.to_string(), det.clone());
        Ok(det)
    }

    fn forget_detector(&self, id: &str) {
        self.inner.detectors.lock().expect("cache").remove(id);
    }
}

/// Progress reporter handed to running jobs.
pub struct Progress {
    state: AppState,
    id: Uuid,
}

impl Progress {
    pub fn set(&self, fraction: f64) {
        self.state
            .update_job(self.id, |j| j.advance(JobState::Running, fraction));
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ServiceResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(serde_json::from_str("{}")?);
    }
    Ok(serde_json::from_slice(body)?)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ServiceResult<T> + Send + 'static,
) -> ServiceResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker panicked: {e}")))?
}

/// Sequences as sequence-file text or as token lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequencesInput {
    Text(String),
    Tokens(Vec<Vec<String>>),
}

impl SequencesInput {
    pub fn docs(&self) -> ServiceResult<Vec<Vec<String>>> {
        match self {
            SequencesInput::Text(t) => Ok(parse_sequences(t)?),
            SequencesInput::Tokens(d) => {
                if let Some(i) = d.iter().position(Vec::is_empty) {
                    return Err(ServiceError::Unprocessable(format!("sequence {i} is empty")));
                }
                Ok(d.clone())
            }
        }
    }
}

/// Labels as sidecar text or as a list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelsInput {
    Text(String),
    List(Vec<Label>),
}

impl LabelsInput {
    pub fn labels(&self) -> ServiceResult<Vec<Label>> {
        match self {
            LabelsInput::Text(t) => Ok(parse_labels(t)?),
            LabelsInput::List(l) => Ok(l.clone()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateProject {
    #[serde(default)]
    name: Option<String>,
    sequences: SequencesInput,
    #[serde(default)]
    labels: Option<LabelsInput>,
    #[serde(default)]
    min_frequency: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    word_classes: HashMap<String, String>,
}

async fn create_project(State(s): State<AppState>, body: Bytes) -> ServiceResult<Response> {
    let req: CreateProject = parse(&body)?;
    let docs = req.sequences.docs()?;
    let labels = req.labels.as_ref().map(LabelsInput::labels).transpose()?;
    let corpus = Corpus::from_raw(&docs, labels.as_deref(), req.min_frequency.unwrap_or(1))?;
    let seed = req.seed.unwrap_or(s.inner.config.seed);
    let name = req.name.unwrap_or_else(|| "project".into());
    let st = s.clone();
    let (rec, created) =
        blocking(move || st.store().create_project(&name, &corpus, seed, req.word_classes)).await?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(rec)).into_response())
}

async fn get_project(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<impl IntoResponse> {
    Ok(Json(s.store().project(&id)?))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LdaRequest {
    spec: EnsembleSpec,
    alpha: Option<f64>,
    beta: f64,
    iterations: usize,
    burn_in: usize,
    seed: Option<u64>,
}

impl Default for LdaRequest {
    fn default() -> Self {
        let p = EnsembleParams::fixed(vec![5, 10], 0);
        LdaRequest {
            spec: p.spec,
            alpha: p.alpha,
            beta: p.beta,
            iterations: p.iterations,
            burn_in: p.burn_in,
            seed: None,
        }
    }
}

fn accepted(job: &Job, extra: serde_json::Value) -> Response {
    let mut body = json!({ "job_id": job.id, "job": job });
    if let (Some(b), Some(e)) = (body.as_object_mut(), extra.as_object()) {
        b.extend(e.clone());
    }
    (StatusCode::ACCEPTED, Json(body)).into_response()
}

async fn start_lda(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ServiceResult<Response> {
    let req: LdaRequest = parse(&body)?;
    let project = s.store().project(&id)?;
    let params = EnsembleParams {
        spec: req.spec,
        alpha: req.alpha,
        beta: req.beta,
        iterations: req.iterations,
        burn_in: req.burn_in,
        seed: req.seed.unwrap_or(project.seed),
    };
    params.topic_counts()?;
    let pid = id.clone();
    let job = s.spawn_job(&id, JobKind::LdaEnsemble, move |st, progress| {
        let corpus = st.store().corpus(&pid)?;
        progress.set(0.1);
        let set = run_ensemble(&corpus, &params)?;
        progress.set(0.9);
        let hash = st.store().add_topicset(&pid, &set)?;
        Ok(json!({ "topicset_hash": hash, "topics": set.len() }))
    })?;
    Ok(accepted(&job, json!({})))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct TopicsQuery {
    top_words: Option<usize>,
    perplexity: Option<f64>,
    iterations: Option<usize>,
    seed: Option<u64>,
    topicset: Option<String>,
}

async fn get_topics(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TopicsQuery>,
) -> ServiceResult<impl IntoResponse> {
    let st = s.clone();
    let projection = blocking(move || {
        let project = st.store().project(&id)?;
        let (_, set) = st.store().topicset(&id, q.topicset.as_deref())?;
        let corpus = st.store().corpus(&id)?;
        let mut params = ProjectionParams::default();
        params.tsne.seed = q.seed.unwrap_or(project.seed);
        if let Some(w) = q.top_words {
            params.top_words = w;
        }
        if let Some(p) = q.perplexity {
            params.tsne.perplexity = p;
        }
        if let Some(i) = q.iterations {
            params.tsne.iterations = i;
        }
        Ok(project_topics(&set, &corpus.vocabulary, &project.word_classes, &params)?)
    })
    .await?;
    Ok(Json(projection))
}

async fn get_topicset(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<impl IntoResponse> {
    let (hash, bytes) = s.store().topicset_bytes(&id, None)?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/json".to_string()),
            (header::ETAG, format!("\"{hash}\"")),
        ],
        bytes,
    ))
}

async fn post_cluster(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ServiceResult<Response> {
    let def: ClusterDefinition = serde_json::from_slice(&body)?;
    let rec = s.store().add_definition(&id, &def)?;
    Ok((StatusCode::CREATED, Json(rec)).into_response())
}

async fn list_clusters(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<impl IntoResponse> {
    Ok(Json(s.store().project(&id)?.definitions))
}

async fn get_cluster(
    State(s): State<AppState>,
    Path((id, def_id)): Path<(String, String)>,
) -> ServiceResult<impl IntoResponse> {
    Ok(Json(s.store().definition(&id, &def_id)?.1))
}

/// How a detector routes sequences to its cluster models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RouterSpec {
    Single,
    Informed {
        definition_id: String,
        #[serde(default)]
        fold_in: Option<FoldInParams>,
    },
    Kmeans {
        #[serde(default)]
        k: Option<usize>,
        #[serde(default = "default_kmeans_iters")]
        max_iters: usize,
    },
}

fn default_kmeans_iters() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRequest {
    #[serde(default)]
    definition_id: Option<String>,
    #[serde(default)]
    router: Option<RouterSpec>,
    #[serde(default)]
    config: Option<DetectorConfig>,
}

async fn start_train(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ServiceResult<Response> {
    let req: TrainRequest = parse(&body)?;
    let project = s.store().project(&id)?;
    let spec = match (req.router, req.definition_id) {
        (Some(r), None) => r,
        (None, Some(definition_id)) => RouterSpec::Informed {
            definition_id,
            fold_in: None,
        },
        (None, None) => RouterSpec::Single,
        (Some(_), Some(_)) => {
            return Err(ServiceError::Unprocessable(
                "give either `definition_id` or `router`, not both".into(),
            ))
        }
    };
    let mut config = req.config.unwrap_or_default();
    if !body.windows(6).any(|w| w == b"\"seed\"") {
        config.train.seed = project.seed;
    }
    config.train.validate()?;
    let spec = match spec {
        RouterSpec::Informed {
            definition_id,
            fold_in,
        } => {
            s.store().definition(&id, &definition_id)?;
            RouterSpec::Informed {
                definition_id,
                fold_in: Some(fold_in.unwrap_or(FoldInParams {
                    seed: project.seed,
                    ..Default::default()
                })),
            }
        }
        other => other,
    };
    let detector_id = Store::detector_id(&id, &json!({ "router": spec, "config": config }));
    let pid = id.clone();
    let did = detector_id.clone();
    let job = s.spawn_job(&id, JobKind::TrainDetector, move |st, progress| {
        let corpus = st.store().corpus(&pid)?;
        let mut record = DetectorRecord {
            id: did.clone(),
            router: String::new(),
            k: 0,
            definition_id: None,
            definition_hash: None,
            topicset_hash: None,
            manifest_hash: String::new(),
        };
        let router = match &spec {
            RouterSpec::Single => Router::Single,
            RouterSpec::Informed {
                definition_id,
                fold_in,
            } => {
                let (drec, def) = st.store().definition(&pid, definition_id)?;
                let (_, set) = st.store().topicset(&pid, Some(&drec.topicset_hash))?;
                record.definition_id = Some(drec.id);
                record.definition_hash = Some(drec.hash);
                record.topicset_hash = Some(drec.topicset_hash);
                Router::informed(set, def, fold_in.unwrap_or_default())?
            }
            RouterSpec::Kmeans { k, max_iters } => {
                Router::kmeans(&corpus, *k, config.train.seed, *max_iters)?.0
            }
        };
        progress.set(0.1);
        let detector = train_detector(&corpus, router, &config)?;
        record.router = detector.router.kind().into();
        record.k = detector.k();
        st.forget_detector(&did);
        let record = st.store().add_detector(&pid, &detector, record)?;
        Ok(json!({ "detector_id": record.id, "detector": record }))
    })?;
    Ok(accepted(&job, json!({ "detector_id": detector_id })))
}

async fn get_detector(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<impl IntoResponse> {
    let dir = s.store().detector_dir(&id)?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
    Ok(Json(manifest))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRequest {
    #[serde(default)]
    sequences: Option<SequencesInput>,
    /// Already-encoded token ids.
    #[serde(default)]
    ids: Option<Vec<Vec<u32>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub detector_id: String,
    pub scores: Vec<Score>,
}

async fn score(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ServiceResult<impl IntoResponse> {
    let req: ScoreRequest = parse(&body)?;
    let det = s.detector(&id)?;
    let scores = blocking(move || {
        let encoded: Vec<Vec<u32>> = match (req.sequences, req.ids) {
            (Some(seqs), None) => seqs
                .docs()?
                .iter()
                .map(|d| det.vocabulary.encode(d))
                .collect::<Result<_, _>>()?,
            (None, Some(ids)) => {
                let v = det.vocabulary.len();
                for s in &ids {
                    if let Some(&t) = s.iter().find(|&&t| t as usize >= v) {
                        return Err(seqnovelty::Error::TokenOutOfRange { id: t, size: v }.into());
                    }
                }
                ids
            }
            _ => {
                return Err(ServiceError::Unprocessable(
                    "give exactly one of `sequences` or `ids`".into(),
                ))
            }
        };
        let refs: Vec<&[u32]> = encoded.iter().map(Vec::as_slice).collect();
        Ok(det.score_batch(&refs)?)
    })
    .await?;
    Ok(Json(ScoreResponse {
        detector_id: id,
        scores,
    }))
}

#[derive(Debug, Clone, Deserialize)]
pub struct LabeledInput {
    pub sequences: SequencesInput,
    pub labels: LabelsInput,
}

impl LabeledInput {
    pub fn corpus(&self, det: &NoveltyDetector) -> ServiceResult<Corpus> {
        let docs = self.sequences.docs()?;
        let labels = self.labels.labels()?;
        Ok(Corpus::encode_with(det.vocabulary.clone(), &docs, Some(&labels))?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    sequences: SequencesInput,
    labels: LabelsInput,
    /// Threshold-selection set; without it the labeled input is split in
    /// half, stratified by label.
    #[serde(default)]
    validation: Option<LabeledInput>,
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    threshold_policy: ThresholdPolicy,
    /// Detector whose per-cluster AUCs are reported alongside.
    #[serde(default)]
    global_detector: Option<String>,
    #[serde(default)]
    seed: u64,
}

fn scored(det: &NoveltyDetector, corpus: &Corpus) -> ServiceResult<Vec<ScoredSequence>> {
    Ok(det
        .score_corpus(corpus)?
        .into_iter()
        .zip(&corpus.sequences)
        .map(|(sc, s)| ScoredSequence {
            cluster: sc.cluster,
            score: sc.perplexity,
            label: s.label,
        })
        .collect())
}

/// Scores `test` and `validation` with `det` and builds the report.
pub fn evaluate_detector(
    det: &NoveltyDetector,
    method: &str,
    test: &Corpus,
    validation: &Corpus,
    policy: ThresholdPolicy,
    global: Option<&NoveltyDetector>,
) -> ServiceResult<EvalReport> {
    let t = scored(det, test)?;
    let v = scored(det, validation)?;
    let mut report = evaluate(method, &t, &v, policy)?;
    if let Some(g) = global {
        let gs: Vec<f64> = g.score_corpus(test)?.iter().map(|s| s.perplexity).collect();
        report.per_cluster = seqnovelty::detector::per_cluster_report(&t, &gs)?;
    }
    Ok(report)
}

async fn evaluate_endpoint(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ServiceResult<impl IntoResponse> {
    let req: EvaluateRequest = parse(&body)?;
    let det = s.detector(&id)?;
    let global = req.global_detector.as_deref().map(|g| s.detector(g)).transpose()?;
    let report = blocking(move || {
        let input = LabeledInput {
            sequences: req.sequences,
            labels: req.labels,
        };
        let all = input.corpus(&det)?;
        let (test, validation) = match &req.validation {
            Some(v) => (all, v.corpus(&det)?),
            None => {
                let (_, val, test) = all.stratified_split(0.0, 0.5, req.seed)?;
                (test, val)
            }
        };
        let method = req
            .method
            .unwrap_or_else(|| format!("{} LSTM (k={})", det.router.kind(), det.k()));
        evaluate_detector(&det, &method, &test, &validation, req.threshold_policy, global.as_deref())
    })
    .await?;
    Ok(Json(report))
}

async fn get_job(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<impl IntoResponse> {
    let uuid = Uuid::parse_str(&id).map_err(|_| ServiceError::NotFound(format!("job `{id}`")))?;
    s.job(uuid)
        .map(Json)
        .ok_or_else(|| ServiceError::NotFound(format!("job `{id}`")))
}

const PLACEHOLDER: &str = "<!doctype html><title>seqnov</title>\
<p>The clustering UI bundle is not installed. Set <code>ui_dir</code> in the service config.</p>";

pub fn router(state: AppState) -> axum::Router {
    let api = axum::Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/lda", post(start_lda))
        .route("/projects/{id}/topics", get(get_topics))
        .route("/projects/{id}/topicset", get(get_topicset))
        .route("/projects/{id}/clusters", post(post_cluster).get(list_clusters))
        .route("/projects/{id}/clusters/{def}", get(get_cluster))
        .route("/projects/{id}/train", post(start_train))
        .route("/detectors/{id}", get(get_detector))
        .route("/detectors/{id}/score", post(score))
        .route("/detectors/{id}/evaluate", post(evaluate_endpoint))
        .route("/jobs/{id}", get(get_job));
    let ui = state
        .inner
        .config
        .ui_dir
        .clone()
        .filter(|d| d.join("index.html").is_file());
    let app = match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    };
    app.with_state(state)
}

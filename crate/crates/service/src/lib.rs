//! HTTP service and project store for the seqnovelty pipeline.
//!
//! A project is a directory holding a training corpus, the LDA topic sets
//! fitted on it, cluster definitions and trained detector bundles. Every
//! artifact is written atomically and addressed by the sha256 of its bytes.

pub mod api;
pub mod config;
pub mod error;
pub mod jobs;
pub mod store;

pub use api::{router, AppState};
pub use config::ServiceConfig;
pub use error::{ServiceError, ServiceResult};
pub use jobs::{Job, JobKind, JobState};
pub use store::{DefinitionRecord, DetectorRecord, ProjectRecord, Store};

//! Per-cluster LSTM novelty detectors: routing, training, scoring,
//! evaluation and on-disk bundles.

mod bundle;
mod eval;
mod novelty;
mod router;

pub use bundle::{sha256_hex, BundleManifest, BUNDLE_VERSION};
pub use eval::{
    auc, evaluate, format_table, per_cluster_report, roc_curve, youden_threshold, ClusterReport,
    EvalReport, RocPoint, ScoredSequence, ThresholdPolicy,
};
pub use novelty::{train_detector, DetectorConfig, NoveltyDetector, Score};
pub use router::{tf_features, Router};

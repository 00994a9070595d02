//! Classical comparators: nearest neighbours on raw sequences, sequential
//! pattern mining, and isolation forests over count/pattern features.

mod isoforest;
mod knn;
mod prefixspan;

pub use isoforest::{average_path_length, IsolationForest, IsolationTree};
pub use knn::{lcs_distance, lcs_length, minkowski, KnnLcs, KnnMinkowski};
pub use prefixspan::{
    bow_sp_features, is_subsequence, pattern_features, patterns_json, prefixspan_top_k,
    SequentialPattern,
};

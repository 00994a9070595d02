//! Informed clusters over a topic ensemble, automatic clustering baselines
//! and the topic projection served to the grouping UI.

mod definition;
mod kmeans;
mod projection;
mod silhouette;
mod tsne;

pub use definition::{
    argmax, assign_cluster, cluster_scores, lda_cluster_assign, partition_corpus,
    ClusterAssignment, ClusterDefinition, Partition,
};
pub use kmeans::{kmeans, nearest_centroid, select_k_by_silhouette, KMeansResult};
pub use projection::{
    associations, chord_matrix, project_topics, ChordRule, Glyph, GlyphWord, ProjectionParams,
    TopicProjection, UNLABELED_CLASS,
};
pub use silhouette::{euclidean, silhouette_score};
pub use tsne::{tsne_project, TsneParams, TsneResult};

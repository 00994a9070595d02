//! Novelty detection for discrete sequences.
//!
//! Training data is decomposed into clusters defined over an ensemble of LDA
//! topics, one LSTM language model is trained per cluster, and a new sequence
//! is scored by the perplexity of the model belonging to the cluster it is
//! routed to. Classical comparators (kNN, isolation forests over bag-of-words
//! and sequential-pattern features) live in [`baselines`].
//!
//! Data-parallel inner loops (ensemble runs, per-cluster training, batch
//! scoring, forest construction) go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise. Results never
//! depend on which path ran.

pub mod baselines;
pub mod clustering;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod lda;
pub mod lstm;
pub mod par;
pub(crate) mod rng;

pub use error::{Error, Result};

//! Latent Dirichlet allocation by collapsed Gibbs sampling, multi-run topic
//! ensembles, and fold-in of unseen sequences.

mod ensemble;
mod gibbs;

pub use ensemble::{fold_in_topicset, run_ensemble, EnsembleParams, EnsembleSpec, Topic, TopicSet};
pub use gibbs::{fit_lda, fold_in, FoldInParams, GibbsSampler, LdaParams, LdaRun};

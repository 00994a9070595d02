//! Single-layer LSTM language model over token ids, trained from scratch with
//! backpropagation through time. The novelty score of a sequence is its
//! perplexity under the model.

mod checkpoint;
mod model;
mod train;

pub use model::{log_softmax, perplexity_from_probs, LstmLanguageModel, ModelDims};
pub use train::{gradient_check, loss_and_gradient, train, TrainConfig, TrainReport};

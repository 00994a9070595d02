//! Sequence ingestion: vocabulary construction, encoding, labelled corpora,
//! time-series discretization and a synthetic Markov-mixture generator.

mod sequence;
mod synth;
mod timeseries;
mod vocab;

pub use sequence::{
    bag_of_words, parse_labels, parse_sequences, read_labels, read_sequence_file, tokenize_text,
    Corpus, Label, LabeledSequence,
};
pub use synth::{MarkovChain, MixtureGenerator};
pub use timeseries::{
    discretize_time_series, read_anomaly_indices, read_time_series, windowize, BinConfig,
    PointLabel,
};
pub use vocab::{Vocabulary, BOS, EOS, UNK};

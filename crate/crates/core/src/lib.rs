//! Text mining for daily drilling reports.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`corpus`]: ingest JSON Lines reports, apply the regex denoising rules,
//!   tokenize, segment sentences and compute corpus statistics.
//! - [`embedding`]: skip-gram word vectors trained with negative sampling.
//! - [`neuralnet`]: a small from-scratch network engine (dense, conv1d,
//!   max-pool, LSTM, dropout) with hand-written backward passes.
//! - [`classifier`]: the averaging, CNN and LSTM sentence classifiers over
//!   the EVENT / SYMPTOM / ACTION label set, with splits, k-fold CV and
//!   confusion matrices.
//! - [`mining`]: well timelines and the analytics queries over them.
//!
//! [`synthetic`] generates seeded report corpora and labeled sets with known
//! structure, used by tests and benchmarks in place of a proprietary corpus.
//!
//! All training is single-threaded and bit-for-bit reproducible from a seed.
//! Randomness is drawn from named sub-streams of one global seed, see
//! [`seeding`].

pub mod classifier;
pub mod corpus;
pub mod embedding;
pub mod mining;
pub mod neuralnet;
pub mod seeding;
pub mod synthetic;
pub mod tensor;

mod binio;

pub use classifier::{
    ArchConfig, Architecture, ConfusionMatrix, EvalReport, Label, LabeledSentence, TrainConfig, TrainedClassifier,
};
pub use corpus::{CorpusStats, Report, Sentence, SentenceSource, Vocabulary};
pub use embedding::{EmbeddingConfig, EmbeddingModel, LossTrace, WordVectors};
pub use mining::{FieldSummary, RegressionFit, SequencePattern, WellTimeline};
pub use neuralnet::Network;
pub use tensor::Tensor;

//! Prompt-embedding benchmark harness for univariate time-series classification.
//!
//! The pipeline serializes each series into text prompts (raw values, a
//! templated narration, or a statistical feature summary), embeds the prompts
//! with a frozen language model behind an [`embedding::EmbeddingBackend`],
//! trains an RBF-kernel SVM per dataset on the train-split embeddings, and
//! aggregates test accuracies into average ranks with Friedman/Nemenyi
//! statistics.

pub mod config;
pub mod dataset;
pub mod embedding;
pub mod features;
pub mod prompt;
pub mod run;
pub mod stats;
pub mod svm;

pub use dataset::{LabeledSeries, TimeSeriesDataset};
pub use embedding::{BackendInfo, Embedding, EmbeddingBackend};
pub use features::FeatureVector;
pub use prompt::{PromptKind, RenderConfig, SubPrompt, TokenCounter};
pub use svm::{SvmConfig, SvmModel};

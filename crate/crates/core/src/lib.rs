//! Sentiment classification for code-mixed Hinglish tweets.
//!
//! The crate covers the whole path from raw corpora to ensemble
//! predictions:
//!
//! * [`corpus`] reads TSV and CoNLL-style corpora and writes prediction files,
//! * [`preprocess`] and [`stemmer`] turn raw text into stemmed tokens,
//! * [`vocab`] maps tokens to fixed-length id sequences,
//! * [`nn`] and [`arch`] hold the hand-differentiated layers and the four models,
//! * [`train`] and [`persist`] run mini-batch Adam training and store models,
//! * [`ensemble`] and [`metrics`] combine model outputs and score them.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below pin the
//! common `f64` instantiation.

pub mod arch;
pub mod corpus;
pub mod ensemble;
mod error;
pub mod metrics;
pub mod nn;
pub mod persist;
pub mod preprocess;
mod scalar;
pub mod stemmer;
pub mod train;
pub mod vocab;

pub use arch::{ArchId, Model, ModelConfig};
pub use corpus::{RawTweet, Sentiment};
pub use ensemble::{combine, ProbMatrix};
pub use error::{Error, Result};
pub use metrics::{confusion, f1_report, ConfusionMatrix, MetricsReport};
pub use nn::Tensor;
pub use preprocess::{StopList, TokenizedTweet};
pub use scalar::Scalar;
pub use train::{train, TrainHistory, TrainHyper};
pub use vocab::{IdSequence, Vocabulary};

/// Number of sentiment classes.
pub const NUM_CLASSES: usize = 3;

pub type Tensor64 = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type Model64 = arch::Model<f64>;
pub type Model32 = arch::Model<f32>;

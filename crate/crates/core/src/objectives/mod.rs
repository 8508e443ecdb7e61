//! Training objectives: stable binary cross-entropy and focal losses with
//! analytic gradients, inverted dropout, the Adam stepper, and a small
//! logistic trainer that exercises the full recipe on scalar features.

mod loss;
mod opt;
mod train;

pub use loss::{cross_entropy, focal_loss, LossKind, LossValue, DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA};
pub use opt::{adam_step, dropout, AdamState, DEFAULT_LEARNING_RATE};
pub use train::{train_logistic, EpochStats, TrainConfig, TrainedModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("gamma must be finite and >= 0, got {0}")]
    InvalidGamma(f64),
    #[error("learning rate must be finite and > 0, got {0}")]
    InvalidLearningRate(f64),
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidRate(f64),
    #[error("params and grads lengths differ: {params} vs {grads}")]
    LengthMismatch { params: usize, grads: usize },
    #[error("label must be 0 or 1, got {0}")]
    InvalidLabel(u8),
    #[error("need both classes, got {positives} positives of {total}")]
    DegenerateLabels { positives: usize, total: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("feature row {row} has {got} values, expected {expected}")]
    RaggedFeatures {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("{labels} labels for {rows} feature rows")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("non-finite feature in row {0}")]
    NonFiniteFeature(usize),
    #[error("batch size must be at least 1")]
    ZeroBatch,
}

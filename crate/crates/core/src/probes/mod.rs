//! Diagnostic probe training and evaluation: L-BFGS-optimized logistic
//! classifiers, class balancing, and ranking metrics.

mod lbfgs;
mod logistic;
mod metrics;
mod sampling;

pub use lbfgs::{minimize, LbfgsOutcome, LbfgsParams};
pub use logistic::{
    logistic_loss_grad, predict_classes, predict_scores, train_logistic_probe, LogisticParams,
    ProbeModel,
};
pub use metrics::{
    attraction_coefficient, binary_auc, confusion_matrix, cosine_distance, ovo_auc,
};
pub use sampling::random_oversample;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("empty input")]
    EmptyInput,
    #[error("inputs ({inputs}) and labels ({labels}) differ in length")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("input {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("label {label} at sample {index} out of range for {n_classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("non-finite value in input {index}")]
    NonFiniteInput { index: usize },
    #[error("all samples share one class")]
    SingleClass,
    #[error("need at least two classes, got {n_classes}")]
    TooFewClasses { n_classes: usize },
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("no class pair has both classes present")]
    NoValidPairs,
    #[error("cosine distance of a zero vector is undefined")]
    ZeroVector,
    #[error("vector lengths differ: {left} vs {right}")]
    VectorLengthMismatch { left: usize, right: usize },
    #[error("series of length {len} is too short, need at least 2 points")]
    ShortSeries { len: usize },
    #[error("parameter vector has length {found}, expected {expected}")]
    BadParameterLength { expected: usize, found: usize },
}

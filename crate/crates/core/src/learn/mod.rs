//! Classifiers and model selection: z-score scaling, SMO-trained SVMs,
//! one-vs-one voting, seeded k-fold cross-validation and a genetic feature
//! selector.

pub mod cv;
pub mod ga;
pub mod multiclass;
pub mod scaler;
pub mod svm;

pub use cv::{cross_validate, grid_search, kfold_split, CvResult, FoldPlan, GridPoint};
pub use ga::{ga_select, two_point_crossover, GaConfig, GaResult, Mask};
pub use multiclass::{OneVsOne, OvoPrediction};
pub use scaler::{fit_scaler, ScaleParams};
pub use svm::{svm_train, svm_train_with_report, Kernel, SmoReport, SvmModel, SvmParams};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("empty feature matrix")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("label {label} found in binary training set")]
    NotBinary { label: i32 },
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("feature mask selects nothing")]
    DegenerateMask,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Keeps the columns whose mask bit is set.
pub fn apply_mask(row: &[f64], mask: &[bool]) -> Vec<f64> {
    row.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect()
}

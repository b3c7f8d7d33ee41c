//! Multi-task linear SVMs whose per-task feature covariances are tied together
//! through a shared nonnegative dictionary.
//!
//! The entry points are [`trainer::fit`] for a list of binary tasks,
//! [`trainer::fit_one_vs_rest`] for multiclass data and
//! [`trainer::fit_exemplar`] for one-positive-per-task training.

// `!(x > 0.0)` is how parameter checks reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dictionary;
pub mod error;
pub mod experiment;
pub mod lasso;
pub mod model;
pub mod persist;
pub mod svm;
pub mod trainer;

pub use error::{DsvmError, Result};
pub use model::{
    evaluate_objective, evaluate_relaxed_objective, DictionaryModel, Hyperparameters, TaskDataset, TaskParameters,
    TrainState, Variant, EPS_DELTA,
};
pub use persist::{ModelDocument, ModelMode};
pub use trainer::{fit, fit_exemplar, fit_one_vs_rest, InitStrategy, MulticlassModel, TrainConfig};

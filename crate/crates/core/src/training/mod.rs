//! Objective, gradients and the optimizer loop.

pub mod config;
pub mod engine;
pub mod fit;
pub mod objective;
pub mod optimizer;
pub mod regularizers;
pub mod report;

pub use config::{BatchSize, InitScheme, OptimizerKind, TrainConfig};
pub use engine::GuideMode;
pub use fit::{fit, fit_from, initial_params, FitOutcome, TrainError};
pub use objective::{marginal_log_likelihood, objective_and_gradient};
pub use regularizers::{data_guide_regularizer, kl_guide_regularizer, sign_penalty};
pub use report::TrainReport;

//! Dataset files, synthetic generators, metrics and prediction exports.

pub mod dataset;
pub mod generators;
pub mod io;
pub mod metrics;
pub mod predictions;

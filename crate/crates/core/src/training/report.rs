use serde::{Deserialize, Serialize};

use crate::data::metrics::MetricReport;
use crate::model::params::ModelParams;
use crate::training::config::TrainConfig;

/// Per-epoch training history. Every array has one entry per completed
/// epoch. Timings are kept out of the serialized form so that repeated runs
/// produce identical documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub num_instances: usize,
    pub num_lfs: usize,
    pub objective: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    pub regularizer: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<Vec<f64>>,
    /// Headline F1 (positive class when K = 2, micro-F1 otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<Vec<f64>>,
    /// `class_f1[epoch][class - 1]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_f1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_metrics: Option<MetricReport>,
    pub final_params: ModelParams,
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
}

impl TrainReport {
    pub fn epochs_completed(&self) -> usize {
        self.objective.len()
    }

    pub fn final_f1(&self) -> Option<f64> {
        self.f1.as_ref().and_then(|f| f.last().copied())
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.accuracy.as_ref().and_then(|a| a.last().copied())
    }
}

use serde::{Deserialize, Serialize};

use crate::special::{argmax, softmax_into};

/// Distribution over the K classes for one instance, plus the argmax class
/// (1-based, ties to the lowest class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPosterior {
    pub probs: Vec<f64>,
    pub prediction: usize,
}

impl LabelPosterior {
    /// Normalizes unnormalized log-scores over classes.
    pub fn from_log_scores(scores: &[f64]) -> Self {
        let mut probs = vec![0.0; scores.len()];
        softmax_into(scores, &mut probs);
        // argmax on the scores themselves so ties are not blurred by rounding
        let prediction = argmax(scores) + 1;
        Self { probs, prediction }
    }

    pub fn from_probs(probs: Vec<f64>) -> Self {
        let prediction = argmax(&probs) + 1;
        Self { probs, prediction }
    }

    pub fn uniform(num_classes: usize) -> Self {
        Self::from_probs(vec![1.0 / num_classes as f64; num_classes])
    }

    pub fn prob(&self, class: usize) -> f64 {
        self.probs[class - 1]
    }
}

use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::model::posterior::LabelPosterior;

/// Class whose F1 is the headline number on binary tasks.
pub const POSITIVE_CLASS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub num_instances: usize,
    pub per_class: Vec<ClassMetrics>,
    pub micro_f1: f64,
    pub accuracy: f64,
    /// `confusion[g][p]` counts gold class g+1 predicted as p+1.
    pub confusion: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

impl MetricReport {
    /// Positive-class F1 for K = 2, micro-F1 otherwise.
    pub fn f1(&self) -> f64 {
        if self.per_class.len() == 2 {
            self.per_class[POSITIVE_CLASS - 1].f1
        } else {
            self.micro_f1
        }
    }

    pub fn class_f1(&self, class: usize) -> f64 {
        self.per_class[class - 1].f1
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Scores 1-based `predictions` against 1-based `gold`.
pub fn evaluate_predictions(
    predictions: &[usize],
    gold: &[usize],
    num_classes: usize,
) -> Result<MetricReport, InputError> {
    if predictions.len() != gold.len() {
        return Err(InputError::LengthMismatch {
            what: "predictions vs gold labels",
            left: predictions.len(),
            right: gold.len(),
        });
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &g) in predictions.iter().zip(gold) {
        for class in [p, g] {
            if class == 0 || class > num_classes {
                return Err(InputError::InvalidClass { class, num_classes });
            }
        }
        confusion[g - 1][p - 1] += 1;
    }
    let mut per_class = Vec::with_capacity(num_classes);
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for c in 0..num_classes {
        let tp = confusion[c][c];
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let support: usize = confusion[c].iter().sum();
        tp_all += tp;
        fp_all += predicted - tp;
        fn_all += support - tp;
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        per_class.push(ClassMetrics {
            class: c + 1,
            precision,
            recall,
            f1: f1_score(precision, recall),
            support,
        });
    }
    let micro_f1 = f1_score(ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
    Ok(MetricReport {
        num_instances: gold.len(),
        per_class,
        micro_f1,
        accuracy: ratio(tp_all, gold.len()),
        confusion,
        coverage: None,
    })
}

/// Scores posterior predictions against gold labels.
pub fn evaluate(posteriors: &[LabelPosterior], gold: &[usize]) -> Result<MetricReport, InputError> {
    let num_classes = posteriors
        .first()
        .map(|p| p.probs.len())
        .ok_or(InputError::EmptyDataset)?;
    let predictions: Vec<usize> = posteriors.iter().map(|p| p.prediction).collect();
    evaluate_predictions(&predictions, gold, num_classes)
}

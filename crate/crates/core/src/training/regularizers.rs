//! Quality-guide regularizers. Each returns a value to be *added* to the
//! maximized objective, with its gradient.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::InputError;
use crate::model::cage::agreement_logits;
use crate::model::lf::LfSpec;
use crate::model::observations::ObservationSet;
use crate::model::params::ModelParams;
use crate::special::{log_sum_exp, softmax_into};
use crate::training::engine::{data_guide_terms, ScoreModel};
use crate::variants::undirected::UndirectedModel;

/// Probabilities are clamped into `[PROB_CLAMP, 1 − PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// Σ_j q_j log P_j + (1 − q_j) log(1 − P_j) with P_j = softmax(t_j)[k_j],
/// and ∂R/∂t_j(y).
pub(crate) fn kl_guide_from_logits(logits: &[Vec<f64>], lfs: &[LfSpec]) -> (f64, Vec<Vec<f64>>) {
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(lfs.len());
    for (row, lf) in logits.iter().zip(lfs) {
        let kj = lf.target_index();
        let q = lf.quality_guide_t;
        let mut w = vec![0.0; row.len()];
        let lse = softmax_into(row, &mut w);
        let log_p = row[kj] - lse;
        let others: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != kj)
            .map(|(_, &v)| v)
            .collect();
        let log_not_p = log_sum_exp(&others) - lse;
        let p = log_p.exp();
        let clamped = !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p);
        let mut d = vec![0.0; row.len()];
        if clamped {
            if !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "agreement probability of LF {} saturated at {p}; clamping before log",
                    lf.lf_id
                );
            }
            let (lo, hi) = (PROB_CLAMP.ln(), (-PROB_CLAMP).ln_1p());
            let (log_pc, log_not_pc) = if p < PROB_CLAMP { (lo, hi) } else { (hi, lo) };
            value += q * log_pc + (1.0 - q) * log_not_pc;
        } else {
            value += q * log_p + (1.0 - q) * log_not_p;
            // ∂/∂t(y) = (δ − w(y)) · (q − (1 − q) P / (1 − P))
            let slope = q - (1.0 - q) * (log_p - log_not_p).exp();
            for (c, dc) in d.iter_mut().enumerate() {
                let delta = if c == kj { 1.0 } else { 0.0 };
                *dc = (delta - w[c]) * slope;
            }
        }
        grads.push(d);
    }
    (value, grads)
}

/// −Σ_j Σ_{y≠k_j} max(0, θ_{jy} − θ_{j,k_j}) and its (sub)gradient.
pub(crate) fn sign_penalty_from_weights(weights: &[Vec<f64>], lfs: &[LfSpec]) -> (f64, Vec<Vec<f64>>) {
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(lfs.len());
    for (row, lf) in weights.iter().zip(lfs) {
        let kj = lf.target_index();
        let mut d = vec![0.0; row.len()];
        for c in 0..row.len() {
            if c == kj {
                continue;
            }
            let margin = row[c] - row[kj];
            if margin > 0.0 {
                value -= margin;
                d[c] -= 1.0;
                d[kj] += 1.0;
            }
        }
        grads.push(d);
    }
    (value, grads)
}

/// KL quality-guide regularizer of the CAGE model.
pub fn kl_guide_regularizer(params: &ModelParams, lfs: &[LfSpec]) -> f64 {
    kl_guide_from_logits(&agreement_logits(&params.theta, params.num_classes()), lfs).0
}

/// Sign penalty on θ.
pub fn sign_penalty(params: &ModelParams, lfs: &[LfSpec]) -> f64 {
    sign_penalty_from_weights(&params.theta, lfs).0
}

/// Data-driven guide penalty of the CAGE model on `batch`.
pub fn data_guide_regularizer(params: &ModelParams, lfs: &[LfSpec], batch: &ObservationSet) -> Result<f64, InputError> {
    if batch.num_instances() == 0 {
        return Err(InputError::EmptyDataset);
    }
    let k = params.num_classes();
    let model = UndirectedModel::cage(lfs, k);
    let p = params.to_flat();
    let indices: Vec<usize> = (0..batch.num_instances()).collect();
    let mut posteriors = Vec::with_capacity(indices.len() * k);
    let mut scores = vec![0.0; k];
    let mut post = vec![0.0; k];
    for &i in &indices {
        model.instance_scores(&p, batch.tau_row(i), batch.score_row(i), &mut scores);
        softmax_into(&scores, &mut post);
        posteriors.extend_from_slice(&post);
    }
    Ok(data_guide_terms(lfs, batch, &indices, &posteriors, k).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lf(q: f64) -> LfSpec {
        LfSpec::discrete("a", 1).with_guides(q, None)
    }

    /// θ row giving agreement probability `p` for a single binary LF.
    fn theta_for(p: f64) -> ModelParams {
        let logit = (p / (1.0 - p)).ln();
        ModelParams {
            theta: vec![vec![logit / 2.0, -logit / 2.0]],
            rho: vec![vec![0.0; 2]],
        }
    }

    #[test]
    fn kl_guide_at_matching_probability() {
        let v = kl_guide_regularizer(&theta_for(0.9), &[lf(0.9)]);
        let expected = 0.9 * 0.9f64.ln() + 0.1 * 0.1f64.ln();
        assert!((v - expected).abs() < 1e-12);
        assert!((v + 0.32508).abs() < 1e-5);
        // grid scan: no other P does better for q = 0.9
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            assert!(kl_guide_regularizer(&theta_for(p), &[lf(0.9)]) <= v + 1e-12);
        }
    }

    #[test]
    fn kl_guide_symmetric_case() {
        let p = ModelParams::zeros(1, 2);
        let v = kl_guide_regularizer(&p, &[lf(0.5)]);
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kl_guide_saturated_probability_stays_finite() {
        let p = ModelParams {
            theta: vec![vec![400.0, -400.0]],
            rho: vec![vec![0.0; 2]],
        };
        let v = kl_guide_regularizer(&p, &[lf(0.9)]);
        assert!(v.is_finite());
        assert!((v - 0.1 * PROB_CLAMP.ln()).abs() < 1e-6);
    }

    #[test]
    fn sign_penalty_cases() {
        let lfs = [LfSpec::discrete("a", 1), LfSpec::discrete("b", 2)];
        let agreeing = ModelParams {
            theta: vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            rho: vec![vec![0.0; 2]; 2],
        };
        assert_eq!(sign_penalty(&agreeing, &lfs), 0.0);
        let boundary = ModelParams {
            theta: vec![vec![0.4, 0.4], vec![-1.0, 1.0]],
            rho: vec![vec![0.0; 2]; 2],
        };
        assert_eq!(sign_penalty(&boundary, &lfs), 0.0);
        let one_hinge = ModelParams {
            theta: vec![vec![0.2, 0.5], vec![-1.0, 1.0]],
            rho: vec![vec![0.0; 2]; 2],
        };
        assert!((sign_penalty(&one_hinge, &lfs) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn data_guide_untriggered_lf_costs_ln2() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let obs = ObservationSet::new(2, &lfs, vec![vec![0], vec![0]], vec![vec![0.0], vec![0.0]], None).unwrap();
        let v = data_guide_regularizer(&ModelParams::zeros(1, 2), &lfs, &obs).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn data_guide_exact_match() {
        // posterior on a single trigger equals q exactly when θ gives logit(q)
        let lfs = vec![LfSpec::discrete("a", 1).with_guides(0.75, None)];
        let logit = 3f64.ln();
        let params = ModelParams {
            theta: vec![vec![logit, 0.0]],
            rho: vec![vec![0.0; 2]],
        };
        let obs = ObservationSet::new(2, &lfs, vec![vec![1]], vec![vec![0.0]], None).unwrap();
        let v = data_guide_regularizer(&params, &lfs, &obs).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn data_guide_rejects_empty_batch() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let obs = ObservationSet::new(2, &lfs, vec![], vec![], None).unwrap();
        assert!(data_guide_regularizer(&ModelParams::zeros(1, 2), &lfs, &obs).is_err());
    }
}

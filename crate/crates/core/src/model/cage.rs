//! Joint distribution P(y, τ, s) = (1/Z_θ) Π_j ψ_θ(τ_j, y) ψ_π(τ_j, s_j, y)^{cont(j)}.
//!
//! The Beta factors integrate to one over s, so
//! Z_θ = Σ_y Π_j (1 + exp θ_{jy}) depends on θ only.

use crate::error::InputError;
use crate::model::lf::LfSpec;
use crate::model::params::ModelParams;
use crate::model::posterior::LabelPosterior;
use crate::model::potentials::{beta_potential, check_class};
use crate::special::{log_sum_exp, sigmoid, softplus};

/// log Z_θ = logsumexp_y Σ_j softplus(θ_{jy}). Never reads ρ.
pub fn log_normalizer(params: &ModelParams) -> f64 {
    let k = params.num_classes();
    let per_class: Vec<f64> = (0..k)
        .map(|c| params.theta.iter().map(|row| softplus(row[c])).sum())
        .collect();
    log_sum_exp(&per_class)
}

pub(crate) fn check_row(lfs: &[LfSpec], tau: &[u32], score: &[f64]) -> Result<(), InputError> {
    if tau.len() != lfs.len() {
        return Err(InputError::RowLength {
            expected: lfs.len(),
            got: tau.len(),
        });
    }
    if score.len() != lfs.len() {
        return Err(InputError::RowLength {
            expected: lfs.len(),
            got: score.len(),
        });
    }
    for (j, lf) in lfs.iter().enumerate() {
        let t = tau[j];
        if t != 0 && t as usize != lf.target_class {
            return Err(InputError::InvalidTrigger {
                instance: 0,
                lf: lf.lf_id.clone(),
                value: t,
                target: lf.target_class,
            });
        }
        if t != 0 && lf.is_continuous && !(score[j] > 0.0 && score[j] < 1.0) {
            return Err(InputError::InvalidScore {
                instance: 0,
                lf: lf.lf_id.clone(),
                score: score[j],
            });
        }
    }
    Ok(())
}

/// Unnormalized log joint for every class, assuming a validated row.
pub(crate) fn class_log_scores_unchecked(params: &ModelParams, lfs: &[LfSpec], tau: &[u32], score: &[f64]) -> Vec<f64> {
    let k = params.num_classes();
    let mut out = vec![0.0; k];
    for (j, lf) in lfs.iter().enumerate() {
        if tau[j] == 0 {
            continue;
        }
        for (c, o) in out.iter_mut().enumerate() {
            *o += params.theta[j][c];
            if lf.is_continuous {
                *o += beta_potential(lf.score_guide(), params.rho[j][c], score[j], c == lf.target_index());
            }
        }
    }
    out
}

/// Σ_j log potentials for each class y (index y−1), without the normalizer.
pub fn class_log_scores(
    params: &ModelParams,
    lfs: &[LfSpec],
    tau: &[u32],
    score: &[f64],
) -> Result<Vec<f64>, InputError> {
    check_row(lfs, tau, score)?;
    Ok(class_log_scores_unchecked(params, lfs, tau, score))
}

/// log P(y, τ, s) with `y` 1-based.
pub fn log_joint(
    params: &ModelParams,
    lfs: &[LfSpec],
    tau: &[u32],
    score: &[f64],
    y: usize,
) -> Result<f64, InputError> {
    check_class(y, params.num_classes())?;
    let scores = class_log_scores(params, lfs, tau, score)?;
    Ok(scores[y - 1] - log_normalizer(params))
}

/// P(y | τ, s), with the argmax class as prediction.
pub fn posterior(
    params: &ModelParams,
    lfs: &[LfSpec],
    tau: &[u32],
    score: &[f64],
) -> Result<LabelPosterior, InputError> {
    let scores = class_log_scores(params, lfs, tau, score)?;
    Ok(LabelPosterior::from_log_scores(&scores))
}

/// Per-LF, per-class logits t_j(y) with P_θ(y | τ_j = k_j) = softmax_y t_j(y):
/// t_j(y) = θ_{jy} + Σ_{r≠j} softplus(θ_{ry}).
///
/// `weights` stands in for θ so that globally normalized variants can pass
/// their effective per-class factors.
pub(crate) fn agreement_logits(weights: &[Vec<f64>], num_classes: usize) -> Vec<Vec<f64>> {
    let totals: Vec<f64> = (0..num_classes)
        .map(|c| weights.iter().map(|row| softplus(row[c])).sum())
        .collect();
    weights
        .iter()
        .map(|row| {
            (0..num_classes)
                .map(|c| row[c] + (totals[c] - softplus(row[c])))
                .collect()
        })
        .collect()
}

/// Pulls ∂R/∂t_j(y) back to ∂R/∂weights_{ry} for the logits above:
/// ∂t_j(y)/∂w_{ry} is 1 when r = j and σ(w_{ry}) otherwise.
pub(crate) fn agreement_logits_backprop(weights: &[Vec<f64>], d_logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let num_classes = weights.first().map_or(0, Vec::len);
    let col_totals: Vec<f64> = (0..num_classes)
        .map(|c| d_logits.iter().map(|row| row[c]).sum())
        .collect();
    weights
        .iter()
        .zip(d_logits)
        .map(|(w, d)| {
            (0..num_classes)
                .map(|c| d[c] + sigmoid(w[c]) * (col_totals[c] - d[c]))
                .collect()
        })
        .collect()
}

/// P_θ(y = k_j | τ_j = k_j), marginalizing every other LF and the scores.
pub fn agreement_probability(params: &ModelParams, lfs: &[LfSpec], j: usize) -> f64 {
    log_agreement_probability(params, lfs, j).exp()
}

pub fn log_agreement_probability(params: &ModelParams, lfs: &[LfSpec], j: usize) -> f64 {
    let logits = agreement_logits(&params.theta, params.num_classes());
    let row = &logits[j];
    row[lfs[j].target_index()] - log_sum_exp(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizer_small_cases() {
        let p = ModelParams::zeros(1, 2);
        assert!((log_normalizer(&p) - 4f64.ln()).abs() < 1e-14);
        let p = ModelParams::zeros(2, 2);
        assert!((log_normalizer(&p) - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn normalizer_ignores_rho() {
        let mut p = ModelParams::filled(3, 3, 0.4);
        p.theta[1][2] = -1.3;
        let before = log_normalizer(&p);
        p.rho[0][0] = 17.0;
        p.rho[2][1] = -4.0;
        assert_eq!(before.to_bits(), log_normalizer(&p).to_bits());
    }

    #[test]
    fn normalizer_survives_many_lfs() {
        let p = ModelParams::filled(2000, 2, 5.0);
        assert!(log_normalizer(&p).is_finite());
    }

    #[test]
    fn log_joint_all_abstain() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let p = ModelParams::zeros(1, 2);
        for y in 1..=2 {
            let v = log_joint(&p, &lfs, &[0], &[0.5], y).unwrap();
            assert!((v + 4f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn log_joint_differences_follow_theta() {
        let lfs = vec![LfSpec::discrete("a", 2), LfSpec::discrete("b", 1)];
        let p = ModelParams {
            theta: vec![vec![0.2, 1.7], vec![-0.4, 0.9]],
            rho: vec![vec![0.0; 2]; 2],
        };
        let a = log_joint(&p, &lfs, &[2, 0], &[0.5, 0.5], 1).unwrap();
        let b = log_joint(&p, &lfs, &[2, 0], &[0.5, 0.5], 2).unwrap();
        assert!(((b - a) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn posterior_uniform_at_zero_theta() {
        let lfs = vec![LfSpec::discrete("a", 1), LfSpec::discrete("b", 3)];
        let p = ModelParams::zeros(2, 3);
        let post = posterior(&p, &lfs, &[1, 3], &[0.5, 0.5]).unwrap();
        for &v in &post.probs {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(post.prediction, 1);
    }

    #[test]
    fn posterior_concentrates_on_trusted_lf() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let p = ModelParams {
            theta: vec![vec![5.0, -5.0]],
            rho: vec![vec![0.0; 2]],
        };
        let post = posterior(&p, &lfs, &[1], &[0.5]).unwrap();
        // softmax of (5, -5) computed directly
        let expected = 1.0 / (1.0 + (-10f64).exp());
        assert!((post.probs[0] - expected).abs() < 1e-15);
        assert!(post.probs[0] > 0.99);
    }

    #[test]
    fn posterior_invariant_to_row_shift() {
        let lfs = vec![LfSpec::discrete("a", 1), LfSpec::continuous("b", 2)];
        let mut p = ModelParams {
            theta: vec![vec![0.3, -0.2], vec![1.1, 0.4]],
            rho: vec![vec![0.5, -0.1], vec![0.8, 1.2]],
        };
        let before = posterior(&p, &lfs, &[1, 2], &[0.5, 0.8]).unwrap();
        for v in &mut p.theta[0] {
            *v += 2.5;
        }
        let after = posterior(&p, &lfs, &[1, 2], &[0.5, 0.8]).unwrap();
        for (a, b) in before.probs.iter().zip(&after.probs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn agreement_single_lf() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let p = ModelParams {
            theta: vec![vec![0.7, 0.7]],
            rho: vec![vec![0.0; 2]],
        };
        assert!((agreement_probability(&p, &lfs, 0) - 0.5).abs() < 1e-15);
        let p = ModelParams {
            theta: vec![vec![1.0, -1.0]],
            rho: vec![vec![0.0; 2]],
        };
        let e = 1f64.exp();
        let expected = e / (e + 1.0 / e);
        assert!((agreement_probability(&p, &lfs, 0) - expected).abs() < 1e-14);
        assert!((expected - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn row_validation() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let p = ModelParams::zeros(1, 2);
        assert!(posterior(&p, &lfs, &[1, 0], &[0.5, 0.5]).is_err());
        assert!(posterior(&p, &lfs, &[2], &[0.5]).is_err());
        assert!(log_joint(&p, &lfs, &[1], &[0.5], 3).is_err());
    }
}

//! Directed Bayesian-network baseline:
//! P(y) Π_j P(τ_j | y) Π_{j continuous, triggered} Beta(s_j | y),
//! with P(τ_j = k_j | y) = σ(θ_{jy}). Every factor is locally normalized, so
//! there is no global normalizer.
//!
//! Parameter layout: θ (n×K), ρ (n×K), class-prior logits (K).

use crate::error::InputError;
use crate::model::cage::check_row;
use crate::model::lf::LfSpec;
use crate::model::params::ModelParams;
use crate::model::potentials::{beta_potential, beta_potential_with_grad, check_class};
use crate::special::{log_sigmoid, sigmoid, softmax_into};
use crate::training::engine::ScoreModel;

/// Tolerance on Σ prior = 1.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

/// log P(y, τ, s) under the directed model. `class_prior` is a probability
/// vector over classes; `y` is 1-based.
pub fn directed_log_joint(
    class_prior: &[f64],
    params: &ModelParams,
    lfs: &[LfSpec],
    tau: &[u32],
    score: &[f64],
    y: usize,
) -> Result<f64, InputError> {
    let k = params.num_classes();
    check_class(y, k)?;
    check_row(lfs, tau, score)?;
    if class_prior.len() != k {
        return Err(InputError::LengthMismatch {
            what: "class prior vs classes",
            left: class_prior.len(),
            right: k,
        });
    }
    let total: f64 = class_prior.iter().sum();
    if (total - 1.0).abs() > PRIOR_SUM_TOL || class_prior.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(InputError::Invalid(format!(
            "class prior must be a probability vector (sums to {total})"
        )));
    }
    let c = y - 1;
    let mut value = class_prior[c].ln();
    for (j, lf) in lfs.iter().enumerate() {
        let theta = params.theta[j][c];
        if tau[j] != 0 {
            value += log_sigmoid(theta);
            if lf.is_continuous {
                value += beta_potential(lf.score_guide(), params.rho[j][c], score[j], c == lf.target_index());
            }
        } else {
            value += log_sigmoid(-theta);
        }
    }
    Ok(value)
}

pub struct DirectedModel<'a> {
    lfs: &'a [LfSpec],
    num_classes: usize,
}

impl<'a> DirectedModel<'a> {
    pub fn new(lfs: &'a [LfSpec], num_classes: usize) -> Self {
        Self { lfs, num_classes }
    }

    fn theta_at(&self, j: usize, c: usize) -> usize {
        j * self.num_classes + c
    }

    fn rho_at(&self, j: usize, c: usize) -> usize {
        (self.lfs.len() + j) * self.num_classes + c
    }

    fn prior_at(&self, c: usize) -> usize {
        2 * self.lfs.len() * self.num_classes + c
    }

    fn prior(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let logits = &p[self.prior_at(0)..self.prior_at(0) + self.num_classes];
        let mut probs = vec![0.0; self.num_classes];
        let lse = softmax_into(logits, &mut probs);
        let log_probs = logits.iter().map(|l| l - lse).collect();
        (probs, log_probs)
    }

    fn push_prior_grad(&self, probs: &[f64], d_log_prior: &[f64], grad: &mut [f64]) {
        let total: f64 = d_log_prior.iter().sum();
        for z in 0..self.num_classes {
            grad[self.prior_at(z)] += d_log_prior[z] - probs[z] * total;
        }
    }
}

impl ScoreModel for DirectedModel<'_> {
    fn lfs(&self) -> &[LfSpec] {
        self.lfs
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn num_params(&self) -> usize {
        (2 * self.lfs.len() + 1) * self.num_classes
    }

    fn instance_scores(&self, p: &[f64], tau: &[u32], score: &[f64], out: &mut [f64]) {
        let (_, log_prior) = self.prior(p);
        out.copy_from_slice(&log_prior);
        for (j, lf) in self.lfs.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                let theta = p[self.theta_at(j, c)];
                if tau[j] != 0 {
                    *o += log_sigmoid(theta);
                    if lf.is_continuous {
                        *o += beta_potential(lf.score_guide(), p[self.rho_at(j, c)], score[j], c == lf.target_index());
                    }
                } else {
                    *o += log_sigmoid(-theta);
                }
            }
        }
    }

    fn backprop_instance(&self, p: &[f64], tau: &[u32], score: &[f64], d_scores: &[f64], grad: &mut [f64]) {
        let (probs, _) = self.prior(p);
        self.push_prior_grad(&probs, d_scores, grad);
        for (j, lf) in self.lfs.iter().enumerate() {
            for (c, &d) in d_scores.iter().enumerate() {
                let ti = self.theta_at(j, c);
                let s = sigmoid(p[ti]);
                if tau[j] != 0 {
                    grad[ti] += d * (1.0 - s);
                    if lf.is_continuous {
                        let ri = self.rho_at(j, c);
                        let (_, d_rho) =
                            beta_potential_with_grad(lf.score_guide(), p[ri], score[j], c == lf.target_index());
                        grad[ri] += d * d_rho;
                    }
                } else {
                    grad[ti] -= d * s;
                }
            }
        }
    }

    fn log_normalizer(&self, _p: &[f64], _grad: Option<(&mut [f64], f64)>) -> f64 {
        0.0
    }

    /// t_j(y) = log P(y) + log σ(θ_{jy})
    fn agreement_logits(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let (_, log_prior) = self.prior(p);
        (0..self.lfs.len())
            .map(|j| {
                (0..self.num_classes)
                    .map(|c| log_prior[c] + log_sigmoid(p[self.theta_at(j, c)]))
                    .collect()
            })
            .collect()
    }

    fn backprop_agreement(&self, p: &[f64], d_logits: &[Vec<f64>], grad: &mut [f64]) {
        let (probs, _) = self.prior(p);
        let mut d_log_prior = vec![0.0; self.num_classes];
        for (j, row) in d_logits.iter().enumerate() {
            for (c, &d) in row.iter().enumerate() {
                let ti = self.theta_at(j, c);
                grad[ti] += d * (1.0 - sigmoid(p[ti]));
                d_log_prior[c] += d;
            }
        }
        self.push_prior_grad(&probs, &d_log_prior, grad);
    }

    fn discrete_weights(&self, p: &[f64]) -> Vec<Vec<f64>> {
        (0..self.lfs.len())
            .map(|j| (0..self.num_classes).map(|c| p[self.theta_at(j, c)]).collect())
            .collect()
    }

    fn backprop_discrete(&self, _p: &[f64], d_weights: &[Vec<f64>], grad: &mut [f64]) {
        for (j, row) in d_weights.iter().enumerate() {
            for (c, &d) in row.iter().enumerate() {
                grad[self.theta_at(j, c)] += d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_prior_zero_theta_gives_uniform_posterior() {
        let lfs = vec![LfSpec::discrete("a", 1), LfSpec::discrete("b", 2)];
        let params = ModelParams::zeros(2, 2);
        let prior = [0.5, 0.5];
        let a = directed_log_joint(&prior, &params, &lfs, &[1, 0], &[0.5, 0.5], 1).unwrap();
        let b = directed_log_joint(&prior, &params, &lfs, &[1, 0], &[0.5, 0.5], 2).unwrap();
        assert_eq!(a, b);
        // each τ branch has probability 1/2
        assert!((a - (0.5f64.ln() * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_probability_prior() {
        let lfs = vec![LfSpec::discrete("a", 1)];
        let params = ModelParams::zeros(1, 2);
        assert!(directed_log_joint(&[0.6, 0.6], &params, &lfs, &[0], &[0.5], 1).is_err());
        assert!(directed_log_joint(&[1.0], &params, &lfs, &[0], &[0.5], 1).is_err());
    }
}

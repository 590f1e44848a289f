//! Shared-parameter baseline: one θ_j per LF, contributing exp(θ_j) when the
//! LF triggers on its own class and exp(−θ_j) on any other class. Scores of
//! continuous LFs are ignored.
//!
//! Parameter layout: θ (n).

use crate::error::InputError;
use crate::model::cage::{agreement_logits, agreement_logits_backprop, check_row};
use crate::model::lf::LfSpec;
use crate::model::posterior::LabelPosterior;
use crate::model::potentials::check_class;
use crate::special::{log_sum_exp, sigmoid, softplus};
use crate::training::engine::ScoreModel;

/// log ψ^snorkel(τ, y): θ_j on agreement, −θ_j on disagreement, 0 when the
/// LF abstains.
pub fn snorkel_log_potential(theta_j: f64, lf: &LfSpec, tau: u32, y: usize) -> f64 {
    if tau == 0 {
        0.0
    } else if y == lf.target_class {
        theta_j
    } else {
        -theta_j
    }
}

/// log Σ_y Π_j (1 + exp(±θ_j)).
pub fn snorkel_log_normalizer(theta: &[f64], lfs: &[LfSpec], num_classes: usize) -> f64 {
    let per_class: Vec<f64> = (1..=num_classes)
        .map(|y| {
            theta
                .iter()
                .zip(lfs)
                .map(|(&t, lf)| softplus(snorkel_log_potential(t, lf, lf.target_class as u32, y)))
                .sum()
        })
        .collect();
    log_sum_exp(&per_class)
}

pub fn snorkel_posterior(
    theta: &[f64],
    lfs: &[LfSpec],
    num_classes: usize,
    tau: &[u32],
) -> Result<LabelPosterior, InputError> {
    check_row(lfs, tau, &vec![0.5; tau.len()])?;
    let scores: Vec<f64> = (1..=num_classes)
        .map(|y| {
            lfs.iter()
                .enumerate()
                .map(|(j, lf)| snorkel_log_potential(theta[j], lf, tau[j], y))
                .sum()
        })
        .collect();
    Ok(LabelPosterior::from_log_scores(&scores))
}

/// log P(y, τ) under the shared-parameter model.
pub fn snorkel_log_joint(
    theta: &[f64],
    lfs: &[LfSpec],
    num_classes: usize,
    tau: &[u32],
    y: usize,
) -> Result<f64, InputError> {
    check_class(y, num_classes)?;
    check_row(lfs, tau, &vec![0.5; tau.len()])?;
    let score: f64 = lfs
        .iter()
        .enumerate()
        .map(|(j, lf)| snorkel_log_potential(theta[j], lf, tau[j], y))
        .sum();
    Ok(score - snorkel_log_normalizer(theta, lfs, num_classes))
}

/// Per-class weights ±θ_j this model implies, i.e. the CAGE θ it embeds as.
pub fn expand_theta(theta: &[f64], lfs: &[LfSpec], num_classes: usize) -> Vec<Vec<f64>> {
    theta
        .iter()
        .zip(lfs)
        .map(|(&t, lf)| {
            (0..num_classes)
                .map(|c| if c == lf.target_index() { t } else { -t })
                .collect()
        })
        .collect()
}

pub struct SnorkelModel<'a> {
    lfs: &'a [LfSpec],
    num_classes: usize,
}

impl<'a> SnorkelModel<'a> {
    pub fn new(lfs: &'a [LfSpec], num_classes: usize) -> Self {
        Self { lfs, num_classes }
    }

    fn sign(&self, j: usize, c: usize) -> f64 {
        if c == self.lfs[j].target_index() {
            1.0
        } else {
            -1.0
        }
    }

    fn contract(&self, d_weights: &[Vec<f64>], grad: &mut [f64]) {
        for (j, row) in d_weights.iter().enumerate() {
            grad[j] += row.iter().enumerate().map(|(c, &d)| d * self.sign(j, c)).sum::<f64>();
        }
    }
}

impl ScoreModel for SnorkelModel<'_> {
    fn lfs(&self) -> &[LfSpec] {
        self.lfs
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn num_params(&self) -> usize {
        self.lfs.len()
    }

    fn instance_scores(&self, p: &[f64], tau: &[u32], _score: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &t) in tau.iter().enumerate() {
            if t != 0 {
                for (c, o) in out.iter_mut().enumerate() {
                    *o += self.sign(j, c) * p[j];
                }
            }
        }
    }

    fn backprop_instance(&self, _p: &[f64], tau: &[u32], _score: &[f64], d_scores: &[f64], grad: &mut [f64]) {
        for (j, &t) in tau.iter().enumerate() {
            if t != 0 {
                grad[j] += d_scores
                    .iter()
                    .enumerate()
                    .map(|(c, &d)| d * self.sign(j, c))
                    .sum::<f64>();
            }
        }
    }

    fn log_normalizer(&self, p: &[f64], grad: Option<(&mut [f64], f64)>) -> f64 {
        let w = expand_theta(p, self.lfs, self.num_classes);
        let per_class: Vec<f64> = (0..self.num_classes)
            .map(|c| w.iter().map(|row| softplus(row[c])).sum())
            .collect();
        let log_z = log_sum_exp(&per_class);
        if let Some((g, scale)) = grad {
            let d: Vec<Vec<f64>> = w
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&per_class)
                        .map(|(&x, &pc)| scale * (pc - log_z).exp() * sigmoid(x))
                        .collect()
                })
                .collect();
            self.contract(&d, g);
        }
        log_z
    }

    fn agreement_logits(&self, p: &[f64]) -> Vec<Vec<f64>> {
        agreement_logits(&expand_theta(p, self.lfs, self.num_classes), self.num_classes)
    }

    fn backprop_agreement(&self, p: &[f64], d_logits: &[Vec<f64>], grad: &mut [f64]) {
        let w = expand_theta(p, self.lfs, self.num_classes);
        let d = agreement_logits_backprop(&w, d_logits);
        self.contract(&d, grad);
    }

    fn discrete_weights(&self, p: &[f64]) -> Vec<Vec<f64>> {
        expand_theta(p, self.lfs, self.num_classes)
    }

    fn backprop_discrete(&self, _p: &[f64], d_weights: &[Vec<f64>], grad: &mut [f64]) {
        self.contract(d_weights, grad);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_theta_is_zero_everywhere() {
        let lf = LfSpec::discrete("a", 1);
        for tau in [0, 1] {
            for y in 1..=2 {
                assert_eq!(snorkel_log_potential(0.0, &lf, tau, y), 0.0);
            }
        }
    }

    #[test]
    fn branch_weights_are_reciprocal() {
        // exp(θ)·exp(−θ) = 1 ties the agree and disagree branches together
        let lf = LfSpec::discrete("a", 2);
        for &t in &[-2.0, 0.3, 1.7] {
            let agree = snorkel_log_potential(t, &lf, 2, 2).exp();
            let disagree = snorkel_log_potential(t, &lf, 2, 1).exp();
            assert!((agree * disagree - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn joint_normalizes_over_enumeration() {
        let lfs = vec![
            LfSpec::discrete("a", 1),
            LfSpec::discrete("b", 2),
            LfSpec::discrete("c", 1),
        ];
        let theta = [0.4, -1.1, 2.0];
        let mut total = 0.0;
        for mask in 0..8u32 {
            let tau: Vec<u32> = (0..3)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        lfs[j].target_class as u32
                    } else {
                        0
                    }
                })
                .collect();
            for y in 1..=2 {
                total += snorkel_log_joint(&theta, &lfs, 2, &tau, y).unwrap().exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}

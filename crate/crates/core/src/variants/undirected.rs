//! Undirected model with per-class discrete weights θ_{jy} and a pluggable
//! continuous potential. With the Beta form this is the CAGE model; the
//! other forms are the globally normalized ablations.
//!
//! Parameter layout: θ (n×K, row-major) followed by ρ (n×K).

use crate::model::cage::{agreement_logits, agreement_logits_backprop};
use crate::model::lf::LfSpec;
use crate::special::{log_sum_exp, sigmoid, softplus};
use crate::training::engine::ScoreModel;
use crate::variants::alt::ContinuousForm;

pub struct UndirectedModel<'a> {
    lfs: &'a [LfSpec],
    num_classes: usize,
    form: ContinuousForm,
}

/// Effective per-class log factor φ_{jy} = θ_{jy} + log I_{jy} with its
/// partials in θ and ρ. I ≡ 1 for discrete LFs and the Beta form.
struct Effective {
    phi: Vec<Vec<f64>>,
    d_theta: Vec<Vec<f64>>,
    d_rho: Vec<Vec<f64>>,
}

impl<'a> UndirectedModel<'a> {
    pub fn new(lfs: &'a [LfSpec], num_classes: usize, form: ContinuousForm) -> Self {
        Self { lfs, num_classes, form }
    }

    pub fn cage(lfs: &'a [LfSpec], num_classes: usize) -> Self {
        Self::new(lfs, num_classes, ContinuousForm::Beta)
    }

    fn theta_at(&self, j: usize, c: usize) -> usize {
        j * self.num_classes + c
    }

    fn rho_at(&self, j: usize, c: usize) -> usize {
        (self.lfs.len() + j) * self.num_classes + c
    }

    fn needs_integral(&self, lf: &LfSpec) -> bool {
        lf.is_continuous && !self.form.is_locally_normalized()
    }

    fn effective(&self, p: &[f64]) -> Effective {
        let k = self.num_classes;
        let mut eff = Effective {
            phi: Vec::with_capacity(self.lfs.len()),
            d_theta: Vec::with_capacity(self.lfs.len()),
            d_rho: Vec::with_capacity(self.lfs.len()),
        };
        for (j, lf) in self.lfs.iter().enumerate() {
            let mut phi = vec![0.0; k];
            let mut dt = vec![1.0; k];
            let mut dr = vec![0.0; k];
            for c in 0..k {
                let theta = p[self.theta_at(j, c)];
                phi[c] = theta;
                if self.needs_integral(lf) {
                    let q_c = lf.quality_guide_c.unwrap_or(0.5);
                    let agree = c == lf.target_index();
                    let (log_i, di_t, di_r) = self.form.log_integral(theta, p[self.rho_at(j, c)], q_c, agree);
                    phi[c] += log_i;
                    dt[c] += di_t;
                    dr[c] = di_r;
                }
            }
            eff.phi.push(phi);
            eff.d_theta.push(dt);
            eff.d_rho.push(dr);
        }
        eff
    }

    fn push_effective_grad(&self, eff: &Effective, d_phi: &[Vec<f64>], grad: &mut [f64]) {
        for (j, lf) in self.lfs.iter().enumerate() {
            for c in 0..self.num_classes {
                grad[self.theta_at(j, c)] += d_phi[j][c] * eff.d_theta[j][c];
                if self.needs_integral(lf) {
                    grad[self.rho_at(j, c)] += d_phi[j][c] * eff.d_rho[j][c];
                }
            }
        }
    }
}

impl ScoreModel for UndirectedModel<'_> {
    fn lfs(&self) -> &[LfSpec] {
        self.lfs
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn num_params(&self) -> usize {
        2 * self.lfs.len() * self.num_classes
    }

    fn instance_scores(&self, p: &[f64], tau: &[u32], score: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, lf) in self.lfs.iter().enumerate() {
            if tau[j] == 0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                let theta = p[self.theta_at(j, c)];
                *o += theta;
                if lf.is_continuous {
                    let q_c = lf.quality_guide_c.unwrap_or(0.5);
                    *o += self
                        .form
                        .eval(theta, p[self.rho_at(j, c)], q_c, score[j], c == lf.target_index())
                        .value;
                }
            }
        }
    }

    fn backprop_instance(&self, p: &[f64], tau: &[u32], score: &[f64], d_scores: &[f64], grad: &mut [f64]) {
        for (j, lf) in self.lfs.iter().enumerate() {
            if tau[j] == 0 {
                continue;
            }
            for (c, &d) in d_scores.iter().enumerate() {
                let ti = self.theta_at(j, c);
                grad[ti] += d;
                if lf.is_continuous {
                    let q_c = lf.quality_guide_c.unwrap_or(0.5);
                    let ri = self.rho_at(j, c);
                    let f = self.form.eval(p[ti], p[ri], q_c, score[j], c == lf.target_index());
                    grad[ti] += d * f.d_theta;
                    grad[ri] += d * f.d_rho;
                }
            }
        }
    }

    fn log_normalizer(&self, p: &[f64], grad: Option<(&mut [f64], f64)>) -> f64 {
        let eff = self.effective(p);
        let per_class: Vec<f64> = (0..self.num_classes)
            .map(|c| eff.phi.iter().map(|row| softplus(row[c])).sum())
            .collect();
        let log_z = log_sum_exp(&per_class);
        if let Some((g, scale)) = grad {
            let d_phi: Vec<Vec<f64>> = eff
                .phi
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&per_class)
                        .map(|(&phi, &pc)| scale * (pc - log_z).exp() * sigmoid(phi))
                        .collect()
                })
                .collect();
            self.push_effective_grad(&eff, &d_phi, g);
        }
        log_z
    }

    fn agreement_logits(&self, p: &[f64]) -> Vec<Vec<f64>> {
        agreement_logits(&self.effective(p).phi, self.num_classes)
    }

    fn backprop_agreement(&self, p: &[f64], d_logits: &[Vec<f64>], grad: &mut [f64]) {
        let eff = self.effective(p);
        let d_phi = agreement_logits_backprop(&eff.phi, d_logits);
        self.push_effective_grad(&eff, &d_phi, grad);
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

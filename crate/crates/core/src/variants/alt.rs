//! Continuous potential forms for the ablation study.
//!
//! Every form returns its log value together with the partial derivatives in
//! the LF/class parameters θ_{jy} and ρ_{jy}. The Beta form is locally
//! normalized; the others are normalized globally, so the model normalizer
//! integrates them numerically over the score range.

use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::model::lf::LfSpec;
use crate::model::observations::SCORE_CLAMP;
use crate::model::potentials::{beta_potential_with_grad, check_class};
use crate::special::{sigmoid, simpson_nodes};

/// Composite Simpson panels used for the global normalization integrals.
pub const INTEGRATION_PANELS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousForm {
    /// Locally normalized Beta with mean tied to q^c.
    Beta,
    /// θ·s
    Weight,
    /// θ·max(s − t, 0), threshold t = ρ
    Threshold,
    /// θ·sigmoid(s − t), threshold t = ρ
    Sigmoid,
    /// θ·log(s / (1 − s))
    Logit,
    /// Half-Gaussian with mode at 1 (agreement) or 0 (disagreement), scale exp ρ.
    HalfGaussian,
}

/// Log potential value and its partials `(v, ∂v/∂θ, ∂v/∂ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub value: f64,
    pub d_theta: f64,
    pub d_rho: f64,
}

impl ContinuousForm {
    pub fn is_locally_normalized(self) -> bool {
        matches!(self, ContinuousForm::Beta)
    }

    /// Log potential for a triggered continuous LF at score `s`. `agree`
    /// says whether the class under consideration is the LF's target class.
    pub fn eval(self, theta: f64, rho: f64, q_c: f64, s: f64, agree: bool) -> FormValue {
        match self {
            ContinuousForm::Beta => {
                let (value, d_rho) = beta_potential_with_grad(q_c, rho, s, agree);
                FormValue {
                    value,
                    d_theta: 0.0,
                    d_rho,
                }
            }
            ContinuousForm::Weight => FormValue {
                value: theta * s,
                d_theta: s,
                d_rho: 0.0,
            },
            ContinuousForm::Threshold => {
                let excess = s - rho;
                if excess > 0.0 {
                    FormValue {
                        value: theta * excess,
                        d_theta: excess,
                        d_rho: -theta,
                    }
                } else {
                    FormValue {
                        value: 0.0,
                        d_theta: 0.0,
                        d_rho: 0.0,
                    }
                }
            }
            ContinuousForm::Sigmoid => {
                let g = sigmoid(s - rho);
                FormValue {
                    value: theta * g,
                    d_theta: g,
                    d_rho: -theta * g * (1.0 - g),
                }
            }
            ContinuousForm::Logit => {
                let l = s.ln() - (-s).ln_1p();
                FormValue {
                    value: theta * l,
                    d_theta: l,
                    d_rho: 0.0,
                }
            }
            ContinuousForm::HalfGaussian => {
                let dist = if agree { 1.0 - s } else { s };
                let scale = rho.exp();
                let z2 = (dist / scale) * (dist / scale);
                FormValue {
                    // log(2 / (σ√(2π))) − d²/(2σ²)
                    value: (2.0 / std::f64::consts::PI).sqrt().ln() - rho - 0.5 * z2,
                    d_theta: 0.0,
                    d_rho: -1.0 + z2,
                }
            }
        }
    }

    /// `(log I, ∂ log I/∂θ, ∂ log I/∂ρ)` where I = ∫ exp(v(s)) ds over the
    /// clamped score range, by composite Simpson.
    pub fn log_integral(self, theta: f64, rho: f64, q_c: f64, agree: bool) -> (f64, f64, f64) {
        let nodes = simpson_nodes(SCORE_CLAMP, 1.0 - SCORE_CLAMP, INTEGRATION_PANELS);
        let evals: Vec<(f64, FormValue)> = nodes
            .iter()
            .map(|&(s, w)| (w, self.eval(theta, rho, q_c, s, agree)))
            .collect();
        let shift = evals.iter().map(|(_, f)| f.value).fold(f64::NEG_INFINITY, f64::max);
        let (mut mass, mut d_theta, mut d_rho) = (0.0, 0.0, 0.0);
        for (w, f) in &evals {
            let e = w * (f.value - shift).exp();
            mass += e;
            d_theta += e * f.d_theta;
            d_rho += e * f.d_rho;
        }
        (shift + mass.ln(), d_theta / mass, d_rho / mass)
    }
}

/// Log potential of `form` for LF `lf` at class `y` (1-based); 0 when
/// untriggered.
#[allow(clippy::too_many_arguments)]
pub fn alt_continuous_log_potential(
    form: ContinuousForm,
    theta: f64,
    rho: f64,
    lf: &LfSpec,
    tau: u32,
    score: f64,
    y: usize,
    num_classes: usize,
) -> Result<f64, InputError> {
    check_class(y, num_classes)?;
    if tau == 0 {
        return Ok(0.0);
    }
    if !(score > 0.0 && score < 1.0) {
        return Err(InputError::InvalidScore {
            instance: 0,
            lf: lf.lf_id.clone(),
            score,
        });
    }
    let q_c = lf.quality_guide_c.unwrap_or(0.5);
    Ok(form.eval(theta, rho, q_c, score, y == lf.target_class).value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA_FORMS: [ContinuousForm; 4] = [
        ContinuousForm::Weight,
        ContinuousForm::Threshold,
        ContinuousForm::Sigmoid,
        ContinuousForm::Logit,
    ];

    #[test]
    fn weight_with_zero_theta_is_zero() {
        for &s in &[0.1, 0.5, 0.9] {
            assert_eq!(ContinuousForm::Weight.eval(0.0, 0.0, 0.5, s, true).value, 0.0);
        }
    }

    #[test]
    fn threshold_inactive_above_one() {
        for &s in &[1e-6, 0.4, 0.999_999] {
            assert_eq!(ContinuousForm::Threshold.eval(2.0, 1.0, 0.5, s, true).value, 0.0);
            assert_eq!(ContinuousForm::Threshold.eval(2.0, 1.7, 0.5, s, false).value, 0.0);
        }
    }

    #[test]
    fn theta_scaled_forms_are_constant_at_zero_theta() {
        for form in THETA_FORMS {
            let a = form.eval(0.0, 0.3, 0.5, 0.1, true).value;
            let b = form.eval(0.0, 0.3, 0.5, 0.8, true).value;
            assert_eq!(a, b, "{form:?}");
        }
    }

    #[test]
    fn half_gaussian_agreement_peaks_at_one() {
        // grid scan over s
        let form = ContinuousForm::HalfGaussian;
        let grid: Vec<f64> = (1..1000).map(|k| k as f64 / 1000.0).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                let va = form.eval(0.0, -0.7, 0.5, *a, true).value;
                let vb = form.eval(0.0, -0.7, 0.5, *b, true).value;
                va.partial_cmp(&vb).unwrap()
            })
            .unwrap();
        assert_eq!(best, 0.999);
        let dis = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                let va = form.eval(0.0, -0.7, 0.5, *a, false).value;
                let vb = form.eval(0.0, -0.7, 0.5, *b, false).value;
                va.partial_cmp(&vb).unwrap()
            })
            .unwrap();
        assert_eq!(dis, 0.001);
    }

    #[test]
    fn partials_match_central_differences() {
        let h = 1e-6;
        for form in [
            ContinuousForm::Weight,
            ContinuousForm::Threshold,
            ContinuousForm::Sigmoid,
            ContinuousForm::Logit,
            ContinuousForm::HalfGaussian,
            ContinuousForm::Beta,
        ] {
            for &(theta, rho, s, agree) in &[(0.7, 0.2, 0.6, true), (-1.3, -0.4, 0.35, false)] {
                let f = form.eval(theta, rho, 0.8, s, agree);
                let dt = (form.eval(theta + h, rho, 0.8, s, agree).value
                    - form.eval(theta - h, rho, 0.8, s, agree).value)
                    / (2.0 * h);
                let dr = (form.eval(theta, rho + h, 0.8, s, agree).value
                    - form.eval(theta, rho - h, 0.8, s, agree).value)
                    / (2.0 * h);
                assert!((f.d_theta - dt).abs() < 1e-6, "{form:?} dθ {} vs {dt}", f.d_theta);
                assert!((f.d_rho - dr).abs() < 1e-6, "{form:?} dρ {} vs {dr}", f.d_rho);
            }
        }
    }

    #[test]
    fn weight_integral_closed_form() {
        // ∫ e^{θs} ds = (e^θ − 1)/θ over (0,1), up to the clamp
        let theta: f64 = 1.7;
        let (log_i, d_theta, _) = ContinuousForm::Weight.log_integral(theta, 0.0, 0.5, true);
        let exact = ((theta.exp() - 1.0) / theta).ln();
        assert!((log_i - exact).abs() < 1e-5);
        let h = 1e-5;
        let fd = (ContinuousForm::Weight.log_integral(theta + h, 0.0, 0.5, true).0
            - ContinuousForm::Weight.log_integral(theta - h, 0.0, 0.5, true).0)
            / (2.0 * h);
        assert!((d_theta - fd).abs() < 1e-7);
    }

    #[test]
    fn beta_integral_is_near_one() {
        let (log_i, _, _) = ContinuousForm::Beta.log_integral(0.0, 2.0, 0.7, true);
        assert!(log_i.abs() < 1e-6);
    }
}

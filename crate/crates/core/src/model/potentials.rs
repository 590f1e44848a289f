//! Per-LF log potentials of the joint model.
//!
//! Discrete LFs contribute `θ_{jy}` when triggered. Continuous LFs add a Beta
//! log-density on their score whose mean is tied to the LF's score guide
//! q^c: mean q^c on the agreeing class, 1 − q^c otherwise, with concentration
//! π_{jy} = exp(ρ_{jy}).

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::InputError;
use crate::model::lf::LfSpec;
use crate::model::params::ModelParams;
use crate::special::{beta_ln_pdf, digamma};

/// Lower bound applied to the Beta shape parameters.
pub const BETA_SHAPE_FLOOR: f64 = 1e-8;

static FLOOR_WARNED: AtomicBool = AtomicBool::new(false);

/// Beta shape parameters `(α, β)` for LF score guide `q_c`, concentration
/// `pi`, on the agreement (`agree = true`) or disagreement branch.
/// Also returns whether each shape was left unfloored (its derivative in ρ
/// is live).
pub(crate) fn beta_shapes(q_c: f64, pi: f64, agree: bool) -> ((f64, f64), (bool, bool)) {
    let (ma, mb) = if agree { (q_c, 1.0 - q_c) } else { (1.0 - q_c, q_c) };
    let (a, b) = (ma * pi, mb * pi);
    if !(a >= BETA_SHAPE_FLOOR && b >= BETA_SHAPE_FLOOR) && !FLOOR_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("Beta shape parameter below {BETA_SHAPE_FLOOR} (alpha={a}, beta={b}); flooring");
    }
    (
        (a.max(BETA_SHAPE_FLOOR), b.max(BETA_SHAPE_FLOOR)),
        (a >= BETA_SHAPE_FLOOR, b >= BETA_SHAPE_FLOOR),
    )
}

/// log Beta(s; α, β) for the branch selected by `agree`, together with its
/// derivative with respect to ρ (π = exp ρ).
pub(crate) fn beta_potential_with_grad(q_c: f64, rho: f64, s: f64, agree: bool) -> (f64, f64) {
    let ((a, b), (live_a, live_b)) = beta_shapes(q_c, rho.exp(), agree);
    let value = beta_ln_pdf(s, a, b);
    let psi_ab = digamma(a + b);
    let mut d_rho = 0.0;
    // dα/dρ = α and dβ/dρ = β while unfloored
    if live_a {
        d_rho += a * (s.ln() - digamma(a) + psi_ab);
    }
    if live_b {
        d_rho += b * ((-s).ln_1p() - digamma(b) + psi_ab);
    }
    (value, d_rho)
}

pub(crate) fn beta_potential(q_c: f64, rho: f64, s: f64, agree: bool) -> f64 {
    let ((a, b), _) = beta_shapes(q_c, rho.exp(), agree);
    beta_ln_pdf(s, a, b)
}

pub(crate) fn check_class(class: usize, num_classes: usize) -> Result<(), InputError> {
    if class == 0 || class > num_classes {
        Err(InputError::InvalidClass { class, num_classes })
    } else {
        Ok(())
    }
}

fn check_trigger(lf: &LfSpec, tau: u32) -> Result<(), InputError> {
    if tau != 0 && tau as usize != lf.target_class {
        return Err(InputError::InvalidTrigger {
            instance: 0,
            lf: lf.lf_id.clone(),
            value: tau,
            target: lf.target_class,
        });
    }
    Ok(())
}

/// log ψ_θ(τ, y): `θ_{jy}` when LF `j` triggers, otherwise 0. `y` is 1-based.
pub fn discrete_log_potential(
    params: &ModelParams,
    j: usize,
    lf: &LfSpec,
    tau: u32,
    y: usize,
) -> Result<f64, InputError> {
    check_class(y, params.num_classes())?;
    check_trigger(lf, tau)?;
    Ok(if tau != 0 { params.theta[j][y - 1] } else { 0.0 })
}

/// log ψ_π(τ, s, y) for continuous LF `j`; 0 when untriggered.
pub fn continuous_log_potential(
    params: &ModelParams,
    j: usize,
    lf: &LfSpec,
    tau: u32,
    score: f64,
    y: usize,
) -> Result<f64, InputError> {
    check_class(y, params.num_classes())?;
    check_trigger(lf, tau)?;
    if !lf.is_continuous {
        return Err(InputError::InvalidLf {
            lf: lf.lf_id.clone(),
            reason: "continuous potential requested for a discrete LF".into(),
        });
    }
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
    let agree = y == lf.target_class;
    Ok(beta_potential(lf.score_guide(), params.rho[j][y - 1], score, agree))
}

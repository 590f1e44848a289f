#![allow(dead_code)]

use cage::model::lf::LfSpec;
use cage::model::observations::ObservationSet;
use cage::model::params::ModelParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Tanh-sinh rule on (a, b). Nodes never touch the endpoints.
pub fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / 64.0;
    let len = b - a;
    let mut sum = 0.0;
    for k in -256i32..=256 {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        // fractional distances from a and from b
        let from_a = 1.0 / (1.0 + (-2.0 * u).exp());
        let from_b = 1.0 / (1.0 + (2.0 * u).exp());
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() * 2.0 * from_a * from_b;
        let x = if u < 0.0 { a + len * from_a } else { b - len * from_b };
        if x <= a || x >= b || w == 0.0 {
            continue;
        }
        sum += w * f(x);
    }
    len * h * sum
}

/// ∫₀¹ exp(log_f(s)) ds for an integrand that behaves like
/// s^(a−1) near 0 and (1−s)^(b−1) near 1. Each half is mapped by
/// s = u^(1/a) (resp. 1 − s = v^(1/b)), which removes the endpoint
/// singularity, then integrated with tanh-sinh.
pub fn integrate_unit(log_f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let left = tanh_sinh(0.0, 0.5f64.powf(a), |u| {
        let s = u.powf(1.0 / a);
        if s <= 0.0 {
            return 0.0;
        }
        (log_f(s) + s.ln() - u.ln() - a.ln()).exp()
    });
    let right = tanh_sinh(0.0, 0.5f64.powf(b), |v| {
        let r = v.powf(1.0 / b);
        if r <= 0.0 || 1.0 - r >= 1.0 {
            return 0.0;
        }
        (log_f(1.0 - r) + r.ln() - v.ln() - b.ln()).exp()
    });
    left + right
}

/// Beta shapes the model uses for an LF with score guide `q_c` and scale
/// `pi`: (q π, (1 − q) π) on agreement, swapped otherwise.
pub fn beta_shapes(q_c: f64, pi: f64, agree: bool) -> (f64, f64) {
    let (a, b) = (q_c * pi, (1.0 - q_c) * pi);
    if agree {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn statrs_beta_ln_pdf(s: f64, a: f64, b: f64) -> f64 {
    use statrs::distribution::{Beta, Continuous};
    Beta::new(a, b).unwrap().ln_pdf(s)
}

/// A random small LF set with the given number of classes. Roughly half
/// the LFs are continuous.
pub fn random_lfs(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<LfSpec> {
    (0..n)
        .map(|j| {
            let class = rng.random_range(1..=k);
            let q_t = rng.random_range(0.55..0.95);
            if rng.random_bool(0.5) {
                LfSpec::continuous(format!("c{j}"), class).with_guides(q_t, Some(rng.random_range(0.2..0.8)))
            } else {
                LfSpec::discrete(format!("d{j}"), class).with_guides(q_t, None)
            }
        })
        .collect()
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ModelParams {
    ModelParams {
        theta: (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
        rho: (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(1.0..3.0)).collect())
            .collect(),
    }
}

/// Random rows where each LF triggers with probability `p_fire`.
pub fn random_rows(rng: &mut ChaCha8Rng, lfs: &[LfSpec], m: usize, p_fire: f64) -> (Vec<Vec<u32>>, Vec<Vec<f64>>) {
    let mut taus = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    for _ in 0..m {
        let tau: Vec<u32> = lfs
            .iter()
            .map(|lf| {
                if rng.random_bool(p_fire) {
                    lf.target_class as u32
                } else {
                    0
                }
            })
            .collect();
        let score: Vec<f64> = lfs.iter().map(|_| rng.random_range(0.05..0.95)).collect();
        taus.push(tau);
        scores.push(score);
    }
    (taus, scores)
}

pub fn random_observations(rng: &mut ChaCha8Rng, lfs: &[LfSpec], k: usize, m: usize) -> ObservationSet {
    let (taus, scores) = random_rows(rng, lfs, m, 0.6);
    ObservationSet::new(k, lfs, taus, scores, None).unwrap()
}

/// Central finite difference of `f` along every coordinate of `x`.
pub fn finite_difference(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// |a − b| / max(|a|, |b|, 1).
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| relative_error(x, y)).fold(0.0, f64::max)
}

/// Every trigger pattern of `lfs` (2^n rows).
pub fn trigger_configs(lfs: &[LfSpec]) -> Vec<Vec<u32>> {
    let n = lfs.len();
    (0..1u32 << n)
        .map(|mask| {
            lfs.iter()
                .enumerate()
                .map(|(j, lf)| if mask >> j & 1 == 1 { lf.target_class as u32 } else { 0 })
                .collect()
        })
        .collect()
}

/// log Z by enumerating y and every trigger pattern, integrating each
/// triggered continuous LF's density (statrs) by quadrature.
pub fn enumerated_log_normalizer(params: &ModelParams, lfs: &[LfSpec]) -> f64 {
    let k = params.num_classes();
    let mut total = 0.0;
    for c in 0..k {
        for tau in trigger_configs(lfs) {
            let mut weight = 1.0;
            for (j, lf) in lfs.iter().enumerate() {
                if tau[j] == 0 {
                    continue;
                }
                weight *= params.theta[j][c].exp();
                if lf.is_continuous {
                    let (a, b) = beta_shapes(lf.score_guide(), params.pi(j, c), c + 1 == lf.target_class);
                    weight *= integrate_unit(|s| statrs_beta_ln_pdf(s, a, b), a, b);
                }
            }
            total += weight;
        }
    }
    total.ln()
}

/// P(y | τ, s) from statrs densities, normalized by hand.
pub fn oracle_posterior(params: &ModelParams, lfs: &[LfSpec], tau: &[u32], score: &[f64]) -> Vec<f64> {
    let k = params.num_classes();
    let weights: Vec<f64> = (0..k)
        .map(|c| {
            let mut log_w = 0.0;
            for (j, lf) in lfs.iter().enumerate() {
                if tau[j] == 0 {
                    continue;
                }
                log_w += params.theta[j][c];
                if lf.is_continuous {
                    let (a, b) = beta_shapes(lf.score_guide(), params.pi(j, c), c + 1 == lf.target_class);
                    log_w += statrs_beta_ln_pdf(score[j], a, b);
                }
            }
            log_w.exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

#[test]
fn quadrature_integrates_beta_densities() {
    for &(a, b) in &[(0.5, 0.5), (0.3, 4.0), (2.0, 3.0), (20.0, 0.7), (1.0, 1.0)] {
        let mass = integrate_unit(|s| statrs_beta_ln_pdf(s, a, b), a, b);
        assert!((mass - 1.0).abs() < 1e-7, "a {a} b {b}: {mass}");
    }
}

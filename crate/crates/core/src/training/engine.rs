//! Objective evaluation shared by every trainable variant.
//!
//! A variant describes its parameters as a flat vector and exposes per-instance
//! class scores, the log normalizer and the two parameter views the guide
//! regularizers need. The engine assembles
//! `LL(batch) + w · R` and its gradient from those pieces.

use serde::{Deserialize, Serialize};

use crate::model::lf::LfSpec;
use crate::model::observations::ObservationSet;
use crate::parallel::{map_chunks, Parallelism};
use crate::special::{sigmoid, softmax_into, softplus};
use crate::training::regularizers::{kl_guide_from_logits, sign_penalty_from_weights};

/// How the user's quality guides enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuideMode {
    KlGuide,
    DataGuide,
    SignPenalty,
    None,
}

impl GuideMode {
    pub const ALL: [GuideMode; 4] = [
        GuideMode::None,
        GuideMode::SignPenalty,
        GuideMode::DataGuide,
        GuideMode::KlGuide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GuideMode::KlGuide => "kl_guide",
            GuideMode::DataGuide => "data_guide",
            GuideMode::SignPenalty => "sign_penalty",
            GuideMode::None => "none",
        }
    }
}

impl std::str::FromStr for GuideMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|g| g.name() == wanted)
            .ok_or_else(|| format!("unknown guide mode {s:?}"))
    }
}

/// Model-specific pieces of the objective. `p` is the flat parameter vector
/// and every `backprop_*` method adds into `grad`, which has the same length.
pub trait ScoreModel: Sync {
    fn lfs(&self) -> &[LfSpec];
    fn num_classes(&self) -> usize;
    fn num_params(&self) -> usize;

    /// Unnormalized log P(y, τ, s) for every class, without the global
    /// normalizer.
    fn instance_scores(&self, p: &[f64], tau: &[u32], score: &[f64], out: &mut [f64]);

    /// Adds Σ_y `d_scores[y]` · ∂score(y)/∂p.
    fn backprop_instance(&self, p: &[f64], tau: &[u32], score: &[f64], d_scores: &[f64], grad: &mut [f64]);

    /// log Z; when `grad` is given adds `scale` · ∂ log Z/∂p.
    fn log_normalizer(&self, p: &[f64], grad: Option<(&mut [f64], f64)>) -> f64;

    /// Logits t_j(y) with P(y | τ_j = k_j) = softmax_y t_j(y).
    fn agreement_logits(&self, p: &[f64]) -> Vec<Vec<f64>>;
    fn backprop_agreement(&self, p: &[f64], d_logits: &[Vec<f64>], grad: &mut [f64]);

    /// Per-LF, per-class discrete weights (θ), used by the sign penalty.
    fn discrete_weights(&self, p: &[f64]) -> Vec<Vec<f64>>;
    fn backprop_discrete(&self, p: &[f64], d_weights: &[Vec<f64>], grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `log_likelihood + reg_weight · regularizer`
    pub objective: f64,
    pub log_likelihood: f64,
    pub regularizer: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ObjectiveSpec {
    pub guide: GuideMode,
    pub reg_weight: f64,
    pub parallelism: Parallelism,
}

struct ChunkResult {
    log_likelihood: f64,
    posteriors: Vec<f64>,
    grad: Vec<f64>,
}

/// Evaluates the objective on `batch` (instance indices into `obs`) and,
/// when `grad` is given, overwrites it with the gradient.
pub fn evaluate(
    model: &dyn ScoreModel,
    p: &[f64],
    obs: &ObservationSet,
    batch: &[usize],
    spec: ObjectiveSpec,
    mut grad: Option<&mut [f64]>,
) -> Evaluation {
    let k = model.num_classes();
    let num_params = model.num_params();
    let want_grad = grad.is_some();
    let keep_posteriors = spec.guide == GuideMode::DataGuide;
    // the data guide needs all posteriors before any instance can backprop
    let backprop_in_first_pass = want_grad && !keep_posteriors;

    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let m = batch.len() as f64;
    let log_z = model.log_normalizer(p, grad.as_deref_mut().map(|g| (g, -m)));

    let chunks = map_chunks(batch, spec.parallelism, |chunk| {
        let mut out = ChunkResult {
            log_likelihood: 0.0,
            posteriors: Vec::with_capacity(if keep_posteriors { chunk.len() * k } else { 0 }),
            grad: if backprop_in_first_pass {
                vec![0.0; num_params]
            } else {
                Vec::new()
            },
        };
        let mut scores = vec![0.0; k];
        let mut post = vec![0.0; k];
        for &i in chunk {
            let (tau, score) = (obs.tau_row(i), obs.score_row(i));
            model.instance_scores(p, tau, score, &mut scores);
            out.log_likelihood += softmax_into(&scores, &mut post);
            if backprop_in_first_pass {
                model.backprop_instance(p, tau, score, &post, &mut out.grad);
            }
            if keep_posteriors {
                out.posteriors.extend_from_slice(&post);
            }
        }
        out
    });

    let mut sum_lse = 0.0;
    let mut posteriors = Vec::new();
    for chunk in &chunks {
        sum_lse += chunk.log_likelihood;
        if backprop_in_first_pass {
            add_into(grad.as_deref_mut().expect("gradient requested"), &chunk.grad);
        }
        if keep_posteriors {
            posteriors.extend_from_slice(&chunk.posteriors);
        }
    }
    drop(chunks);
    let log_likelihood = sum_lse - m * log_z;

    let regularizer = match spec.guide {
        GuideMode::None => 0.0,
        GuideMode::KlGuide => {
            let logits = model.agreement_logits(p);
            let (value, mut d) = kl_guide_from_logits(&logits, model.lfs());
            if let Some(g) = grad.as_deref_mut() {
                scale_rows(&mut d, spec.reg_weight);
                model.backprop_agreement(p, &d, g);
            }
            value
        }
        GuideMode::SignPenalty => {
            let weights = model.discrete_weights(p);
            let (value, mut d) = sign_penalty_from_weights(&weights, model.lfs());
            if let Some(g) = grad.as_deref_mut() {
                scale_rows(&mut d, spec.reg_weight);
                model.backprop_discrete(p, &d, g);
            }
            value
        }
        GuideMode::DataGuide => {
            let (value, slopes) = data_guide_terms(model.lfs(), obs, batch, &posteriors, k);
            if let Some(g) = grad.as_mut() {
                let positions: Vec<usize> = (0..batch.len()).collect();
                let parts = map_chunks(&positions, spec.parallelism, |chunk| {
                    let mut local = vec![0.0; num_params];
                    let mut d = vec![0.0; k];
                    for &pos in chunk {
                        let i = batch[pos];
                        let post = &posteriors[pos * k..(pos + 1) * k];
                        let tau = obs.tau_row(i);
                        d.copy_from_slice(post);
                        for (j, lf) in model.lfs().iter().enumerate() {
                            if tau[j] == 0 {
                                continue;
                            }
                            // ∂post(k_j)/∂score(y) = post(k_j)(δ − post(y))
                            let kj = lf.target_index();
                            let coef = spec.reg_weight * slopes[j] * post[kj];
                            for (c, dc) in d.iter_mut().enumerate() {
                                let delta = if c == kj { 1.0 } else { 0.0 };
                                *dc += coef * (delta - post[c]);
                            }
                        }
                        model.backprop_instance(p, tau, obs.score_row(i), &d, &mut local);
                    }
                    local
                });
                for part in &parts {
                    add_into(g, part);
                }
            }
            value
        }
    };

    Evaluation {
        objective: log_likelihood + spec.reg_weight * regularizer,
        log_likelihood,
        regularizer,
    }
}

/// Value of −Σ_j softplus(u_j), u_j = Σ_{i triggered} (q_j^t − P(y = k_j | i)),
/// and the slopes ∂R/∂P(y = k_j | i) = σ(u_j).
pub(crate) fn data_guide_terms(
    lfs: &[LfSpec],
    obs: &ObservationSet,
    batch: &[usize],
    posteriors: &[f64],
    k: usize,
) -> (f64, Vec<f64>) {
    let mut gaps = vec![0.0; lfs.len()];
    for (pos, &i) in batch.iter().enumerate() {
        let tau = obs.tau_row(i);
        for (j, lf) in lfs.iter().enumerate() {
            if tau[j] != 0 {
                gaps[j] += lf.quality_guide_t - posteriors[pos * k + lf.target_index()];
            }
        }
    }
    let value = -gaps.iter().map(|&u| softplus(u)).sum::<f64>();
    let slopes = gaps.iter().map(|&u| sigmoid(u)).collect();
    (value, slopes)
}

fn add_into(acc: &mut [f64], part: &[f64]) {
    for (a, b) in acc.iter_mut().zip(part) {
        *a += b;
    }
}

fn scale_rows(rows: &mut [Vec<f64>], w: f64) {
    for v in rows.iter_mut().flatten() {
        *v *= w;
    }
}

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::metrics::evaluate;
use crate::error::InputError;
use crate::model::lf::{validate_lfs, LfSpec};
use crate::model::observations::ObservationSet;
use crate::training::config::{BatchSize, InitScheme, TrainConfig, RANDOM_INIT_STD};
use crate::training::engine::{self, GuideMode, ObjectiveSpec};
use crate::training::objective::describe_parameter;
use crate::training::optimizer::Optimizer;
use crate::training::report::TrainReport;
use crate::variants::{predict_with, score_model, TrainedModel, VariantId};

/// Fewest triggers per LF per batch before the data guide warns.
pub const DATA_GUIDE_MIN_TRIGGERS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("non-finite gradient{} at {parameter}", .epoch.map(|e| format!(" in epoch {e}")).unwrap_or_default())]
    NonFiniteGradient { epoch: Option<usize>, parameter: String },
    #[error("training diverged in epoch {epoch}: {detail}")]
    Diverged {
        epoch: usize,
        detail: String,
        last_finite: Box<TrainedModel>,
        report: Box<TrainReport>,
    },
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: TrainedModel,
    pub report: TrainReport,
}

/// Initial flat parameters for `variant`. Only `RandomGaussian` draws from
/// `rng`.
pub fn initial_params(
    variant: VariantId,
    lfs: &[LfSpec],
    num_classes: usize,
    scheme: InitScheme,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let Some(model) = score_model(variant, lfs, num_classes) else {
        return Vec::new();
    };
    let mut p = vec![0.0; model.num_params()];
    let normal = Normal::new(0.0, RANDOM_INIT_STD).expect("valid std");
    if variant == VariantId::Snorkel {
        for v in p.iter_mut() {
            *v = match scheme {
                InitScheme::Agreeing | InitScheme::AllOnes => 1.0,
                InitScheme::Disagreeing => -1.0,
                InitScheme::RandomGaussian => normal.sample(rng),
            };
        }
        return p;
    }
    // θ occupies the leading n×K block in the other layouts
    for (j, lf) in lfs.iter().enumerate() {
        for c in 0..num_classes {
            let agrees = c == lf.target_index();
            p[j * num_classes + c] = match scheme {
                InitScheme::Agreeing => {
                    if agrees {
                        1.0
                    } else {
                        -1.0
                    }
                }
                InitScheme::Disagreeing => {
                    if agrees {
                        -1.0
                    } else {
                        1.0
                    }
                }
                InitScheme::AllOnes => 1.0,
                InitScheme::RandomGaussian => normal.sample(rng),
            };
        }
    }
    p
}

fn describe(variant: VariantId, pos: usize, lfs: &[LfSpec], k: usize) -> String {
    match variant {
        VariantId::Snorkel => format!("theta[{}]", lfs[pos].lf_id),
        VariantId::Directed if pos >= 2 * lfs.len() * k => {
            format!("class prior logit {}", pos - 2 * lfs.len() * k + 1)
        }
        _ => describe_parameter(pos, lfs, k),
    }
}

fn check_consistent(obs: &ObservationSet, lfs: &[LfSpec]) -> Result<(), InputError> {
    validate_lfs(lfs, obs.num_classes())?;
    if obs.num_lfs() != lfs.len() {
        return Err(InputError::LengthMismatch {
            what: "observation columns vs LFs",
            left: obs.num_lfs(),
            right: lfs.len(),
        });
    }
    if obs.num_instances() == 0 {
        return Err(InputError::EmptyDataset);
    }
    Ok(())
}

/// Trains `config.variant` from the configured initialization.
pub fn fit(obs: &ObservationSet, lfs: &[LfSpec], config: &TrainConfig) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    check_consistent(obs, lfs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = initial_params(config.variant, lfs, obs.num_classes(), config.init, &mut rng);
    run(obs, lfs, config, init, rng)
}

/// Trains from explicit flat parameters instead of an initialization scheme.
pub fn fit_from(
    obs: &ObservationSet,
    lfs: &[LfSpec],
    config: &TrainConfig,
    init: Vec<f64>,
) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    check_consistent(obs, lfs)?;
    let model = score_model(config.variant, lfs, obs.num_classes()).expect("trainable variant");
    if init.len() != model.num_params() {
        return Err(InputError::LengthMismatch {
            what: "initial parameters vs model parameters",
            left: init.len(),
            right: model.num_params(),
        }
        .into());
    }
    run(obs, lfs, config, init, ChaCha8Rng::seed_from_u64(config.seed))
}

fn run(
    obs: &ObservationSet,
    lfs: &[LfSpec],
    config: &TrainConfig,
    mut params: Vec<f64>,
    mut rng: ChaCha8Rng,
) -> Result<FitOutcome, TrainError> {
    let k = obs.num_classes();
    let m = obs.num_instances();
    let model = score_model(config.variant, lfs, k).expect("trainable variant");
    let spec = ObjectiveSpec {
        guide: config.guide_mode,
        reg_weight: config.reg_weight,
        parallelism: config.parallelism,
    };
    let batch_len = match config.batch_size {
        BatchSize::Full => m,
        BatchSize::Size(b) => b.min(m),
    };
    let gold = obs.complete_gold();
    let mut report = TrainReport {
        config: *config,
        num_instances: m,
        num_lfs: lfs.len(),
        objective: Vec::with_capacity(config.epochs),
        log_likelihood: Vec::with_capacity(config.epochs),
        regularizer: Vec::with_capacity(config.epochs),
        accuracy: gold.as_ref().map(|_| Vec::new()),
        f1: gold.as_ref().map(|_| Vec::new()),
        class_f1: gold.as_ref().map(|_| Vec::new()),
        final_metrics: None,
        final_params: TrainedModel::from_flat(config.variant, lfs, k, &params).params,
        epoch_seconds: Vec::with_capacity(config.epochs),
    };
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, params.len());
    let mut order: Vec<usize> = (0..m).collect();
    let all: Vec<usize> = (0..m).collect();
    let mut grad = vec![0.0; params.len()];
    let mut warned_sparse = false;

    let diverged = |epoch: usize, detail: String, params: &[f64], report: &TrainReport| {
        let last = TrainedModel::from_flat(config.variant, lfs, k, params);
        let mut report = report.clone();
        report.final_params = last.params.clone();
        TrainError::Diverged {
            epoch,
            detail,
            last_finite: Box::new(last),
            report: Box::new(report),
        }
    };

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        if batch_len < m {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(batch_len) {
            if config.guide_mode == GuideMode::DataGuide && !warned_sparse {
                if let Some(j) = sparse_lf(obs, batch, lfs.len()) {
                    log::warn!(
                        "LF {} triggers fewer than {DATA_GUIDE_MIN_TRIGGERS} times in a batch; \
                         the data guide is unreliable on small batches",
                        lfs[j].lf_id
                    );
                    warned_sparse = true;
                }
            }
            let eval = engine::evaluate(model.as_ref(), &params, obs, batch, spec, Some(&mut grad));
            if !eval.objective.is_finite() {
                return Err(diverged(
                    epoch,
                    format!("batch objective is {}", eval.objective),
                    &params,
                    &report,
                ));
            }
            if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
                let detail = format!("non-finite gradient at {}", describe(config.variant, pos, lfs, k));
                return Err(diverged(epoch, detail, &params, &report));
            }
            let before = params.clone();
            optimizer.ascend(&mut params, &grad);
            if let Some(pos) = params.iter().position(|v| !v.is_finite()) {
                let detail = format!("parameter {} became non-finite", describe(config.variant, pos, lfs, k));
                return Err(diverged(epoch, detail, &before, &report));
            }
        }

        let eval = engine::evaluate(model.as_ref(), &params, obs, &all, spec, None);
        if !eval.objective.is_finite() {
            return Err(diverged(
                epoch,
                format!("objective is {}", eval.objective),
                &params,
                &report,
            ));
        }
        report.objective.push(eval.objective);
        report.log_likelihood.push(eval.log_likelihood);
        report.regularizer.push(eval.regularizer);
        if let Some(gold) = &gold {
            let posteriors = predict_with(config.variant, lfs, k, &params, obs, config.parallelism);
            let mut metrics = evaluate(&posteriors, gold)?;
            metrics.coverage = Some(obs.coverage());
            report.accuracy.as_mut().expect("gold present").push(metrics.accuracy);
            report.f1.as_mut().expect("gold present").push(metrics.f1());
            report
                .class_f1
                .as_mut()
                .expect("gold present")
                .push(metrics.per_class.iter().map(|c| c.f1).collect());
            report.final_metrics = Some(metrics);
        }
        report.epoch_seconds.push(started.elapsed().as_secs_f64());
        log::debug!(
            "epoch {epoch}: objective {:.6} (LL {:.6}, R {:.6})",
            eval.objective,
            eval.log_likelihood,
            eval.regularizer
        );
    }

    let model = TrainedModel::from_flat(config.variant, lfs, k, &params);
    report.final_params = model.params.clone();
    Ok(FitOutcome { model, report })
}

fn sparse_lf(obs: &ObservationSet, batch: &[usize], n: usize) -> Option<usize> {
    let mut counts = vec![0usize; n];
    for &i in batch {
        for (j, &t) in obs.tau_row(i).iter().enumerate() {
            if t != 0 {
                counts[j] += 1;
            }
        }
    }
    counts.iter().position(|&c| c < DATA_GUIDE_MIN_TRIGGERS)
}

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde_json::json;

use super::manifest::{sidecar_path, timestamp, RunManifest};
use super::{
    io_failure, EvalArgs, Failure, PredictArgs, SynthArgs, SynthKind, TrainArgs, TrainingFlags, EXIT_DIVERGED,
};
use crate::data::dataset::{load_dataset, DatasetFile};
use crate::data::generators::{gen_near_random, gen_oracle, gen_twoset};
use crate::data::io::{to_json_bytes, write_atomic};
use crate::data::metrics::evaluate_predictions;
use crate::data::predictions::{predictions_csv, read_predictions};
use crate::parallel::Parallelism;
use crate::training::config::{InitScheme, TrainConfig};
use crate::training::engine::GuideMode;
use crate::training::fit::{fit, TrainError};
use crate::variants::{TrainedModel, VariantId};

pub(super) fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

pub(super) fn train_config(
    variant: VariantId,
    guide_mode: GuideMode,
    init: Option<InitScheme>,
    flags: &TrainingFlags,
) -> TrainConfig {
    TrainConfig {
        variant,
        guide_mode,
        init: init.unwrap_or_else(|| InitScheme::default_for(guide_mode)),
        optimizer: flags.optimizer.into(),
        learning_rate: flags.lr,
        epochs: flags.epochs,
        batch_size: flags.batch_size,
        reg_weight: flags.reg_weight,
        seed: flags.seed,
        parallelism: parallelism(flags.sequential),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    write_atomic(path, bytes).map_err(io_failure(path))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(io_failure(path))
}

pub(super) fn train(args: TrainArgs) -> Result<(), Failure> {
    let started = timestamp();
    let config = train_config(args.variant, args.guide_mode, args.init, &args.training);
    config.validate()?;
    let (obs, lfs) = load_dataset(&args.data)?;
    create_dir(&args.out)?;

    let (model, report, diverged) = match fit(&obs, &lfs, &config) {
        Ok(outcome) => (outcome.model, outcome.report, None),
        Err(TrainError::Diverged {
            epoch,
            detail,
            last_finite,
            report,
        }) => (
            *last_finite,
            *report,
            Some(format!("training diverged in epoch {epoch}: {detail}")),
        ),
        Err(TrainError::Input(e)) => return Err(e.into()),
        Err(e @ TrainError::NonFiniteGradient { .. }) => {
            return Err(Failure {
                code: EXIT_DIVERGED,
                message: e.to_string(),
            })
        }
    };

    let params_path = args.out.join("params.json");
    let report_path = args.out.join("report.json");
    write_file(&params_path, &to_json_bytes(&model))?;
    write_file(&report_path, &to_json_bytes(&report))?;

    let mut manifest = RunManifest::new("train", json!(config), Some(config.seed), started);
    manifest.input(&args.data).map_err(io_failure(&args.data))?;
    manifest.output(&params_path).map_err(io_failure(&params_path))?;
    manifest.output(&report_path).map_err(io_failure(&report_path))?;
    manifest.epoch_seconds = Some(report.epoch_seconds.clone());
    let manifest_path = args.out.join("manifest.json");
    manifest.write(&manifest_path).map_err(io_failure(&manifest_path))?;

    if let Some(message) = diverged {
        return Err(Failure {
            code: EXIT_DIVERGED,
            message: format!("{message}; last finite parameters written to {}", params_path.display()),
        });
    }
    if let Some(metrics) = &report.final_metrics {
        eprintln!(
            "trained {} ({}): accuracy {:.4}, F1 {:.4}",
            config.variant,
            config.guide_mode.name(),
            metrics.accuracy,
            metrics.f1()
        );
    }
    Ok(())
}

pub(super) fn predict(args: PredictArgs) -> Result<(), Failure> {
    let started = timestamp();
    let (obs, lfs) = load_dataset(&args.data)?;
    let model = match &args.params {
        Some(path) => {
            let bytes = fs::read(path).map_err(io_failure(path))?;
            let model: TrainedModel =
                serde_json::from_slice(&bytes).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
            model
                .check_compatible(&lfs, obs.num_classes())
                .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
            model
        }
        None => TrainedModel::majority(&lfs, obs.num_classes()),
    };
    let posteriors = model.predict(&obs, parallelism(args.sequential));
    write_file(&args.out, &predictions_csv(&posteriors))?;

    let config = json!({ "variant": model.variant, "sequential": args.sequential });
    let mut manifest = RunManifest::new("predict", config, None, started);
    manifest.input(&args.data).map_err(io_failure(&args.data))?;
    if let Some(path) = &args.params {
        manifest.input(path).map_err(io_failure(path))?;
    }
    manifest.output(&args.out).map_err(io_failure(&args.out))?;
    let manifest_path = sidecar_path(&args.out);
    manifest.write(&manifest_path).map_err(io_failure(&manifest_path))
}

pub(super) fn eval(args: EvalArgs) -> Result<(), Failure> {
    let (obs, _) = load_dataset(&args.data)?;
    let gold = obs.complete_gold().ok_or_else(|| {
        Failure::invalid(format!(
            "{}: every instance needs a gold label for evaluation",
            args.data.display()
        ))
    })?;
    let rows = read_predictions(&args.predictions)?;
    if rows.len() != gold.len() {
        return Err(Failure::invalid(format!(
            "{} has {} rows but {} has {} instances",
            args.predictions.display(),
            rows.len(),
            args.data.display(),
            gold.len()
        )));
    }
    if let Some(row) = rows.iter().find(|r| r.probs.len() != obs.num_classes()) {
        return Err(Failure::invalid(format!(
            "prediction for instance {} has {} class columns, dataset has {} classes",
            row.instance_id,
            row.probs.len(),
            obs.num_classes()
        )));
    }
    let mut ordered = vec![None; gold.len()];
    for row in &rows {
        match ordered.get_mut(row.instance_id) {
            Some(slot @ None) => *slot = Some(row.prediction),
            _ => {
                return Err(Failure::invalid(format!(
                    "instance_id {} is out of range or repeated",
                    row.instance_id
                )))
            }
        }
    }
    let predictions: Vec<usize> = ordered.into_iter().map(|p| p.expect("every slot filled")).collect();
    let mut report = evaluate_predictions(&predictions, &gold, obs.num_classes())?;
    report.coverage = Some(obs.coverage());
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(())
}

pub(super) fn synth(args: SynthArgs) -> Result<(), Failure> {
    let started = timestamp();
    let (file, config): (DatasetFile, _) = match args.kind {
        SynthKind::Oracle => {
            let balance = args.balance.clone().unwrap_or_else(|| vec![1.0; args.classes]);
            (
                gen_oracle(args.m, args.n, args.classes, &balance, args.seed)?,
                json!({ "kind": "oracle", "m": args.m, "n": args.n, "classes": args.classes, "balance": balance }),
            )
        }
        SynthKind::Twoset => (
            gen_twoset(args.m, args.r, args.n, args.skew, args.seed)?,
            json!({ "kind": "twoset", "m": args.m, "r": args.r, "n": args.n, "skew": args.skew }),
        ),
        SynthKind::NearRandom => (
            gen_near_random(args.m, args.n, args.epsilon, args.seed)?,
            json!({ "kind": "near_random", "m": args.m, "n": args.n, "epsilon": args.epsilon }),
        ),
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_file(&args.out, &file.to_bytes())?;
    let mut manifest = RunManifest::new("synth", config, Some(args.seed), started);
    manifest.output(&args.out).map_err(io_failure(&args.out))?;
    let manifest_path = sidecar_path(&args.out);
    manifest.write(&manifest_path).map_err(io_failure(&manifest_path))
}

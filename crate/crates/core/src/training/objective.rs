//! CAGE objective entry points on explicit parameter structs.

use crate::error::InputError;
use crate::model::lf::{validate_lfs, LfSpec};
use crate::model::observations::ObservationSet;
use crate::model::params::ModelParams;
use crate::parallel::Parallelism;
use crate::training::engine::{evaluate, GuideMode, ObjectiveSpec, ScoreModel};
use crate::training::fit::TrainError;
use crate::variants::undirected::UndirectedModel;

fn check_inputs(params: &ModelParams, lfs: &[LfSpec], obs: &ObservationSet) -> Result<(), InputError> {
    validate_lfs(lfs, obs.num_classes())?;
    if obs.num_instances() == 0 {
        return Err(InputError::EmptyDataset);
    }
    if obs.num_lfs() != lfs.len() || params.num_lfs() != lfs.len() {
        return Err(InputError::LengthMismatch {
            what: "parameter rows vs LFs",
            left: params.num_lfs(),
            right: lfs.len(),
        });
    }
    if params.num_classes() != obs.num_classes() {
        return Err(InputError::LengthMismatch {
            what: "parameter columns vs classes",
            left: params.num_classes(),
            right: obs.num_classes(),
        });
    }
    Ok(())
}

/// Σ_i log Σ_y exp(score_i(y)) − m · log Z over every instance of `obs`.
pub fn marginal_log_likelihood(params: &ModelParams, lfs: &[LfSpec], obs: &ObservationSet) -> Result<f64, InputError> {
    check_inputs(params, lfs, obs)?;
    let model = UndirectedModel::cage(lfs, obs.num_classes());
    let batch: Vec<usize> = (0..obs.num_instances()).collect();
    let spec = ObjectiveSpec {
        guide: GuideMode::None,
        reg_weight: 0.0,
        parallelism: Parallelism::Parallel,
    };
    Ok(evaluate(&model, &params.to_flat(), obs, &batch, spec, None).log_likelihood)
}

/// Objective `LL + R` on `batch` (regularizer weight 1) and its gradient,
/// shaped like the parameters.
pub fn objective_and_gradient(
    params: &ModelParams,
    lfs: &[LfSpec],
    batch: &ObservationSet,
    guide: GuideMode,
) -> Result<(f64, ModelParams), TrainError> {
    check_inputs(params, lfs, batch)?;
    let k = batch.num_classes();
    let model = UndirectedModel::cage(lfs, k);
    let indices: Vec<usize> = (0..batch.num_instances()).collect();
    let spec = ObjectiveSpec {
        guide,
        reg_weight: 1.0,
        parallelism: Parallelism::Parallel,
    };
    let mut grad = vec![0.0; model.num_params()];
    let eval = evaluate(&model, &params.to_flat(), batch, &indices, spec, Some(&mut grad));
    if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient {
            epoch: None,
            parameter: describe_parameter(pos, lfs, k),
        });
    }
    Ok((eval.objective, ModelParams::from_flat(&grad, lfs.len(), k)))
}

/// Human-readable name of position `pos` in the θ-then-ρ layout.
pub(crate) fn describe_parameter(pos: usize, lfs: &[LfSpec], k: usize) -> String {
    let n = lfs.len();
    let (name, rest) = if pos < n * k {
        ("theta", pos)
    } else {
        ("rho", pos - n * k)
    };
    if rest < n * k {
        let (j, c) = (rest / k, rest % k);
        format!("{name}[{}][class {}]", lfs[j].lf_id, c + 1)
    } else {
        format!("parameter {pos}")
    }
}

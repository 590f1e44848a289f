//! Baselines and ablations sharing the CAGE interface.

pub mod alt;
pub mod directed;
pub mod majority;
pub mod snorkel;
pub mod undirected;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::model::cage::check_row;
use crate::model::lf::LfSpec;
use crate::model::observations::ObservationSet;
use crate::model::params::ModelParams;
use crate::model::posterior::LabelPosterior;
use crate::parallel::{map_chunks, Parallelism};
use crate::training::engine::ScoreModel;

use self::alt::ContinuousForm;
use self::directed::DirectedModel;
use self::majority::majority_vote;
use self::snorkel::{expand_theta, SnorkelModel};
use self::undirected::UndirectedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantId {
    Cage,
    Snorkel,
    Directed,
    AltWeight,
    AltThreshold,
    AltSigmoid,
    AltLogit,
    AltHalfGaussian,
    Majority,
}

impl VariantId {
    pub const ALL: [VariantId; 9] = [
        VariantId::Cage,
        VariantId::Snorkel,
        VariantId::Directed,
        VariantId::AltWeight,
        VariantId::AltThreshold,
        VariantId::AltSigmoid,
        VariantId::AltLogit,
        VariantId::AltHalfGaussian,
        VariantId::Majority,
    ];

    pub const ALT_FORMS: [VariantId; 5] = [
        VariantId::AltWeight,
        VariantId::AltThreshold,
        VariantId::AltSigmoid,
        VariantId::AltLogit,
        VariantId::AltHalfGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::Cage => "cage",
            VariantId::Snorkel => "snorkel",
            VariantId::Directed => "directed",
            VariantId::AltWeight => "alt_weight",
            VariantId::AltThreshold => "alt_threshold",
            VariantId::AltSigmoid => "alt_sigmoid",
            VariantId::AltLogit => "alt_logit",
            VariantId::AltHalfGaussian => "alt_half_gaussian",
            VariantId::Majority => "majority",
        }
    }

    /// Continuous potential used by the undirected variants.
    pub fn continuous_form(self) -> Option<ContinuousForm> {
        match self {
            VariantId::Cage => Some(ContinuousForm::Beta),
            VariantId::AltWeight => Some(ContinuousForm::Weight),
            VariantId::AltThreshold => Some(ContinuousForm::Threshold),
            VariantId::AltSigmoid => Some(ContinuousForm::Sigmoid),
            VariantId::AltLogit => Some(ContinuousForm::Logit),
            VariantId::AltHalfGaussian => Some(ContinuousForm::HalfGaussian),
            _ => None,
        }
    }

    pub fn is_trainable(self) -> bool {
        self != VariantId::Majority
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.replace('-', "_");
        VariantId::ALL
            .into_iter()
            .find(|v| v.name() == wanted)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

/// Objective pieces for a trainable variant; `None` for majority vote.
pub fn score_model<'a>(variant: VariantId, lfs: &'a [LfSpec], num_classes: usize) -> Option<Box<dyn ScoreModel + 'a>> {
    match variant {
        VariantId::Majority => None,
        VariantId::Snorkel => Some(Box::new(SnorkelModel::new(lfs, num_classes))),
        VariantId::Directed => Some(Box::new(DirectedModel::new(lfs, num_classes))),
        v => Some(Box::new(UndirectedModel::new(
            lfs,
            num_classes,
            v.continuous_form().expect("undirected variant has a continuous form"),
        ))),
    }
}

/// A fitted (or parameter-free) label model, as saved to disk.
///
/// Snorkel parameters are stored in expanded form θ_{jy} = ±θ_j, which is
/// also a valid CAGE parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub variant: VariantId,
    pub num_classes: usize,
    pub lfs: Vec<LfSpec>,
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_prior_logits: Option<Vec<f64>>,
}

impl TrainedModel {
    pub fn majority(lfs: &[LfSpec], num_classes: usize) -> Self {
        Self {
            variant: VariantId::Majority,
            num_classes,
            lfs: lfs.to_vec(),
            params: ModelParams::zeros(lfs.len(), num_classes),
            class_prior_logits: None,
        }
    }

    pub fn from_flat(variant: VariantId, lfs: &[LfSpec], num_classes: usize, flat: &[f64]) -> Self {
        let n = lfs.len();
        let (params, class_prior_logits) = match variant {
            VariantId::Majority => (ModelParams::zeros(n, num_classes), None),
            VariantId::Snorkel => (
                ModelParams {
                    theta: expand_theta(flat, lfs, num_classes),
                    rho: vec![vec![0.0; num_classes]; n],
                },
                None,
            ),
            VariantId::Directed => (
                ModelParams::from_flat(flat, n, num_classes),
                Some(flat[2 * n * num_classes..].to_vec()),
            ),
            _ => (ModelParams::from_flat(flat, n, num_classes), None),
        };
        Self {
            variant,
            num_classes,
            lfs: lfs.to_vec(),
            params,
            class_prior_logits,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        match self.variant {
            VariantId::Majority => Vec::new(),
            VariantId::Snorkel => self
                .params
                .theta
                .iter()
                .zip(&self.lfs)
                .map(|(row, lf)| row[lf.target_index()])
                .collect(),
            VariantId::Directed => {
                let mut flat = self.params.to_flat();
                flat.extend(
                    self.class_prior_logits
                        .clone()
                        .unwrap_or_else(|| vec![0.0; self.num_classes]),
                );
                flat
            }
            _ => self.params.to_flat(),
        }
    }

    /// Checks that `lfs` describe the same LF layout the model was fit on.
    pub fn check_compatible(&self, lfs: &[LfSpec], num_classes: usize) -> Result<(), InputError> {
        let mismatch = |msg: String| Err(InputError::Invalid(format!("model/dataset mismatch: {msg}")));
        if num_classes != self.num_classes {
            return mismatch(format!(
                "model has {} classes, dataset has {num_classes}",
                self.num_classes
            ));
        }
        if lfs.len() != self.lfs.len() {
            return mismatch(format!("model has {} LFs, dataset has {}", self.lfs.len(), lfs.len()));
        }
        for (j, (a, b)) in self.lfs.iter().zip(lfs).enumerate() {
            if a.target_class != b.target_class {
                return mismatch(format!(
                    "LF {j} ({}) targets class {} in the model but {} in the dataset",
                    b.lf_id, a.target_class, b.target_class
                ));
            }
            if a.is_continuous != b.is_continuous {
                return mismatch(format!(
                    "LF {j} ({}) continuity flag differs (model {}, dataset {})",
                    b.lf_id, a.is_continuous, b.is_continuous
                ));
            }
        }
        Ok(())
    }

    pub fn posterior(&self, tau: &[u32], score: &[f64]) -> Result<LabelPosterior, InputError> {
        check_row(&self.lfs, tau, score)?;
        Ok(self.posterior_unchecked(&self.to_flat(), tau, score))
    }

    fn posterior_unchecked(&self, flat: &[f64], tau: &[u32], score: &[f64]) -> LabelPosterior {
        match score_model(self.variant, &self.lfs, self.num_classes) {
            None => majority_vote(tau, self.num_classes),
            Some(model) => {
                let mut scores = vec![0.0; self.num_classes];
                model.instance_scores(flat, tau, score, &mut scores);
                LabelPosterior::from_log_scores(&scores)
            }
        }
    }

    /// Posteriors for every instance of `obs`, in order.
    pub fn predict(&self, obs: &ObservationSet, parallelism: Parallelism) -> Vec<LabelPosterior> {
        predict_with(
            self.variant,
            &self.lfs,
            self.num_classes,
            &self.to_flat(),
            obs,
            parallelism,
        )
    }
}

pub(crate) fn predict_with(
    variant: VariantId,
    lfs: &[LfSpec],
    num_classes: usize,
    flat: &[f64],
    obs: &ObservationSet,
    parallelism: Parallelism,
) -> Vec<LabelPosterior> {
    let indices: Vec<usize> = (0..obs.num_instances()).collect();
    let model = score_model(variant, lfs, num_classes);
    map_chunks(&indices, parallelism, |chunk| {
        let mut scores = vec![0.0; num_classes];
        chunk
            .iter()
            .map(|&i| match &model {
                None => majority_vote(obs.tau_row(i), num_classes),
                Some(m) => {
                    m.instance_scores(flat, obs.tau_row(i), obs.score_row(i), &mut scores);
                    LabelPosterior::from_log_scores(&scores)
                }
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

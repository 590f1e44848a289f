use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::parallel::Parallelism;
use crate::training::engine::GuideMode;
use crate::variants::VariantId;

/// Parameter initialization. ρ starts at 0 (π = 1) in every scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// θ_{j,k_j} = 1 and θ_{j,y≠k_j} = −1.
    Agreeing,
    /// The mirror image of `Agreeing`: θ_{j,k_j} = −1, θ_{j,y≠k_j} = 1.
    Disagreeing,
    /// Every θ = 1.
    AllOnes,
    /// θ ~ N(0, 0.1²).
    RandomGaussian,
}

pub const RANDOM_INIT_STD: f64 = 0.1;

impl InitScheme {
    pub fn name(self) -> &'static str {
        match self {
            InitScheme::Agreeing => "agreeing",
            InitScheme::Disagreeing => "disagreeing",
            InitScheme::AllOnes => "all_ones",
            InitScheme::RandomGaussian => "random_gaussian",
        }
    }
}

impl InitScheme {
    /// All ones for KL-guided training, agreeing otherwise.
    pub fn default_for(guide: GuideMode) -> Self {
        if guide == GuideMode::KlGuide {
            InitScheme::AllOnes
        } else {
            InitScheme::Agreeing
        }
    }
}

impl FromStr for InitScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.replace('-', "_");
        [
            InitScheme::Agreeing,
            InitScheme::Disagreeing,
            InitScheme::AllOnes,
            InitScheme::RandomGaussian,
        ]
        .into_iter()
        .find(|i| i.name() == wanted)
        .ok_or_else(|| format!("unknown init scheme {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    /// β1 = 0.9, β2 = 0.999, ε = 1e-8.
    Adam,
}

/// Instances per optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchSize {
    #[default]
    Full,
    Size(usize),
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Full => f.write_str("full"),
            BatchSize::Size(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(BatchSize::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(BatchSize::Size(n)),
            _ => Err(format!("batch size must be a positive integer or \"full\", got {s:?}")),
        }
    }
}

impl Serialize for BatchSize {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            BatchSize::Full => serializer.serialize_str("full"),
            BatchSize::Size(n) => serializer.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Size(usize),
            Word(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Size(n) if n >= 1 => Ok(BatchSize::Size(n)),
            Raw::Size(_) => Err(serde::de::Error::custom("batch size must be positive")),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: VariantId,
    pub guide_mode: GuideMode,
    pub init: InitScheme,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    /// Weight on the guide regularizer.
    pub reg_weight: f64,
    pub seed: u64,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: VariantId::Cage,
            guide_mode: GuideMode::KlGuide,
            init: InitScheme::AllOnes,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: BatchSize::Full,
            reg_weight: 1.0,
            seed: 0,
            parallelism: Parallelism::Parallel,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |msg: String| Err(InputError::Invalid(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if let BatchSize::Size(0) = self.batch_size {
            return bad("batch size must be at least 1".into());
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return bad(format!(
                "regularizer weight must be finite and >= 0, got {}",
                self.reg_weight
            ));
        }
        if !self.variant.is_trainable() {
            return bad(format!("variant {} has no trainable parameters", self.variant));
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use crate::error::InputError;

/// Metadata for one labeling function.
///
/// `target_class` is 1-based. `quality_guide_t` is the user's guess of the
/// fraction of triggers that agree with the true label; `quality_guide_c` is
/// the expected score on agreeing triggers and is present iff the LF is
/// continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfSpec {
    pub lf_id: String,
    pub target_class: usize,
    pub is_continuous: bool,
    pub quality_guide_t: f64,
    #[serde(default)]
    pub quality_guide_c: Option<f64>,
}

pub const DEFAULT_QUALITY_GUIDE_T: f64 = 0.9;
pub const DEFAULT_QUALITY_GUIDE_C: f64 = 0.85;

impl LfSpec {
    pub fn discrete(lf_id: impl Into<String>, target_class: usize) -> Self {
        Self {
            lf_id: lf_id.into(),
            target_class,
            is_continuous: false,
            quality_guide_t: DEFAULT_QUALITY_GUIDE_T,
            quality_guide_c: None,
        }
    }

    pub fn continuous(lf_id: impl Into<String>, target_class: usize) -> Self {
        Self {
            lf_id: lf_id.into(),
            target_class,
            is_continuous: true,
            quality_guide_t: DEFAULT_QUALITY_GUIDE_T,
            quality_guide_c: Some(DEFAULT_QUALITY_GUIDE_C),
        }
    }

    pub fn with_guides(mut self, q_t: f64, q_c: Option<f64>) -> Self {
        self.quality_guide_t = q_t;
        if self.is_continuous {
            self.quality_guide_c = q_c;
        }
        self
    }

    /// 0-based column of the target class.
    pub fn target_index(&self) -> usize {
        self.target_class - 1
    }

    /// q^c for continuous LFs. Panics on discrete LFs; callers check
    /// `is_continuous` first.
    pub fn score_guide(&self) -> f64 {
        self.quality_guide_c
            .expect("continuous LF without quality_guide_c passed validation")
    }

    pub fn validate(&self, num_classes: usize) -> Result<(), InputError> {
        let fail = |reason: String| InputError::InvalidLf {
            lf: self.lf_id.clone(),
            reason,
        };
        if self.target_class == 0 || self.target_class > num_classes {
            return Err(fail(format!(
                "target_class {} is outside 1..={num_classes}",
                self.target_class
            )));
        }
        if !(self.quality_guide_t > 0.0 && self.quality_guide_t < 1.0) {
            return Err(fail(format!(
                "quality_guide_t {} must lie in (0, 1)",
                self.quality_guide_t
            )));
        }
        match (self.is_continuous, self.quality_guide_c) {
            (true, Some(q)) if q > 0.0 && q < 1.0 => Ok(()),
            (true, Some(q)) => Err(fail(format!("quality_guide_c {q} must lie in (0, 1)"))),
            (true, None) => Err(fail("continuous LF needs quality_guide_c".into())),
            (false, Some(_)) => Err(fail("quality_guide_c is only allowed on continuous LFs".into())),
            (false, None) => Ok(()),
        }
    }
}

pub fn validate_lfs(lfs: &[LfSpec], num_classes: usize) -> Result<(), InputError> {
    if num_classes < 2 {
        return Err(InputError::Invalid(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    lfs.iter().try_for_each(|lf| lf.validate(num_classes))
}

use crate::error::InputError;
use crate::model::lf::{validate_lfs, LfSpec};

/// Scores are clamped into `[SCORE_CLAMP, 1 - SCORE_CLAMP]` on ingestion.
pub const SCORE_CLAMP: f64 = 1e-6;

/// Stored in place of scores that carry no information (discrete LF or
/// untriggered entry).
const UNUSED_SCORE: f64 = 0.5;

/// Trigger and score matrices for `m` instances and `n` LFs, stored row-major.
///
/// `tau[i][j]` is 0 (abstain) or the LF's 1-based target class. Scores are
/// only meaningful where the LF is continuous and triggered.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    num_instances: usize,
    num_classes: usize,
    num_lfs: usize,
    tau: Vec<u32>,
    score: Vec<f64>,
    gold: Option<Vec<Option<usize>>>,
}

impl ObservationSet {
    /// Validates rows against `lfs` and clamps scores of triggered
    /// continuous entries.
    pub fn new(
        num_classes: usize,
        lfs: &[LfSpec],
        tau_rows: Vec<Vec<u32>>,
        score_rows: Vec<Vec<f64>>,
        gold: Option<Vec<Option<usize>>>,
    ) -> Result<Self, InputError> {
        validate_lfs(lfs, num_classes)?;
        let n = lfs.len();
        if tau_rows.len() != score_rows.len() {
            return Err(InputError::LengthMismatch {
                what: "tau rows vs score rows",
                left: tau_rows.len(),
                right: score_rows.len(),
            });
        }
        if let Some(g) = &gold {
            if g.len() != tau_rows.len() {
                return Err(InputError::LengthMismatch {
                    what: "gold labels vs instances",
                    left: g.len(),
                    right: tau_rows.len(),
                });
            }
            for &label in g.iter().flatten() {
                if label == 0 || label > num_classes {
                    return Err(InputError::InvalidClass {
                        class: label,
                        num_classes,
                    });
                }
            }
        }
        let m = tau_rows.len();
        let mut tau = Vec::with_capacity(m * n);
        let mut score = Vec::with_capacity(m * n);
        for (i, (trow, srow)) in tau_rows.iter().zip(&score_rows).enumerate() {
            if trow.len() != n {
                return Err(InputError::RowLength {
                    expected: n,
                    got: trow.len(),
                });
            }
            if srow.len() != n {
                return Err(InputError::RowLength {
                    expected: n,
                    got: srow.len(),
                });
            }
            for (j, lf) in lfs.iter().enumerate() {
                let t = trow[j];
                if t != 0 && t as usize != lf.target_class {
                    return Err(InputError::InvalidTrigger {
                        instance: i,
                        lf: lf.lf_id.clone(),
                        value: t,
                        target: lf.target_class,
                    });
                }
                tau.push(t);
                score.push(if t != 0 && lf.is_continuous {
                    ingest_score(srow[j]).ok_or_else(|| InputError::InvalidScore {
                        instance: i,
                        lf: lf.lf_id.clone(),
                        score: srow[j],
                    })?
                } else {
                    UNUSED_SCORE
                });
            }
        }
        Ok(Self {
            num_instances: m,
            num_classes,
            num_lfs: n,
            tau,
            score,
            gold,
        })
    }

    pub fn num_instances(&self) -> usize {
        self.num_instances
    }

    pub fn num_lfs(&self) -> usize {
        self.num_lfs
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn tau_row(&self, i: usize) -> &[u32] {
        &self.tau[i * self.num_lfs..(i + 1) * self.num_lfs]
    }

    pub fn score_row(&self, i: usize) -> &[f64] {
        &self.score[i * self.num_lfs..(i + 1) * self.num_lfs]
    }

    pub fn triggered(&self, i: usize, j: usize) -> bool {
        self.tau[i * self.num_lfs + j] != 0
    }

    /// Evaluation-only view of the gold labels.
    pub fn gold(&self) -> Option<&[Option<usize>]> {
        self.gold.as_deref()
    }

    /// Gold labels when every instance has one.
    pub fn complete_gold(&self) -> Option<Vec<usize>> {
        self.gold.as_ref()?.iter().copied().collect()
    }

    /// Fraction of instances where at least one LF triggers.
    pub fn coverage(&self) -> f64 {
        let m = self.num_instances();
        if m == 0 {
            return 0.0;
        }
        let covered = (0..m).filter(|&i| self.tau_row(i).iter().any(|&t| t != 0)).count();
        covered as f64 / m as f64
    }

    /// Copy restricted to the given instance indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut tau = Vec::with_capacity(indices.len() * self.num_lfs);
        let mut score = Vec::with_capacity(indices.len() * self.num_lfs);
        for &i in indices {
            tau.extend_from_slice(self.tau_row(i));
            score.extend_from_slice(self.score_row(i));
        }
        Self {
            num_instances: indices.len(),
            num_classes: self.num_classes,
            num_lfs: self.num_lfs,
            tau,
            score,
            gold: self.gold.as_ref().map(|g| indices.iter().map(|&i| g[i]).collect()),
        }
    }

    /// Score as it would be written back to a file: 0 where unused.
    pub fn exported_score(&self, lfs: &[LfSpec], i: usize, j: usize) -> f64 {
        if self.triggered(i, j) && lfs[j].is_continuous {
            self.score_row(i)[j]
        } else {
            0.0
        }
    }
}

/// Clamp a raw score into the open unit interval; rejects NaN and values
/// outside `[0, 1]`.
pub fn ingest_score(raw: f64) -> Option<f64> {
    if !raw.is_finite() || !(0.0..=1.0).contains(&raw) {
        return None;
    }
    Some(raw.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP))
}

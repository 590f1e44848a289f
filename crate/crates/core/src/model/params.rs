use serde::{Deserialize, Serialize};

/// θ (discrete, n×K) and ρ (continuous scale, n×K, π = exp ρ).
///
/// Column `c` corresponds to class `c + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub theta: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
}

impl ModelParams {
    pub fn zeros(num_lfs: usize, num_classes: usize) -> Self {
        Self::filled(num_lfs, num_classes, 0.0)
    }

    pub fn filled(num_lfs: usize, num_classes: usize, theta: f64) -> Self {
        Self {
            theta: vec![vec![theta; num_classes]; num_lfs],
            rho: vec![vec![0.0; num_classes]; num_lfs],
        }
    }

    pub fn num_lfs(&self) -> usize {
        self.theta.len()
    }

    pub fn num_classes(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    /// π_{jc} = exp(ρ_{jc}).
    pub fn pi(&self, j: usize, c: usize) -> f64 {
        self.rho[j][c].exp()
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(&self.rho).flatten().all(|v| v.is_finite())
    }

    /// θ then ρ, row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.rho).flatten().copied().collect()
    }

    pub fn from_flat(flat: &[f64], num_lfs: usize, num_classes: usize) -> Self {
        let block = num_lfs * num_classes;
        assert!(flat.len() >= 2 * block, "flat parameter vector too short");
        let rows = |off: usize| {
            (0..num_lfs)
                .map(|j| flat[off + j * num_classes..off + (j + 1) * num_classes].to_vec())
                .collect()
        };
        Self {
            theta: rows(0),
            rho: rows(block),
        }
    }
}

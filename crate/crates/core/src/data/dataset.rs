use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::io::{to_json_bytes, write_atomic};
use crate::error::InputError;
use crate::model::lf::LfSpec;
use crate::model::observations::ObservationSet;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub tau: Vec<u32>,
    /// 0 wherever the entry carries no score.
    pub score: Vec<f64>,
    #[serde(default)]
    pub gold: Option<usize>,
}

/// On-disk dataset: task, LF metadata and per-instance observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub schema_version: u32,
    pub task: TaskSpec,
    pub lfs: Vec<LfSpec>,
    pub instances: Vec<InstanceRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", .path.display())]
    Invalid {
        path: PathBuf,
        #[source]
        source: InputError,
    },
}

impl DatasetFile {
    /// Validates the file and builds observations (scores clamped).
    pub fn to_observations(&self) -> Result<ObservationSet, InputError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(InputError::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = self.lfs.len();
        let k = self.task.num_classes;
        for (i, inst) in self.instances.iter().enumerate() {
            for (what, len) in [("tau", inst.tau.len()), ("score", inst.score.len())] {
                if len != n {
                    return Err(InputError::Invalid(format!(
                        "instance {i}: {what} has {len} entries but there are {n} LFs"
                    )));
                }
            }
            if let Some(g) = inst.gold {
                if g == 0 || g > k {
                    return Err(InputError::Invalid(format!(
                        "instance {i}: gold class {g} is outside 1..={k}"
                    )));
                }
            }
        }
        let gold = if self.instances.iter().any(|inst| inst.gold.is_some()) {
            Some(self.instances.iter().map(|inst| inst.gold).collect())
        } else {
            None
        };
        ObservationSet::new(
            k,
            &self.lfs,
            self.instances.iter().map(|inst| inst.tau.clone()).collect(),
            self.instances.iter().map(|inst| inst.score.clone()).collect(),
            gold,
        )
    }

    /// File form of `obs`, with clamped scores and 0 for unused entries.
    pub fn from_observations(lfs: &[LfSpec], obs: &ObservationSet) -> Self {
        let gold = obs.gold();
        let instances = (0..obs.num_instances())
            .map(|i| InstanceRecord {
                tau: obs.tau_row(i).to_vec(),
                score: (0..obs.num_lfs()).map(|j| obs.exported_score(lfs, i, j)).collect(),
                gold: gold.and_then(|g| g[i]),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            task: TaskSpec {
                num_classes: obs.num_classes(),
            },
            lfs: lfs.to_vec(),
            instances,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        to_json_bytes(self)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        write_atomic(path, &self.to_bytes()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        let bytes = fs::read(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|source| DataError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Reads and validates a dataset file.
pub fn load_dataset(path: &Path) -> Result<(ObservationSet, Vec<LfSpec>), DataError> {
    let file = DatasetFile::read(path)?;
    let obs = file.to_observations().map_err(|source| DataError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((obs, file.lfs))
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> DatasetFile {
        DatasetFile {
            schema_version: 1,
            task: TaskSpec { num_classes: 2 },
            lfs: vec![LfSpec::discrete("lf0", 1)],
            instances: vec![InstanceRecord {
                tau: vec![0],
                score: vec![0.0],
                gold: None,
            }],
        }
    }

    #[test]
    fn minimal_file_loads() {
        let obs = minimal().to_observations().unwrap();
        assert_eq!(obs.num_instances(), 1);
        assert_eq!(obs.num_lfs(), 1);
    }

    #[test]
    fn wrong_trigger_names_location() {
        let mut file = minimal();
        file.instances[0].tau = vec![2];
        let err = file.to_observations().unwrap_err().to_string();
        assert!(err.contains("instance 0") && err.contains("lf0"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"schema_version":1,"task":{"num_classes":2},"lfs":[],"instances":[],"extra":1}"#;
        assert!(serde_json::from_str::<DatasetFile>(text).is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        let mut file = minimal();
        file.schema_version = 2;
        assert!(file.to_observations().is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let mut file = minimal();
        file.lfs.push(LfSpec::continuous("lf1", 2));
        file.instances = vec![
            InstanceRecord {
                tau: vec![1, 2],
                score: vec![0.0, 0.7],
                gold: Some(2),
            },
            InstanceRecord {
                tau: vec![0, 0],
                score: vec![0.0, 0.0],
                gold: Some(1),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        file.save(&path).unwrap();
        let (obs, lfs) = load_dataset(&path).unwrap();
        assert_eq!(DatasetFile::from_observations(&lfs, &obs), file);
    }
}

use thiserror::Error;

/// Rejected inputs: malformed datasets, inconsistent rows, bad arguments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("class {class} is outside 1..={num_classes}")]
    InvalidClass { class: usize, num_classes: usize },
    #[error("instance {instance}, LF {lf}: trigger value {value} must be 0 or the LF's class {target}")]
    InvalidTrigger {
        instance: usize,
        lf: String,
        value: u32,
        target: usize,
    },
    #[error("instance {instance}, LF {lf}: score {score} is not a finite value inside (0, 1)")]
    InvalidScore { instance: usize, lf: String, score: f64 },
    #[error("LF {lf}: {reason}")]
    InvalidLf { lf: String, reason: String },
    #[error("row has {got} entries but there are {expected} LFs")]
    RowLength { expected: usize, got: usize },
    #[error("dataset has no instances")]
    EmptyDataset,
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = InputError> = std::result::Result<T, E>;

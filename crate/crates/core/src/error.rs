use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{op}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("{op}: rank {rank} exceeds the admissible maximum {max}")]
    RankTooLarge {
        op: &'static str,
        rank: usize,
        max: usize,
    },
    #[error("invalid tensor mode {0}, expected 0, 1 or 2")]
    InvalidMode(usize),
    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange { index: Vec<usize>, shape: Vec<usize> },
    #[error("duplicate sparse index {0:?}")]
    DuplicateIndex(Vec<usize>),
    #[error("unknown {kind} id {id}")]
    UnknownEntity { kind: &'static str, id: u32 },
    #[error("{kind} id {id} is already indexed by the model")]
    KnownEntity { kind: &'static str, id: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not enough distinct days: need {needed}, found {found}")]
    InsufficientDays { needed: usize, found: usize },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(op: &'static str, expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        op,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

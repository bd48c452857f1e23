use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("poisson sampling exhausted: placed {placed} centers after {attempts} attempts")]
    SamplingExhausted { placed: usize, attempts: usize },
    #[error("no seed region passed the thresholds")]
    NoSeeds,
    #[error("unknown superpixel label {0}")]
    UnknownLabel(usize),
    #[error("query ({x}, {y}) outside image {width}x{height}")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("all attraction weights are zero")]
    DegenerateWeights,
    #[error("need at least {needed} descriptors, got {got}")]
    TooFewDescriptors { needed: usize, got: usize },
    #[error("telemetry log is not strictly increasing in time at record {0}")]
    UnsortedLog(usize),
    #[error("telemetry log is empty")]
    EmptyLog,
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("no matching file for stem {stem:?} in {side}")]
    MissingPair { stem: String, side: &'static str },
    #[error("no mask pairs to evaluate")]
    EmptyBatch,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

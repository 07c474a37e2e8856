use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("time grids of trajectories do not match")]
    TimeMisaligned,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("baseline collision rate is zero, reduction undefined")]
    UndefinedBaseline,
}

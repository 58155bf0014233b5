use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::Classification;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("derivative undefined past escape: orbit overflowed at step {escaped_at}, requested step {requested}")]
    DerivativePastEscape { escaped_at: usize, requested: usize },

    #[error("parameter {0} is not in the escape locus")]
    NotEscaping(Complex64),

    #[error("branch cut hit at factor {k} of the Böttcher product")]
    BranchCut { k: usize },

    #[error("seed potential too small: {0}")]
    SeedPotentialTooSmall(f64),

    #[error("pullback singular at level {level}")]
    PullbackSingular { level: usize },

    #[error("first point of the trace failed: {0}")]
    FirstPointFailed(String),

    #[error("perturbation target unreachable at this (t,n) = ({t}, {n}): {reason}")]
    PerturbationUnreachable { t: f64, n: usize, reason: String },

    #[error("period mismatch: expected attracting period {expected}, classifier reported {found:?}")]
    PeriodMismatch {
        expected: usize,
        found: Classification,
    },

    #[error("internal ray validation failed at lambda = {lambda}: {found:?}")]
    ValidationFailed {
        lambda: Complex64,
        found: Classification,
    },

    #[error("the bare address `inf` is not comparable in the linear order")]
    NotComparable,

    #[error("addresses must be pairwise distinct")]
    NotDistinct,

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("segments do not meet: gap {gap:.3e} before segment {index}")]
    SegmentsDoNotMeet { index: usize, gap: f64 },

    #[error("self-intersection between arc segments {0} and {1}")]
    SelfIntersection(usize, usize),

    #[error("degenerate query: point {0} lies on the separation line")]
    DegenerateQuery(Complex64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Failures caused by the numerics rather than by malformed input.
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::NotComparable
                | Error::NotDistinct
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

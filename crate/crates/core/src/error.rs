use thiserror::Error;

use crate::solvers::SolveReport;

pub type Result<T, E = PronyError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PronyError {
    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("malformed parameter vector: expected {expected} entries, got {actual}")]
    MalformedParameters { expected: usize, actual: usize },

    #[error("insufficient measurements: need {needed}, have {available}")]
    ShortInput { needed: usize, available: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("rank deficient Hankel matrix: numerical rank below {expected}")]
    RankDeficient { expected: usize },

    #[error("root clustering failed: {reason}")]
    Clustering {
        reason: String,
        /// Sizes of the groups that were formed before giving up.
        partition: Vec<usize>,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("least squares refinement did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        best: Box<SolveReport>,
    },

    #[error("multiplicity structures differ: {0}")]
    Mismatch(String),

    #[error("no finite data: {0}")]
    NoData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PronyError {
    /// True for errors caused by the numbers rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PronyError::Singular(_)
                | PronyError::Degenerate(_)
                | PronyError::RankDeficient { .. }
                | PronyError::Clustering { .. }
                | PronyError::NonConvergence { .. }
        )
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },

    /// A numerical routine failed or produced a result outside its tolerance.
    #[error("numerical failure ({context}): {detail}")]
    Numerical { context: String, detail: String },

    #[error("sizes do not overlap after scaling")]
    NoOverlap,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(
        "fit did not converge after {iterations} iterations \
         (linearized initializer: c = {init_c}, gamma = {init_gamma})"
    )]
    NonConvergence { iterations: usize, init_c: f64, init_gamma: f64 },

    #[error("{failed} of {total} samples failed at grid point {point}")]
    TooManyFailures { point: String, failed: usize, total: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn numerical(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numerical { context: context.into(), detail: detail.into() }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical { .. }
                | Error::NoOverlap
                | Error::DegenerateFit(_)
                | Error::NonConvergence { .. }
                | Error::TooManyFailures { .. }
        )
    }
}

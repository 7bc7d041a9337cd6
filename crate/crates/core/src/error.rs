use thiserror::Error;

/// Errors produced by the estimation and testing pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need more observations than variables (n = {n}, p = {p})")]
    TooFewObservations { n: usize, p: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    ConvergenceFailure { sweeps: usize, off_diagonal: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("bootstrap resampling degenerate: {failures} failed refits in {attempts} attempts")]
    ResamplingDegenerate { attempts: usize, failures: usize },

    #[error("malformed data at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("ragged data: row {row} has {found} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("could not read data: {0}")]
    Read(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerical pipeline, as opposed to bad input or bad parameters.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::ResamplingDegenerate { .. }
        )
    }

    /// True for malformed or unreadable input data.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Ragged { .. } | Error::Read(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Failures of the dense linear-algebra kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },
    #[error("basis already spans the whole space; complement is empty")]
    EmptyComplement,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("gram matrix is singular")]
    SingularGram,
    #[error("columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
}

/// Crate-level error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("direction vector is zero")]
    ZeroVector,
    #[error("no candidate converged (best gradient norm {gradient_norm:e})")]
    NoConvergence { best: Vec<f64>, gradient_norm: f64 },
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("only {found} independent candidate directions, {needed} needed")]
    RankDeficientCandidates { found: usize, needed: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("singular covariance: {0}")]
    SingularCovariance(String),
    #[error("U estimate is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    InvalidUhat { eigenvalue: f64 },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("{0} does not support this operation")]
    UnsupportedKind(String),
    #[error("every candidate dimension failed to fit")]
    AllFitsFailed,
    #[error("bootstrap unstable: {failed} of {total} replicates failed")]
    BootstrapUnstable { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Envelope subspace estimation.
//!
//! The crate estimates the smallest reducing subspace of `M` that contains
//! `span(U)` from sample versions `(M̂, Û)`, using either the sequential 1D
//! algorithm or direct optimization over the Grassmann manifold, and wraps
//! the estimate in the usual envelope regression models.

pub mod error;
pub mod linalg;
pub mod objective;
pub mod onedim;
pub mod grassmann;
pub mod solver;
pub mod exec;
pub mod estimators;
pub mod simulate;

pub use error::{Error, LinalgError, Result};
pub use linalg::{Basis, SymmetricMatrix};
pub use objective::ObjectivePair;
pub use onedim::{AlgorithmTag, Diagnostic, EnvelopeFit, OneDimSettings};
pub use grassmann::{FgSettings, StartStrategy};
pub use solver::{Algorithm, SolverSettings};
pub use exec::Execution;
pub use estimators::{EnvelopeKind, EnvelopeRegressionFit, EstimatorSettings, RegressionData};
pub use simulate::{ExperimentReport, GeneratedInstance};

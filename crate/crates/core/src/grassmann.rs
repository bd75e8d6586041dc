//! Full Grassmann (FG) optimization of `J(Γ)` over `d×u` semi-orthogonal
//! matrices by projected gradient descent with a QR-type retraction.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Basis};
use crate::objective::{self, ObjectivePair};
use crate::onedim::{self, AlgorithmTag, Diagnostic, EnvelopeFit, OneDimSettings};

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const RESIDUAL_SKIP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum StartStrategy {
    /// Greedy selection among eigenvectors of `M` and `M+U`.
    EigenvectorScan,
    /// The 1D algorithm's estimate.
    OneDimWarmStart,
    Provided(Basis),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgSettings {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub start: StartStrategy,
    pub line_search_shrink: f64,
    pub seed: u64,
    /// Used by [`StartStrategy::OneDimWarmStart`].
    pub onedim: OneDimSettings,
}

impl Default for FgSettings {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gradient_tol: 1e-8,
            start: StartStrategy::EigenvectorScan,
            line_search_shrink: 0.5,
            seed: 0,
            onedim: OneDimSettings::default(),
        }
    }
}

/// Greedy eigenvector start.
///
/// The first column is the candidate eigenvector with the smallest `J`; each
/// further column is the normalized residual of the candidate that most
/// decreases `J` when appended. Candidates nearly inside the current span are
/// skipped. Ties go to the earlier candidate.
pub fn eigenvector_scan_start(obj: &ObjectivePair, u: usize) -> Result<Basis> {
    let d = obj.dim();
    check_dimension(u, d)?;
    if u == d {
        return Ok(Basis::identity(d));
    }
    let mut candidates = Vec::with_capacity(2 * d);
    for s in [obj.m(), obj.m_plus_u()] {
        let spec = linalg::sym_eig(s, 0.0)?;
        candidates.extend((0..d).map(|i| spec.eigenvector(i)));
    }
    let mut basis = Basis::empty(d);
    while basis.cols() < u {
        let g = basis.matrix();
        let mut best: Option<(f64, Basis)> = None;
        for c in &candidates {
            let mut r = c - g * (g.transpose() * c);
            r -= g * (g.transpose() * &r);
            let norm = r.norm();
            if norm < RESIDUAL_SKIP {
                continue;
            }
            let Ok(trial) = basis.push(&(r / norm)) else { continue };
            let Ok(value) = objective::j_value(obj, &trial) else { continue };
            if best.as_ref().is_none_or(|(v, _)| value < *v) {
                best = Some((value, trial));
            }
        }
        match best {
            Some((_, next)) => basis = next,
            None => return Err(Error::RankDeficientCandidates { found: basis.cols(), needed: u }),
        }
    }
    Ok(basis)
}

fn check_dimension(u: usize, d: usize) -> Result<()> {
    if u == 0 || u > d {
        return Err(Error::InvalidDimension(format!("u must be between 1 and {d}, got {u}")));
    }
    Ok(())
}

/// Runs FG from the configured start. Reported wall time covers the
/// optimization loop only.
pub fn fit(obj: &ObjectivePair, u: usize, settings: &FgSettings) -> Result<EnvelopeFit> {
    let d = obj.dim();
    check_dimension(u, d)?;
    let start = match &settings.start {
        StartStrategy::EigenvectorScan => eigenvector_scan_start(obj, u)?,
        StartStrategy::OneDimWarmStart => onedim::fit_pair(obj, u, &settings.onedim)?.basis,
        StartStrategy::Provided(b) => {
            if b.rows() != d || b.cols() != u {
                return Err(Error::InvalidDimension(format!(
                    "start basis is {}x{}, expected {d}x{u}",
                    b.rows(),
                    b.cols()
                )));
            }
            b.clone()
        }
    };
    fit_from(obj, start, settings)
}

/// Runs the FG iteration from `start`.
pub fn fit_from(obj: &ObjectivePair, start: Basis, settings: &FgSettings) -> Result<EnvelopeFit> {
    let d = obj.dim();
    let u = start.cols();
    check_dimension(u, d)?;
    let clock = Instant::now();
    let mut gamma = start;
    let mut value = objective::j_value(obj, &gamma)?;
    let mut iterations = 0;
    let mut diagnostics = Vec::new();
    if u < d {
        loop {
            let grad = objective::j_gradient(obj, &gamma)?;
            let tangent = objective::tangent_projection(&gamma, &grad);
            let tnorm = tangent.norm();
            if tnorm < settings.gradient_tol * value.abs().max(1.0) {
                break;
            }
            if iterations >= settings.max_iterations {
                diagnostics.push(Diagnostic::CapReached { iterations });
                break;
            }
            match line_search(obj, &gamma, value, &tangent, tnorm * tnorm, settings.line_search_shrink) {
                Some((next, next_value)) => {
                    gamma = next;
                    value = next_value;
                    iterations += 1;
                }
                None => {
                    diagnostics.push(Diagnostic::Stalled { iteration: iterations, gradient_norm: tnorm });
                    break;
                }
            }
        }
    }
    Ok(EnvelopeFit {
        basis: gamma,
        objective: value,
        objective_values: vec![value],
        inner_iterations: vec![iterations],
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        algorithm: AlgorithmTag::FullGrassmann,
        diagnostics,
    })
}

fn line_search(
    obj: &ObjectivePair,
    gamma: &Basis,
    value: f64,
    tangent: &DMatrix<f64>,
    tnorm_sq: f64,
    shrink: f64,
) -> Option<(Basis, f64)> {
    let mut t = 1.0;
    while t >= MIN_STEP {
        let trial = gamma.matrix() - tangent * t;
        if let Ok(next) = Basis::orthonormalize(&trial) {
            if let Ok(v) = objective::j_value(obj, &next) {
                if v.is_finite() && v <= value - ARMIJO_C * t * tnorm_sq {
                    return Some((next, v));
                }
            }
        }
        t *= shrink;
    }
    None
}

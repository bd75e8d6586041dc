//! The sequential 1D algorithm.
//!
//! Envelope directions are extracted one at a time. At step `k` the pair
//! `(M, M+U)` is restricted to the orthogonal complement `G₀ₖ` of the
//! directions found so far, the one-direction objective `D̃ₖ` is minimized
//! over `ℝ^{d−k}` and the minimizer is mapped back as `gₖ₊₁ = G₀ₖ wₖ₊₁`.
//!
//! Each step is a small unconstrained problem solved by a modified Newton
//! method on the unit sphere, started from every eigenvector of `Mₖ` and of
//! `(Mₖ+Uₖ)⁻¹`.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Basis, SymmetricMatrix};
use crate::objective::{self, ObjectivePair};

/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
/// A step whose best objective is not below `-FLAT_TOL` carries no envelope
/// direction.
const FLAT_TOL: f64 = 1e-14;
/// When the line search can no longer decrease `D̃`, an iterate whose
/// tangential gradient is below `STALL_ACCEPT × max(1, |D̃|)` is at the
/// roundoff floor and counts as converged.
const STALL_ACCEPT: f64 = 1e-6;
/// Predicted Newton decrease, relative to `max(1, |D̃|)`, below which no
/// further progress is representable.
const DECREMENT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimSettings {
    pub max_inner_iterations: usize,
    pub gradient_tol: f64,
    pub num_extra_starts: usize,
    pub seed: u64,
}

impl Default for OneDimSettings {
    fn default() -> Self {
        Self {
            max_inner_iterations: 500,
            gradient_tol: 1e-10,
            num_extra_starts: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmTag {
    #[serde(rename = "onedim")]
    OneDim,
    #[serde(rename = "full-grassmann")]
    FullGrassmann,
}

/// Non-fatal events recorded during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    /// The step objective was flat; the first candidate was accepted.
    FlatStep { step: usize },
    /// `M̂` was regularized before fitting.
    Ridged { ridge: f64 },
    /// The iteration cap was reached; the best iterate was returned.
    CapReached { iterations: usize },
    /// The line search could not decrease the objective any further.
    Stalled { iteration: usize, gradient_norm: f64 },
    /// A direction was accepted at the roundoff floor rather than at the
    /// requested gradient tolerance.
    RoundoffFloor { step: usize, gradient_norm: f64 },
}

/// Result of either envelope algorithm.
#[derive(Debug, Clone)]
pub struct EnvelopeFit {
    /// `d×u`, columns in extraction order for the 1D algorithm.
    pub basis: Basis,
    /// `J(Γ̂)` on the pair that was fitted.
    pub objective: f64,
    /// 1D: `D̃ₖ` at each accepted direction. FG: the final `J`.
    pub objective_values: Vec<f64>,
    /// 1D: Newton iterations of the winning start per step. FG: iterations.
    pub inner_iterations: Vec<usize>,
    pub wall_time_seconds: f64,
    pub algorithm: AlgorithmTag,
    pub diagnostics: Vec<Diagnostic>,
}

/// Minimizer of one step objective.
#[derive(Debug, Clone)]
pub struct DirectionSolution {
    /// Unit vector, largest-magnitude component positive.
    pub w: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub flat: bool,
    pub at_roundoff_floor: bool,
}

#[derive(Debug, Clone)]
struct Attempt {
    w: DVector<f64>,
    value: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
    roundoff: bool,
}

fn tangential(w: &DVector<f64>, grad: &DVector<f64>) -> DVector<f64> {
    grad - w * w.dot(grad)
}

fn armijo(
    obj: &ObjectivePair,
    w: &DVector<f64>,
    value: f64,
    dir: &DVector<f64>,
    slope: f64,
    initial: f64,
) -> Option<(DVector<f64>, f64)> {
    let mut t = initial;
    while t >= MIN_STEP {
        let trial = w + dir * t;
        let norm = trial.norm();
        if norm > 0.0 && norm.is_finite() {
            let trial = trial / norm;
            if let Ok(v) = objective::d_tilde_value(obj, &trial) {
                if v.is_finite() && v <= value + ARMIJO_C * t * slope {
                    return Some((trial, v));
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// Newton direction in the tangent space of the sphere at unit `w`, with the
/// reduced Hessian's eigenvalues replaced by their magnitudes (floored).
fn newton_direction(obj: &ObjectivePair, w: &DVector<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let tangent = linalg::orthonormal_complement(&Basis::from_vector(w)?)?;
    let t = tangent.matrix();
    let hess = objective::d_tilde_hessian(obj, w)?;
    // wᵀ∇D̃ = 0, so the Riemannian Hessian on the sphere reduces to TᵀHT.
    let reduced = hess.congruence(t);
    let g = t.transpose() * grad;
    let spec = linalg::sym_eig(&reduced, 0.0)?;
    let scale = spec.eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let floor = 1e-13 * scale;
    let v = spec.eigenvectors.matrix();
    let mut eta = DVector::zeros(g.len());
    for (i, lambda) in spec.eigenvalues.iter().enumerate() {
        let vi = v.column(i);
        let coef = vi.dot(&g) / lambda.abs().max(floor);
        eta.axpy(-coef, &vi, 1.0);
    }
    Ok(t * eta)
}

fn minimize_from(obj: &ObjectivePair, start: &DVector<f64>, settings: &OneDimSettings) -> Result<Attempt> {
    let mut w = start.normalize();
    let mut value = objective::d_tilde_value(obj, &w)?;
    let mut iterations = 0;
    loop {
        let grad = objective::d_tilde_gradient(obj, &w)?;
        let gt = tangential(&w, &grad);
        let gnorm = gt.norm();
        let threshold = value.abs().max(1.0);
        if gnorm < settings.gradient_tol * threshold {
            return Ok(Attempt { w, value, gradient_norm: gnorm, iterations, converged: true, roundoff: false });
        }
        if iterations >= settings.max_inner_iterations {
            return Ok(Attempt { w, value, gradient_norm: gnorm, iterations, converged: false, roundoff: false });
        }
        let newton = newton_direction(obj, &w, &grad)?;
        let slope = grad.dot(&newton);
        if -slope < DECREMENT_FLOOR * threshold && gnorm < STALL_ACCEPT * threshold {
            return Ok(Attempt { w, value, gradient_norm: gnorm, iterations, converged: true, roundoff: true });
        }
        let mut step = if slope < 0.0 { armijo(obj, &w, value, &newton, slope, 1.0) } else { None };
        if step.is_none() {
            let descent = -&gt;
            step = armijo(obj, &w, value, &descent, -gnorm * gnorm, 1.0 / gnorm.max(1.0));
        }
        match step {
            Some((next, next_value)) => {
                let decrease = value - next_value;
                w = next;
                value = next_value;
                iterations += 1;
                if decrease < DECREMENT_FLOOR * threshold && gnorm < STALL_ACCEPT * threshold {
                    let gnorm = tangential(&w, &objective::d_tilde_gradient(obj, &w)?).norm();
                    return Ok(Attempt { w, value, gradient_norm: gnorm, iterations, converged: true, roundoff: true });
                }
            }
            None => {
                let roundoff = gnorm < STALL_ACCEPT * threshold;
                return Ok(Attempt { w, value, gradient_norm: gnorm, iterations, converged: roundoff, roundoff });
            }
        }
    }
}

fn candidate_starts(obj: &ObjectivePair, settings: &OneDimSettings) -> Result<Vec<DVector<f64>>> {
    let dim = obj.dim();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(2 * dim + settings.num_extra_starts);
    let mut push = |v: DVector<f64>| {
        if !out.iter().any(|c| c.dot(&v).abs() > 1.0 - 1e-12) {
            out.push(v);
        }
    };
    for s in [obj.m(), obj.m_plus_u_inv()] {
        let spec = linalg::sym_eig(s, 0.0)?;
        for i in 0..dim {
            push(spec.eigenvector(i));
        }
    }
    if settings.num_extra_starts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(dim as u64);
        for _ in 0..settings.num_extra_starts {
            let v = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let mut v: DVector<f64> = v.normalize();
            linalg::normalize_sign(&mut v);
            out.push(v);
        }
    }
    Ok(out)
}

/// Minimizes `D̃ₖ` over unit vectors of length `d−k`.
///
/// Every start is run to convergence; the converged run with the smallest
/// objective wins, earlier starts winning ties.
pub fn solve_direction(obj: &ObjectivePair, settings: &OneDimSettings) -> Result<DirectionSolution> {
    let dim = obj.dim();
    if dim == 1 {
        let w = DVector::from_element(1, 1.0);
        let value = objective::d_tilde_value(obj, &w)?;
        return Ok(DirectionSolution {
            w,
            value,
            iterations: 0,
            gradient_norm: 0.0,
            flat: value > -FLAT_TOL,
            at_roundoff_floor: false,
        });
    }
    let starts = candidate_starts(obj, settings)?;
    let mut attempts = Vec::with_capacity(starts.len());
    for s in &starts {
        attempts.push(minimize_from(obj, s, settings)?);
    }

    let mut best: Option<usize> = None;
    for (i, a) in attempts.iter().enumerate() {
        if a.converged && best.is_none_or(|b| a.value < attempts[b].value) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        let worst_case = attempts
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least one start");
        return Err(Error::NoConvergence {
            best: worst_case.w.as_slice().to_vec(),
            gradient_norm: worst_case.gradient_norm,
        });
    };

    let flat = attempts[best].value > -FLAT_TOL;
    let chosen = if flat { &attempts[0] } else { &attempts[best] };
    let mut w = chosen.w.clone();
    linalg::normalize_sign(&mut w);
    Ok(DirectionSolution {
        w,
        value: chosen.value,
        iterations: chosen.iterations,
        gradient_norm: chosen.gradient_norm,
        flat,
        at_roundoff_floor: chosen.roundoff,
    })
}

/// Runs the 1D algorithm on `(M̂, Û)`.
pub fn fit(m_hat: &SymmetricMatrix, u_hat: &SymmetricMatrix, u: usize, settings: &OneDimSettings) -> Result<EnvelopeFit> {
    let pair = ObjectivePair::new(m_hat.clone(), u_hat)?;
    fit_pair(&pair, u, settings)
}

/// Runs the 1D algorithm on a prepared pair.
pub fn fit_pair(pair: &ObjectivePair, u: usize, settings: &OneDimSettings) -> Result<EnvelopeFit> {
    let d = pair.dim();
    if u == 0 || u > d {
        return Err(Error::InvalidDimension(format!("u must be between 1 and {d}, got {u}")));
    }
    let start = Instant::now();
    if u == d {
        let basis = Basis::identity(d);
        let objective = objective::j_value(pair, &basis)?;
        return Ok(EnvelopeFit {
            basis,
            objective,
            objective_values: Vec::new(),
            inner_iterations: Vec::new(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            algorithm: AlgorithmTag::OneDim,
            diagnostics: Vec::new(),
        });
    }

    let mut basis = Basis::empty(d);
    let mut objective_values = Vec::with_capacity(u);
    let mut inner_iterations = Vec::with_capacity(u);
    let mut diagnostics = Vec::new();
    for step in 0..u {
        let wrap = |e: Error| Error::Step { step, source: Box::new(e) };
        let g0 = linalg::orthonormal_complement(&basis).map_err(|e| wrap(e.into()))?;
        let pair_k = if step == 0 { pair.clone() } else { pair.deflate(&g0).map_err(wrap)? };
        let sol = solve_direction(&pair_k, settings).map_err(wrap)?;
        if sol.flat {
            diagnostics.push(Diagnostic::FlatStep { step });
        }
        if sol.at_roundoff_floor {
            diagnostics.push(Diagnostic::RoundoffFloor { step, gradient_norm: sol.gradient_norm });
        }
        let mut g = g0.matrix() * &sol.w;
        // remove roundoff drift back into span(G)
        let gm = basis.matrix();
        g -= gm * (gm.transpose() * &g);
        let g = g.normalize();
        basis = basis.push(&g).map_err(|e| wrap(e.into()))?;
        objective_values.push(sol.value);
        inner_iterations.push(sol.iterations);
    }
    let objective = objective::j_value(pair, &basis)?;
    Ok(EnvelopeFit {
        basis,
        objective,
        objective_values,
        inner_iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        algorithm: AlgorithmTag::OneDim,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    #[test]
    fn two_dim_step_matches_grid_oracle() {
        let obj = ObjectivePair::new(
            SymmetricMatrix::from_diagonal(&[5.0, 1.0]),
            &SymmetricMatrix::from_diagonal(&[0.0, 3.0]),
        )
        .unwrap();
        // oracle: scan the half circle at 1e-4 rad resolution
        let mut best = (f64::INFINITY, 0.0);
        let steps = (std::f64::consts::PI / 1e-4) as usize;
        for i in 0..steps {
            let t = i as f64 * 1e-4;
            let v = objective::d_tilde_value(&obj, &DVector::from_vec(vec![t.cos(), t.sin()])).unwrap();
            if v < best.0 {
                best = (v, t);
            }
        }
        let oracle = DVector::from_vec(vec![best.1.cos(), best.1.sin()]);
        let sol = solve_direction(&obj, &OneDimSettings::default()).unwrap();
        assert!((sol.w.dot(&oracle).abs() - 1.0).abs() < 1e-7);
        assert_abs_diff_eq!(sol.w, e(2, 1), epsilon = 1e-9);
        assert!(sol.value <= best.0 + 1e-12);
    }

    #[test]
    fn one_dimensional_step_is_forced() {
        let obj = ObjectivePair::new(SymmetricMatrix::from_diagonal(&[2.0]), &SymmetricMatrix::from_diagonal(&[1.0]))
            .unwrap();
        let sol = solve_direction(&obj, &OneDimSettings::default()).unwrap();
        assert_eq!(sol.w.as_slice(), &[1.0]);
    }

    #[test]
    fn flat_objective_returns_first_candidate() {
        let obj = ObjectivePair::new(SymmetricMatrix::identity(3), &SymmetricMatrix::zeros(3)).unwrap();
        let sol = solve_direction(&obj, &OneDimSettings::default()).unwrap();
        assert!(sol.flat);
        let first = linalg::sym_eig(&SymmetricMatrix::identity(3), 0.0).unwrap().eigenvector(0);
        assert_eq!(sol.w, first);
    }

    #[test]
    fn recovers_single_eigenvector_envelope() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let u = SymmetricMatrix::outer(&e(3, 1));
        let fit = fit(&m, &u, 1, &OneDimSettings::default()).unwrap();
        let truth = Basis::from_vector(&e(3, 1)).unwrap();
        assert!(linalg::subspace_distance(&fit.basis, &truth).unwrap() < 1e-8);
        assert_eq!(fit.algorithm, AlgorithmTag::OneDim);
        assert!(fit.diagnostics.is_empty());
    }

    #[test]
    fn full_dimension_returns_identity() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let u = SymmetricMatrix::outer(&e(3, 1));
        let fit = fit(&m, &u, 3, &OneDimSettings::default()).unwrap();
        assert_eq!(linalg::subspace_distance(&fit.basis, &Basis::identity(3)).unwrap(), 0.0);
    }

    #[test]
    fn overspecified_dimension_flags_flat_steps() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let u = SymmetricMatrix::outer(&e(4, 1));
        let fit = fit(&m, &u, 3, &OneDimSettings::default()).unwrap();
        assert!(fit.diagnostics.contains(&Diagnostic::FlatStep { step: 1 }));
        assert!(fit.diagnostics.contains(&Diagnostic::FlatStep { step: 2 }));
        assert!(linalg::orthonormality_error(fit.basis.matrix()) < 1e-12);
    }

    #[test]
    fn dimension_validation() {
        let m = SymmetricMatrix::identity(2);
        let u = SymmetricMatrix::zeros(2);
        assert!(matches!(fit(&m, &u, 0, &OneDimSettings::default()), Err(Error::InvalidDimension(_))));
        assert!(matches!(fit(&m, &u, 3, &OneDimSettings::default()), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn not_positive_definite_m_rejected() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 0.0]);
        let u = SymmetricMatrix::identity(2);
        let err = fit(&m, &u, 1, &OneDimSettings::default()).unwrap_err();
        assert!(matches!(err, Error::Linalg(crate::error::LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn extra_random_starts_are_deterministic() {
        let m = SymmetricMatrix::new(DMatrix::from_row_slice(3, 3, &[3.0, 0.5, 0.1, 0.5, 2.0, 0.3, 0.1, 0.3, 1.0]))
            .unwrap();
        let u = SymmetricMatrix::outer(&DVector::from_vec(vec![1.0, -1.0, 0.5]));
        let settings = OneDimSettings { num_extra_starts: 4, seed: 11, ..Default::default() };
        let a = fit(&m, &u, 2, &settings).unwrap();
        let b = fit(&m, &u, 2, &settings).unwrap();
        assert_eq!(a.basis, b.basis);
    }
}

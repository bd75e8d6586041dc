//! Envelope regression estimators built on `(M̂, Û)` plug-ins, and selection
//! of the envelope dimension by BIC or cross-validation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LinalgError, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, Basis, SymmetricMatrix};
use crate::objective::ObjectivePair;
use crate::onedim::{Diagnostic, EnvelopeFit};
use crate::solver::{self, Algorithm, SolverSettings};

/// Most negative eigenvalue of `Û`, relative to `max(1, ‖M̂+Û‖_F)`, accepted
/// as roundoff.
pub const UHAT_TOL: f64 = 1e-8;
/// Ridge applied to a numerically singular `M̂`, relative to `trace(M̂)/d`.
pub const RIDGE_FACTOR: f64 = 1e-8;

/// Row-aligned predictors `x` (n×p) and responses `y` (n×r).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl RegressionData {
    /// `x` may have zero columns for the mean envelopes.
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::InvalidData(format!(
                "x has {} rows but y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if y.nrows() < 2 {
            return Err(Error::InvalidData("at least two observations are required".into()));
        }
        if y.ncols() == 0 {
            return Err(Error::InvalidData("y has no columns".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Self { x, y })
    }

    /// Responses only.
    pub fn responses(y: DMatrix<f64>) -> Result<Self> {
        let n = y.nrows();
        Self::new(DMatrix::zeros(n, 0), y)
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn r(&self) -> usize {
        self.y.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// The observations at `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x.select_rows(rows), self.y.select_rows(rows))
    }
}

pub(crate) fn column_means(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows() as f64;
    DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum() / n))
}

/// `(1/n) Σ (aᵢ − ā)(bᵢ − b̄)ᵀ`.
pub fn cross_covariance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() as f64;
    let ac = center(a);
    let bc = center(b);
    ac.transpose() * bc / n
}

fn center(a: &DMatrix<f64>) -> DMatrix<f64> {
    let means = column_means(a);
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    out
}

/// Sample covariance with divisor `n`.
pub fn covariance(a: &DMatrix<f64>) -> Result<SymmetricMatrix> {
    Ok(SymmetricMatrix::symmetrized(cross_covariance(a, a))?)
}

fn invert(s: &SymmetricMatrix, what: &str) -> Result<SymmetricMatrix> {
    match linalg::pd_inverse_logdet(s, 0.0) {
        Ok((inv, _)) => Ok(inv),
        Err(LinalgError::NotPositiveDefinite { .. }) => Err(Error::SingularCovariance(format!("{what} is singular"))),
        Err(e) => Err(e.into()),
    }
}

/// Sample moments of a regression data set.
#[derive(Debug, Clone)]
pub struct CovarianceKit {
    pub s_x: SymmetricMatrix,
    pub s_y: SymmetricMatrix,
    /// `p×r`.
    pub s_xy: DMatrix<f64>,
    pub s_y_given_x: SymmetricMatrix,
    pub s_x_given_y: SymmetricMatrix,
    pub x_mean: DVector<f64>,
    pub y_mean: DVector<f64>,
    s_x_inv: SymmetricMatrix,
}

impl CovarianceKit {
    pub fn s_x_inv(&self) -> &SymmetricMatrix {
        &self.s_x_inv
    }

    /// `β̂_OLS = S_YX S_X⁻¹` (r×p).
    pub fn beta_ols(&self) -> DMatrix<f64> {
        self.s_xy.transpose() * self.s_x_inv.matrix()
    }
}

pub fn covariance_kit(data: &RegressionData) -> Result<CovarianceKit> {
    if data.p() == 0 {
        return Err(Error::InvalidData("x has no columns".into()));
    }
    let s_x = covariance(data.x())?;
    let s_y = covariance(data.y())?;
    let s_xy = cross_covariance(data.x(), data.y());
    let s_x_inv = invert(&s_x, "S_X")?;
    let s_y_inv = invert(&s_y, "S_Y")?;
    let s_y_given_x =
        SymmetricMatrix::symmetrized(s_y.matrix() - s_xy.transpose() * s_x_inv.matrix() * &s_xy)?;
    let s_x_given_y = SymmetricMatrix::symmetrized(s_x.matrix() - &s_xy * s_y_inv.matrix() * s_xy.transpose())?;
    Ok(CovarianceKit {
        s_x,
        s_y,
        s_xy,
        s_y_given_x,
        s_x_given_y,
        x_mean: column_means(data.x()),
        y_mean: column_means(data.y()),
        s_x_inv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EnvelopeKind {
    Response,
    /// Envelope for the coefficients of the first `p1` predictors.
    Partial { p1: usize },
    Predictor,
    Mean,
    ConstrainedMean,
}

impl EnvelopeKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvelopeKind::Response => "response",
            EnvelopeKind::Partial { .. } => "partial",
            EnvelopeKind::Predictor => "predictor",
            EnvelopeKind::Mean => "mean",
            EnvelopeKind::ConstrainedMean => "constrained-mean",
        }
    }

    /// Largest admissible `u`.
    pub fn max_dimension(&self, data: &RegressionData) -> usize {
        match self {
            EnvelopeKind::Predictor => data.p(),
            EnvelopeKind::ConstrainedMean => data.r().saturating_sub(1),
            _ => data.r(),
        }
    }

    /// Number of columns of the envelope's target, the per-dimension
    /// parameter count used by BIC.
    pub fn target_columns(&self, data: &RegressionData) -> usize {
        match self {
            EnvelopeKind::Response => data.p(),
            EnvelopeKind::Partial { p1 } => *p1,
            EnvelopeKind::Predictor => data.r(),
            EnvelopeKind::Mean | EnvelopeKind::ConstrainedMean => 1,
        }
    }

    pub fn supports_prediction(&self) -> bool {
        matches!(self, EnvelopeKind::Response | EnvelopeKind::Predictor)
    }
}

/// A fitted envelope regression.
#[derive(Debug, Clone)]
pub struct EnvelopeRegressionFit {
    pub fit: EnvelopeFit,
    /// Response/predictor: r×p. Partial: r×p1 block for X₁. Mean kinds: the
    /// r×1 envelope mean.
    pub beta_env: DMatrix<f64>,
    pub sigma_env: SymmetricMatrix,
    /// OLS or sample counterpart of `beta_env`, same shape.
    pub beta_ols: DMatrix<f64>,
    pub alpha_hat: DVector<f64>,
    pub kind: EnvelopeKind,
}

impl EnvelopeRegressionFit {
    /// Fitted values `α̂ + β̂_env xᵢ` for the rows of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !self.kind.supports_prediction() {
            return Err(Error::UnsupportedKind(self.kind.name().into()));
        }
        if x.ncols() != self.beta_env.ncols() {
            return Err(Error::InvalidData(format!(
                "x has {} columns, expected {}",
                x.ncols(),
                self.beta_env.ncols()
            )));
        }
        let mut out = x * self.beta_env.transpose();
        for mut row in out.row_iter_mut() {
            row += self.alpha_hat.transpose();
        }
        Ok(out)
    }
}

/// Solver configuration shared by the estimators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatorSettings {
    pub solver: SolverSettings,
    /// Used for per-dimension fits and cross-validation folds.
    pub execution: Execution,
}

fn check_u(u: usize, d: usize) -> Result<()> {
    if u == 0 || u > d {
        return Err(Error::InvalidDimension(format!("u must be between 1 and d (d = {d}, got {u})")));
    }
    Ok(())
}

/// Builds the objective pair from `M̂` and `M̂+Û`, regularizing `M̂` once if
/// it is numerically singular.
pub fn envelope_pair(m: SymmetricMatrix, m_plus_u: SymmetricMatrix) -> Result<(ObjectivePair, Option<f64>)> {
    let u_hat = m_plus_u.sub(&m);
    let spec = linalg::sym_eig(&u_hat, 0.0)?;
    let lowest = *spec.eigenvalues.last().unwrap();
    if lowest < -UHAT_TOL * m_plus_u.frobenius_norm().max(1.0) {
        return Err(Error::InvalidUhat { eigenvalue: lowest });
    }
    if linalg::is_positive_definite(&m) {
        return Ok((ObjectivePair::from_sum(m, m_plus_u)?, None));
    }
    let ridge = RIDGE_FACTOR * m.trace() / m.dim() as f64;
    if !(ridge > 0.0) {
        return Err(LinalgError::NotPositiveDefinite { eigenvalue: lowest.min(0.0) }.into());
    }
    let pair = ObjectivePair::from_sum(m.add_ridge(ridge), m_plus_u.add_ridge(ridge))?;
    Ok((pair, Some(ridge)))
}

fn solve(
    m: SymmetricMatrix,
    m_plus_u: SymmetricMatrix,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeFit> {
    check_u(u, m.dim())?;
    let (pair, ridge) = envelope_pair(m, m_plus_u)?;
    let mut fit = solver::fit_envelope(&pair, u, algorithm, &settings.solver)?;
    if let Some(ridge) = ridge {
        fit.diagnostics.insert(0, Diagnostic::Ridged { ridge });
    }
    Ok(fit)
}

/// `P S P + Q S Q` for `P = ΓΓᵀ`, `Q = I − P`.
fn split_covariance(p: &DMatrix<f64>, s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let q = DMatrix::identity(p.nrows(), p.ncols()) - p;
    Ok(SymmetricMatrix::symmetrized(p * s.matrix() * p + &q * s.matrix() * &q)?)
}

/// Response envelope: `M̂ = S_{Y|X}`, `M̂+Û = S_Y`, `β̂_env = P_Γ̂ β̂_OLS` and
/// `Σ̂_env = P_Γ̂ S_{Y|X} P_Γ̂ + Q_Γ̂ S_{Y|X} Q_Γ̂`.
pub fn response_envelope(
    data: &RegressionData,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeRegressionFit> {
    check_u(u, data.r())?;
    let kit = covariance_kit(data)?;
    let fit = solve(kit.s_y_given_x.clone(), kit.s_y.clone(), u, algorithm, settings)?;
    let p = fit.basis.projection();
    let beta_ols = kit.beta_ols();
    let beta_env = &p * &beta_ols;
    let alpha_hat = &kit.y_mean - &beta_env * &kit.x_mean;
    let sigma_env = split_covariance(&p, &kit.s_y_given_x)?;
    Ok(EnvelopeRegressionFit { fit, beta_env, sigma_env, beta_ols, alpha_hat, kind: EnvelopeKind::Response })
}

/// Partial envelope for the first `p1` predictors: `M̂ = S_{Y|X}`,
/// `M̂+Û = S_{Y|X₂}`. With `p1 == p` this is the response envelope.
pub fn partial_envelope(
    data: &RegressionData,
    p1: usize,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeRegressionFit> {
    let p = data.p();
    if p1 == 0 || p1 > p {
        return Err(Error::InvalidDimension(format!("p1 must be between 1 and {p}, got {p1}")));
    }
    check_u(u, data.r())?;
    let kit = covariance_kit(data)?;
    let s_y_given_x2 = if p1 == p {
        kit.s_y.clone()
    } else {
        let k = p - p1;
        let s_x2 = SymmetricMatrix::new(kit.s_x.matrix().view((p1, p1), (k, k)).into_owned())?;
        let s_x2y = kit.s_xy.rows(p1, k).into_owned();
        let s_x2_inv = invert(&s_x2, "S_X2")?;
        SymmetricMatrix::symmetrized(kit.s_y.matrix() - s_x2y.transpose() * s_x2_inv.matrix() * &s_x2y)?
    };
    let fit = solve(kit.s_y_given_x.clone(), s_y_given_x2, u, algorithm, settings)?;
    let proj = fit.basis.projection();
    let beta_full = kit.beta_ols();
    let beta_ols = beta_full.columns(0, p1).into_owned();
    let beta_env = &proj * &beta_ols;
    let alpha_hat = &kit.y_mean - &beta_full * &kit.x_mean;
    let sigma_env = split_covariance(&proj, &kit.s_y_given_x)?;
    Ok(EnvelopeRegressionFit {
        fit,
        beta_env,
        sigma_env,
        beta_ols,
        alpha_hat,
        kind: EnvelopeKind::Partial { p1 },
    })
}

/// Predictor envelope: `M̂ = S_{X|Y}`, `M̂+Û = S_X`,
/// `β̂_env = β̂_OLS P_{Γ̂(S_X)}ᵀ`. `Σ̂_env` is the residual covariance under
/// `β̂_env`.
pub fn predictor_envelope(
    data: &RegressionData,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeRegressionFit> {
    check_u(u, data.p())?;
    let kit = covariance_kit(data)?;
    let fit = solve(kit.s_x_given_y.clone(), kit.s_x.clone(), u, algorithm, settings)?;
    let proj = linalg::project(Some(&kit.s_x), fit.basis.matrix())?;
    let beta_ols = kit.beta_ols();
    let beta_env = &beta_ols * proj.transpose();
    let alpha_hat = &kit.y_mean - &beta_env * &kit.x_mean;
    let cross = &beta_env * &kit.s_xy;
    let resid = kit.s_y.matrix() - &cross - cross.transpose() + &beta_env * kit.s_x.matrix() * beta_env.transpose();
    let sigma_env = SymmetricMatrix::symmetrized(resid)?;
    Ok(EnvelopeRegressionFit { fit, beta_env, sigma_env, beta_ols, alpha_hat, kind: EnvelopeKind::Predictor })
}

/// Mean envelope: `M̂ = S_Y`, `Û = μ̂μ̂ᵀ`. The envelope mean `P_Γ̂ μ̂` is both
/// `beta_env` (as a column) and `alpha_hat`.
pub fn mean_envelope(
    y: &DMatrix<f64>,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeRegressionFit> {
    let data = RegressionData::responses(y.clone())?;
    check_u(u, data.r())?;
    let mu = column_means(y);
    let s_y = covariance(y)?;
    let m_plus_u = s_y.add(&SymmetricMatrix::outer(&mu));
    let fit = solve(s_y.clone(), m_plus_u, u, algorithm, settings)?;
    let proj = fit.basis.projection();
    let mu_env = &proj * &mu;
    let sigma_env = split_covariance(&proj, &s_y)?;
    Ok(EnvelopeRegressionFit {
        fit,
        beta_env: DMatrix::from_column_slice(mu.len(), 1, mu_env.as_slice()),
        sigma_env,
        beta_ols: DMatrix::from_column_slice(mu.len(), 1, mu.as_slice()),
        alpha_hat: mu_env,
        kind: EnvelopeKind::Mean,
    })
}

/// Orthonormal basis of the complement of `span(1_r)`.
pub fn ones_complement(r: usize) -> Result<Basis> {
    let ones = DVector::from_element(r, 1.0 / (r as f64).sqrt());
    Ok(linalg::orthonormal_complement(&Basis::from_vector(&ones)?)?)
}

/// Constrained mean envelope of the deviations `Q₁μ`, `Q₁ = I − 11ᵀ/r`.
///
/// Solved in coordinates of an orthonormal basis `B₀` of `span(1)^⊥`, where
/// `Q₁S_YQ₁` is nonsingular; the basis is mapped back as `Γ̂ = B₀Γ̂_red` and the
/// reported objective is the reduced one.
pub fn constrained_mean_envelope(
    y: &DMatrix<f64>,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeRegressionFit> {
    let data = RegressionData::responses(y.clone())?;
    let r = data.r();
    if r < 2 {
        return Err(Error::InvalidDimension("constrained mean envelope needs r ≥ 2".into()));
    }
    check_u(u, r - 1)?;
    let b0 = ones_complement(r)?;
    let mu = column_means(y);
    let s_y = covariance(y)?;
    let s_red = s_y.congruence(b0.matrix());
    let mu_red = b0.matrix().transpose() * &mu;
    let m_plus_u = s_red.add(&SymmetricMatrix::outer(&mu_red));
    let mut fit = solve(s_red, m_plus_u, u, algorithm, settings)?;
    fit.basis = Basis::orthonormalize(&(b0.matrix() * fit.basis.matrix()))?;
    let proj = fit.basis.projection();
    let q1 = b0.projection();
    let alpha_ols = &q1 * &mu;
    let alpha_env = &proj * &mu;
    let sigma_env = split_covariance(&proj, &s_y)?;
    Ok(EnvelopeRegressionFit {
        fit,
        beta_env: DMatrix::from_column_slice(r, 1, alpha_env.as_slice()),
        sigma_env,
        beta_ols: DMatrix::from_column_slice(r, 1, alpha_ols.as_slice()),
        alpha_hat: alpha_env,
        kind: EnvelopeKind::ConstrainedMean,
    })
}

/// Dispatches to the estimator for `kind`.
pub fn fit_kind(
    data: &RegressionData,
    kind: EnvelopeKind,
    u: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<EnvelopeRegressionFit> {
    match kind {
        EnvelopeKind::Response => response_envelope(data, u, algorithm, settings),
        EnvelopeKind::Partial { p1 } => partial_envelope(data, p1, u, algorithm, settings),
        EnvelopeKind::Predictor => predictor_envelope(data, u, algorithm, settings),
        EnvelopeKind::Mean => mean_envelope(data.y(), u, algorithm, settings),
        EnvelopeKind::ConstrainedMean => constrained_mean_envelope(data.y(), u, algorithm, settings),
    }
}

/// Scores for `u = 1..=u_max` and the selected dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSelection {
    pub u_star: usize,
    /// `scores[u-1]`; `None` where the fit failed.
    pub scores: Vec<Option<f64>>,
    pub failures: Vec<(usize, String)>,
}

fn pick(scores: Vec<Option<f64>>, failures: Vec<(usize, String)>) -> Result<DimensionSelection> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i + 1, s));
            }
        }
    }
    let (u_star, _) = best.ok_or(Error::AllFitsFailed)?;
    Ok(DimensionSelection { u_star, scores, failures })
}

fn check_u_max(kind: EnvelopeKind, data: &RegressionData, u_max: usize) -> Result<()> {
    let d = kind.max_dimension(data);
    if u_max == 0 || u_max > d {
        return Err(Error::InvalidDimension(format!("u_max must be between 1 and {d}, got {u_max}")));
    }
    Ok(())
}

/// `BIC(u) = n·J_n(Γ̂_u) + log(n)·u·q`, where `q` is the number of target
/// columns of `kind`.
pub fn select_dimension_bic(
    data: &RegressionData,
    kind: EnvelopeKind,
    u_max: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
) -> Result<DimensionSelection> {
    check_u_max(kind, data, u_max)?;
    let n = data.n() as f64;
    let q = kind.target_columns(data) as f64;
    let results = exec::map_indexed(u_max, settings.execution, |i| {
        let u = i + 1;
        fit_kind(data, kind, u, algorithm, settings).map(|f| n * f.fit.objective + n.ln() * u as f64 * q)
    });
    let mut scores = Vec::with_capacity(u_max);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) if s.is_finite() => scores.push(Some(s)),
            Ok(s) => {
                failures.push((i + 1, format!("non-finite score {s}")));
                scores.push(None);
            }
            Err(e) => {
                failures.push((i + 1, e.to_string()));
                scores.push(None);
            }
        }
    }
    pick(scores, failures)
}

/// Seeded assignment of observations to `folds` folds of near-equal size.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (i, &obs) in order.iter().enumerate() {
        fold[obs] = i % folds;
    }
    fold
}

/// Mean squared prediction error `(1/n) Σᵢ ‖yᵢ − ŷᵢ‖²` over seeded folds for
/// `u = 1..=u_max`; ties go to the smaller `u`.
pub fn select_dimension_cv(
    data: &RegressionData,
    kind: EnvelopeKind,
    u_max: usize,
    folds: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
    seed: u64,
) -> Result<DimensionSelection> {
    if !kind.supports_prediction() {
        return Err(Error::UnsupportedKind(kind.name().into()));
    }
    check_u_max(kind, data, u_max)?;
    let n = data.n();
    if folds < 2 || folds > n {
        return Err(Error::InvalidData(format!("folds must be between 2 and {n}, got {folds}")));
    }
    let assignment = fold_assignment(n, folds, seed);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| {
            let train = (0..n).filter(|&i| assignment[i] != f).collect();
            let test = (0..n).filter(|&i| assignment[i] == f).collect();
            (train, test)
        })
        .collect();
    let results = exec::map_indexed(u_max * folds, settings.execution, |job| {
        let u = job / folds + 1;
        let (train, test) = &splits[job % folds];
        let train = data.select_rows(train)?;
        let fit = fit_kind(&train, kind, u, algorithm, settings)?;
        let pred = fit.predict(&data.x().select_rows(test))?;
        Ok::<f64, Error>((data.y().select_rows(test) - pred).norm_squared())
    });
    let mut scores = Vec::with_capacity(u_max);
    let mut failures = Vec::new();
    for (i, chunk) in results.chunks(folds).enumerate() {
        let mut total = 0.0;
        let mut failed = None;
        for r in chunk {
            match r {
                Ok(s) => total += s,
                Err(e) => {
                    failed.get_or_insert_with(|| e.to_string());
                }
            }
        }
        match failed {
            Some(msg) => {
                failures.push((i + 1, msg));
                scores.push(None);
            }
            None => scores.push(Some(total / n as f64)),
        }
    }
    pick(scores, failures)
}

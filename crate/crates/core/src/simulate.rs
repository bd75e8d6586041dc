//! Seeded simulation harness: envelope-structured instances, regression data,
//! the eigenspace oracle, population and sample experiments, and residual
//! bootstrap standard errors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, EnvelopeKind, EstimatorSettings, RegressionData};
use crate::exec::{self, Execution};
use crate::linalg::{self, Basis, SymmetricMatrix};
use crate::objective::ObjectivePair;
use crate::onedim::Diagnostic;
use crate::solver::{self, Algorithm, SolverSettings};

/// Relative tolerance for including an eigengroup in the oracle envelope.
pub const ORACLE_TOL: f64 = 1e-9;
/// Largest admissible share of failed bootstrap replicates.
pub const BOOTSTRAP_MAX_FAILURE: f64 = 0.2;

const INSTANCE_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;

/// `Σ = ΓΩΓᵀ + Γ₀Ω₀Γ₀ᵀ` and `U = ββᵀ` with `β = Γη`.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub gamma: Basis,
    pub gamma0: Basis,
    pub omega: SymmetricMatrix,
    pub omega0: SymmetricMatrix,
    pub eta: DVector<f64>,
    pub beta: DVector<f64>,
    pub m: SymmetricMatrix,
    pub u_mat: SymmetricMatrix,
    pub seed: u64,
}

impl GeneratedInstance {
    pub fn d(&self) -> usize {
        self.gamma.rows()
    }

    pub fn u(&self) -> usize {
        self.gamma.cols()
    }

    pub fn pair(&self) -> Result<ObjectivePair> {
        ObjectivePair::new(self.m.clone(), &self.u_mat)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_gram<R: Rng>(k: usize, rng: &mut R) -> DMatrix<f64> {
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let a = DMatrix::from_fn(k, k, |_, _| unit.sample(rng));
    &a * a.transpose()
}

/// Instance with `Ω = AAᵀ`, `Ω₀ = A₀A₀ᵀ`, uniform(0,1) entries, `η = 1`.
pub fn generate_instance(d: usize, u: usize, seed: u64) -> Result<GeneratedInstance> {
    generate_instance_scaled(d, u, 1.0, seed)
}

/// As [`generate_instance`] with `Ω₀` multiplied by `omega0_scale`.
pub fn generate_instance_scaled(d: usize, u: usize, omega0_scale: f64, seed: u64) -> Result<GeneratedInstance> {
    if u == 0 || u >= d {
        return Err(Error::InvalidDimension(format!("need 1 ≤ u < d, got u = {u}, d = {d}")));
    }
    if !(omega0_scale > 0.0) {
        return Err(Error::InvalidData("omega0 scale must be positive".into()));
    }
    let mut rng = rng_for(seed, INSTANCE_STREAM);
    let z = DMatrix::from_fn(d, u, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let gamma = Basis::orthonormalize(&z)?;
    let gamma0 = linalg::orthonormal_complement(&gamma)?;
    let omega = SymmetricMatrix::symmetrized(uniform_gram(u, &mut rng))?;
    let omega0 = SymmetricMatrix::symmetrized(uniform_gram(d - u, &mut rng) * omega0_scale)?;
    let eta = DVector::from_element(u, 1.0);
    let beta = gamma.matrix() * &eta;
    let m = SymmetricMatrix::symmetrized(
        gamma.matrix() * omega.matrix() * gamma.matrix().transpose()
            + gamma0.matrix() * omega0.matrix() * gamma0.matrix().transpose(),
    )?;
    let u_mat = SymmetricMatrix::outer(&beta);
    Ok(GeneratedInstance { gamma, gamma0, omega, omega0, eta, beta, m, u_mat, seed })
}

/// `n` draws of `Y = βX + ε`, `X ∼ N(0,1)`, `ε ∼ N(0, Σ)`; the intercept is 0.
pub fn sample_data(inst: &GeneratedInstance, n: usize, seed: u64) -> Result<RegressionData> {
    let d = inst.d();
    if n < d + 2 {
        return Err(Error::InvalidData(format!("need n ≥ d + 2 = {}, got {n}", d + 2)));
    }
    let spec = linalg::sym_eig(&inst.m, 0.0)?;
    let v = spec.eigenvectors.matrix();
    let root_diag = DVector::from_iterator(d, spec.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
    let root = v * DMatrix::from_diagonal(&root_diag) * v.transpose();
    let mut rng = rng_for(seed, DATA_STREAM);
    let x = DMatrix::from_fn(n, 1, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let z = DMatrix::from_fn(n, d, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let y = &x * inst.beta.transpose() + z * root;
    RegressionData::new(x, y)
}

/// The envelope `Σᵢ span(PᵢU)` over the eigenspaces `Pᵢ` of `M`.
///
/// Eigenvalues closer than the default grouping tolerance share a group.
/// Returns an empty `d×0` basis when `U = 0`.
pub fn oracle_envelope(m: &SymmetricMatrix, u_mat: &SymmetricMatrix, tol: f64) -> Result<Basis> {
    let d = m.dim();
    let u_norm = u_mat.frobenius_norm();
    if u_norm == 0.0 {
        return Ok(Basis::empty(d));
    }
    let spec = linalg::sym_eig(m, linalg::DEFAULT_GROUP_TOL)?;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    for g in 0..spec.groups.len() {
        let vg = spec.group_basis(g);
        let image = vg.matrix().transpose() * u_mat.matrix();
        let norm = image.norm();
        if norm <= tol * u_norm {
            continue;
        }
        let gram = SymmetricMatrix::symmetrized(&image * image.transpose())?;
        let inner = linalg::sym_eig(&gram, 0.0)?;
        let top = inner.eigenvalues[0];
        for (k, lambda) in inner.eigenvalues.iter().enumerate() {
            if *lambda > tol * top {
                columns.push(vg.matrix() * inner.eigenvector(k));
            }
        }
    }
    if columns.is_empty() {
        return Ok(Basis::empty(d));
    }
    Ok(Basis::orthonormalize(&DMatrix::from_columns(&columns))?)
}

/// One fit within an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub replication: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub wall_time_seconds: f64,
    pub distance: Option<f64>,
    pub final_objective: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
    pub error: Option<String>,
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, se })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub fits: usize,
    pub failures: usize,
    pub distance: Option<MeanSe>,
    pub median_distance: Option<f64>,
    pub max_distance: Option<f64>,
    pub wall_time_seconds: Option<MeanSe>,
    pub final_objective: Option<MeanSe>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Ordered by replication, then by algorithm as requested.
    pub records: Vec<ExperimentRecord>,
    /// Keyed by algorithm name.
    pub summary: BTreeMap<String, AlgorithmSummary>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

impl ExperimentReport {
    pub fn from_records(records: Vec<ExperimentRecord>) -> Self {
        let mut summary = BTreeMap::new();
        let mut algorithms: Vec<Algorithm> = records.iter().map(|r| r.algorithm).collect();
        algorithms.sort();
        algorithms.dedup();
        for algorithm in algorithms {
            let rs: Vec<&ExperimentRecord> = records.iter().filter(|r| r.algorithm == algorithm).collect();
            let distances: Vec<f64> = rs.iter().filter_map(|r| r.distance).collect();
            let times: Vec<f64> = rs.iter().filter(|r| r.error.is_none()).map(|r| r.wall_time_seconds).collect();
            let objectives: Vec<f64> = rs.iter().filter_map(|r| r.final_objective).collect();
            summary.insert(
                algorithm.name().to_string(),
                AlgorithmSummary {
                    fits: rs.len(),
                    failures: rs.iter().filter(|r| r.error.is_some()).count(),
                    distance: MeanSe::of(&distances),
                    median_distance: median(&distances),
                    max_distance: distances.iter().copied().reduce(f64::max),
                    wall_time_seconds: MeanSe::of(&times),
                    final_objective: MeanSe::of(&objectives),
                },
            );
        }
        Self { records, summary }
    }

    /// Distances of the successful fits of `algorithm`.
    pub fn distances(&self, algorithm: Algorithm) -> Vec<f64> {
        self.records.iter().filter(|r| r.algorithm == algorithm).filter_map(|r| r.distance).collect()
    }
}

fn record(
    replication: usize,
    seed: u64,
    algorithm: Algorithm,
    truth: &Basis,
    fit: Result<crate::onedim::EnvelopeFit>,
) -> ExperimentRecord {
    match fit {
        Ok(f) => ExperimentRecord {
            replication,
            seed,
            algorithm,
            wall_time_seconds: f.wall_time_seconds,
            distance: linalg::subspace_distance(&f.basis, truth).ok(),
            final_objective: Some(f.objective),
            diagnostics: f.diagnostics,
            error: None,
        },
        Err(e) => ExperimentRecord {
            replication,
            seed,
            algorithm,
            wall_time_seconds: 0.0,
            distance: None,
            final_objective: None,
            diagnostics: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Fits every algorithm to the exact `(M, U)` of instances seeded
/// `seed_base + i`.
pub fn population_experiment(
    d: usize,
    u: usize,
    replications: usize,
    algorithms: &[Algorithm],
    seed_base: u64,
    settings: &SolverSettings,
    execution: Execution,
) -> Result<ExperimentReport> {
    if u == 0 || u >= d {
        return Err(Error::InvalidDimension(format!("need 1 ≤ u < d, got u = {u}, d = {d}")));
    }
    let per_rep = exec::map_indexed(replications, execution, |i| {
        let seed = seed_base.wrapping_add(i as u64);
        let inst = generate_instance(d, u, seed);
        algorithms
            .iter()
            .map(|&algorithm| {
                let fit = inst.as_ref().map_err(Clone::clone).and_then(|inst| {
                    let pair = inst.pair()?;
                    solver::fit_envelope(&pair, u, algorithm, settings)
                });
                let truth = inst.as_ref().map(|i| i.gamma.clone()).unwrap_or_else(|_| Basis::empty(d));
                record(i, seed, algorithm, &truth, fit)
            })
            .collect::<Vec<_>>()
    });
    Ok(ExperimentReport::from_records(per_rep.into_iter().flatten().collect()))
}

/// Fits every algorithm to `S_{Y|X}` and `S_Y` of fresh data sets drawn
/// (seeds `seed_base + i`) from the single instance seeded `seed_base`.
#[allow(clippy::too_many_arguments)]
pub fn sample_experiment(
    d: usize,
    u: usize,
    n: usize,
    replications: usize,
    algorithms: &[Algorithm],
    seed_base: u64,
    settings: &SolverSettings,
    execution: Execution,
) -> Result<ExperimentReport> {
    let inst = generate_instance(d, u, seed_base)?;
    if n < d + 2 {
        return Err(Error::InvalidData(format!("need n ≥ d + 2 = {}, got {n}", d + 2)));
    }
    let per_rep = exec::map_indexed(replications, execution, |i| {
        let seed = seed_base.wrapping_add(i as u64);
        let pair = sample_data(&inst, n, seed).and_then(|data| {
            let kit = estimators::covariance_kit(&data)?;
            estimators::envelope_pair(kit.s_y_given_x, kit.s_y)
        });
        algorithms
            .iter()
            .map(|&algorithm| {
                let fit = pair.as_ref().map_err(Clone::clone).and_then(|(pair, ridge)| {
                    let mut fit = solver::fit_envelope(pair, u, algorithm, settings)?;
                    if let Some(ridge) = ridge {
                        fit.diagnostics.insert(0, Diagnostic::Ridged { ridge: *ridge });
                    }
                    Ok(fit)
                });
                record(i, seed, algorithm, &inst.gamma, fit)
            })
            .collect::<Vec<_>>()
    });
    Ok(ExperimentReport::from_records(per_rep.into_iter().flatten().collect()))
}

/// Element-wise bootstrap standard errors of `β̂_OLS` and `β̂_env`.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub se_ols: DMatrix<f64>,
    pub se_env: DMatrix<f64>,
    pub replicates: usize,
    pub failures: usize,
}

fn elementwise_sd(samples: &[DMatrix<f64>]) -> DMatrix<f64> {
    let b = samples.len() as f64;
    let (rows, cols) = samples[0].shape();
    let mean = samples.iter().fold(DMatrix::zeros(rows, cols), |acc, s| acc + s) / b;
    let ss = samples.iter().fold(DMatrix::zeros(rows, cols), |acc, s| {
        let dev = s - &mean;
        acc + dev.component_mul(&dev)
    });
    (ss / (b - 1.0)).map(f64::sqrt)
}

/// Residual bootstrap: OLS residual rows are resampled with replacement,
/// `Y* = α̂ + β̂_OLS X + ε*` is rebuilt and both estimators are refitted.
/// Replicate `b` uses seed `seed + b`.
#[allow(clippy::too_many_arguments)]
pub fn residual_bootstrap(
    data: &RegressionData,
    kind: EnvelopeKind,
    u: usize,
    replicates: usize,
    algorithm: Algorithm,
    settings: &EstimatorSettings,
    seed: u64,
) -> Result<BootstrapResult> {
    if !matches!(kind, EnvelopeKind::Response | EnvelopeKind::Partial { .. } | EnvelopeKind::Predictor) {
        return Err(Error::UnsupportedKind(kind.name().into()));
    }
    if replicates < 2 {
        return Err(Error::InvalidData("bootstrap needs at least 2 replicates".into()));
    }
    estimators::fit_kind(data, kind, u, algorithm, settings)?;
    let kit = estimators::covariance_kit(data)?;
    let beta = kit.beta_ols();
    let alpha = &kit.y_mean - &beta * &kit.x_mean;
    let mut fitted = data.x() * beta.transpose();
    for mut row in fitted.row_iter_mut() {
        row += alpha.transpose();
    }
    let residuals = data.y() - &fitted;
    let n = data.n();
    let inner = EstimatorSettings { execution: Execution::Sequential, ..settings.clone() };
    let draws = exec::map_indexed(replicates, settings.execution, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let y_star = &fitted + residuals.select_rows(&rows);
        let boot = RegressionData::new(data.x().clone(), y_star)?;
        let fit = estimators::fit_kind(&boot, kind, u, algorithm, &inner)?;
        Ok::<_, Error>((fit.beta_ols, fit.beta_env))
    });
    let ok: Vec<(DMatrix<f64>, DMatrix<f64>)> = draws.into_iter().filter_map(Result::ok).collect();
    let failures = replicates - ok.len();
    if failures as f64 > BOOTSTRAP_MAX_FAILURE * replicates as f64 || ok.len() < 2 {
        return Err(Error::BootstrapUnstable { failed: failures, total: replicates });
    }
    let (ols, env): (Vec<_>, Vec<_>) = ok.into_iter().unzip();
    Ok(BootstrapResult {
        se_ols: elementwise_sd(&ols),
        se_env: elementwise_sd(&env),
        replicates,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    #[test]
    fn instances_are_deterministic_and_sound() {
        let a = generate_instance(4, 2, 7).unwrap();
        let b = generate_instance(4, 2, 7).unwrap();
        assert_eq!(a.m, b.m);
        assert_eq!(a.gamma, b.gamma);
        let leak = a.gamma0.matrix().transpose() * a.u_mat.matrix() * a.gamma0.matrix();
        assert!(leak.norm() < 1e-10);
        assert_eq!(oracle_envelope(&a.m, &a.u_mat, ORACLE_TOL).unwrap().cols(), 2);
    }

    #[test]
    fn oracle_single_eigenvector() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let b = oracle_envelope(&m, &SymmetricMatrix::outer(&e(3, 1)), ORACLE_TOL).unwrap();
        assert!(linalg::subspace_distance(&b, &Basis::from_vector(&e(3, 1)).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_two_eigenspaces() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let b = oracle_envelope(&m, &SymmetricMatrix::outer(&(e(3, 0) + e(3, 2))), ORACLE_TOL).unwrap();
        let truth = Basis::orthonormalize(&DMatrix::from_columns(&[e(3, 0), e(3, 2)])).unwrap();
        assert!(linalg::subspace_distance(&b, &truth).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_tied_group_keeps_image_only() {
        let m = SymmetricMatrix::from_diagonal(&[2.0, 2.0, 5.0]);
        let b = oracle_envelope(&m, &SymmetricMatrix::outer(&e(3, 0)), ORACLE_TOL).unwrap();
        assert_eq!(b.cols(), 1);
        assert!(linalg::subspace_distance(&b, &Basis::from_vector(&e(3, 0)).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_of_zero_is_empty() {
        let b = oracle_envelope(&SymmetricMatrix::identity(3), &SymmetricMatrix::zeros(3), ORACLE_TOL).unwrap();
        assert_eq!(b.cols(), 0);
    }

    #[test]
    fn empty_population_experiment() {
        let r = population_experiment(5, 2, 0, &[Algorithm::OneDim], 1, &SolverSettings::default(), Execution::Sequential)
            .unwrap();
        assert!(r.records.is_empty());
        assert!(r.summary.is_empty());
    }

    #[test]
    fn sample_data_is_reproducible() {
        let inst = generate_instance(5, 2, 3).unwrap();
        assert_eq!(sample_data(&inst, 20, 9).unwrap(), sample_data(&inst, 20, 9).unwrap());
        assert!(sample_data(&inst, 6, 9).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}

//! Dense symmetric linear algebra used by every other module.
//!
//! Matrices are stored as `nalgebra::DMatrix<f64>` behind two newtypes:
//! [`SymmetricMatrix`] (exactly symmetric, square) and [`Basis`] (columns
//! orthonormal). The spectral decomposition is delegated to
//! `nalgebra::SymmetricEigen`; ordering, sign normalization, eigenspace
//! grouping and everything built on top of it live here.

use nalgebra::{DMatrix, DVector};

use crate::error::LinalgError;

/// Relative cutoff below which an eigenvalue counts as non-positive.
pub const PD_RELATIVE_TOL: f64 = 1e-12;
/// Default relative gap for merging eigenvalues into one eigenspace.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;
/// Tolerance on `GᵀG - I` accepted by [`Basis::from_orthonormal`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// A dense real symmetric `d×d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Builds from a square matrix; the upper triangle is authoritative and
    /// mirrored into the lower one.
    pub fn new(mut m: DMatrix<f64>) -> Result<Self, LinalgError> {
        check_square(&m)?;
        let d = m.nrows();
        for j in 0..d {
            for i in (j + 1)..d {
                m[(i, j)] = m[(j, i)];
            }
        }
        Ok(Self(m))
    }

    /// Builds from a nearly symmetric matrix (e.g. a computed product) by
    /// averaging it with its transpose.
    pub fn symmetrized(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        check_square(&m)?;
        let t = m.transpose();
        Ok(Self((m + t) * 0.5))
    }

    pub fn identity(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Self(DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "dimension must be at least 1");
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `v vᵀ`.
    pub fn outer(v: &DVector<f64>) -> Self {
        assert!(!v.is_empty(), "dimension must be at least 1");
        Self(v * v.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `vᵀ S v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.0 * v))
    }

    /// `Bᵀ S B`, symmetrized.
    pub fn congruence(&self, b: &DMatrix<f64>) -> SymmetricMatrix {
        let inner = b.transpose() * &self.0 * b;
        let t = inner.transpose();
        SymmetricMatrix((inner + t) * 0.5)
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, c: f64) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 * c)
    }

    pub fn add_ridge(&self, ridge: f64) -> SymmetricMatrix {
        let d = self.dim();
        SymmetricMatrix(&self.0 + DMatrix::identity(d, d) * ridge)
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(LinalgError::InvalidInput("empty matrix".into()));
    }
    Ok(())
}

/// A `d×k` matrix with orthonormal columns, `0 ≤ k ≤ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis(DMatrix<f64>);

impl Basis {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.ncols() > m.nrows() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let deviation = orthonormality_error(&m);
        if deviation > ORTHONORMAL_TOL {
            return Err(LinalgError::NotOrthonormal { deviation });
        }
        Ok(Self(m))
    }

    /// Orthonormalizes the columns of `m` (Gram–Schmidt with one
    /// re-orthogonalization pass). Equivalent to the Q factor of a thin QR
    /// decomposition with positive diagonal in R.
    pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let (d, k) = m.shape();
        if k > d {
            return Err(LinalgError::DimensionMismatch { expected: d, found: k });
        }
        let mut q = DMatrix::<f64>::zeros(d, k);
        for j in 0..k {
            let original = m.column(j).into_owned();
            let scale = original.norm();
            if !scale.is_finite() {
                return Err(LinalgError::InvalidInput("non-finite column".into()));
            }
            let mut v = original;
            for _ in 0..2 {
                for i in 0..j {
                    let qi = q.column(i);
                    let c = qi.dot(&v);
                    v.axpy(-c, &qi, 1.0);
                }
            }
            let norm = v.norm();
            if scale == 0.0 || norm <= 1e-12 * scale {
                return Err(LinalgError::InvalidInput(format!(
                    "column {j} is linearly dependent on the previous ones"
                )));
            }
            q.set_column(j, &(v / norm));
        }
        Ok(Self(q))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    /// The `d×0` basis of the trivial subspace.
    pub fn empty(d: usize) -> Self {
        Self(DMatrix::zeros(d, 0))
    }

    /// Single-column basis spanned by `v`.
    pub fn from_vector(v: &DVector<f64>) -> Result<Self, LinalgError> {
        Self::orthonormalize(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.0.column(j).into_owned()
    }

    /// `ΓΓᵀ`.
    pub fn projection(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// `Γ O` for an orthogonal `O`. The result is re-validated.
    pub fn rotate(&self, o: &DMatrix<f64>) -> Result<Self, LinalgError> {
        Self::from_orthonormal(&self.0 * o)
    }

    /// Appends a unit column assumed orthogonal to the current ones.
    pub fn push(&self, v: &DVector<f64>) -> Result<Self, LinalgError> {
        let (d, k) = self.0.shape();
        if v.len() != d {
            return Err(LinalgError::DimensionMismatch { expected: d, found: v.len() });
        }
        let mut m = self.0.clone().resize_horizontally(k + 1, 0.0);
        m.set_column(k, v);
        Self::from_orthonormal(m)
    }
}

/// `max |GᵀG − I|` entrywise.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let k = m.ncols();
    let gram = m.transpose() * m;
    let mut worst = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Flips `v` so its first component of largest magnitude is positive.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Eigen-decomposition of a symmetric matrix with descending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Basis,
    /// Index groups of (numerically) equal eigenvalues, in descending order.
    pub groups: Vec<Vec<usize>>,
}

impl SpectralDecomposition {
    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = self.eigenvectors.matrix();
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        v * lambda * v.transpose()
    }

    /// Eigenvectors of one group as a basis of its eigenspace.
    pub fn group_basis(&self, group: usize) -> Basis {
        let v = self.eigenvectors.matrix();
        let idx = &self.groups[group];
        let mut m = DMatrix::zeros(v.nrows(), idx.len());
        for (c, &i) in idx.iter().enumerate() {
            m.set_column(c, &v.column(i));
        }
        Basis(m)
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i)
    }
}

/// Symmetric eigendecomposition.
///
/// Eigenvalues come back sorted in descending order, each eigenvector with
/// its largest-magnitude component positive. Adjacent eigenvalues closer than
/// `group_tol × max(1, |λ|_max)` share a group.
pub fn sym_eig(s: &SymmetricMatrix, group_tol: f64) -> Result<SpectralDecomposition, LinalgError> {
    if !s.is_finite() {
        return Err(LinalgError::InvalidInput("matrix has non-finite entries".into()));
    }
    if !(group_tol >= 0.0) {
        return Err(LinalgError::InvalidInput("group tolerance must be non-negative".into()));
    }
    let d = s.dim();
    let eig = nalgebra::SymmetricEigen::new(s.matrix().clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut vectors = DMatrix::zeros(d, d);
    for (c, &i) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[i]);
        let mut v = eig.eigenvectors.column(i).into_owned();
        normalize_sign(&mut v);
        vectors.set_column(c, &v);
    }

    let scale = eigenvalues.iter().fold(1.0_f64, |acc, l| acc.max(l.abs()));
    let gap = group_tol * scale;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        match groups.last_mut() {
            Some(g) if eigenvalues[*g.last().unwrap()] - eigenvalues[i] < gap => g.push(i),
            _ => groups.push(vec![i]),
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: Basis(vectors),
        groups,
    })
}

/// Eigen-based factors of a positive-definite `S = VΛVᵀ`.
#[derive(Debug, Clone)]
pub struct PdFactors {
    /// `Λ^{1/2}Vᵀ`, so that `S = RᵀR`.
    pub root: DMatrix<f64>,
    /// `Λ^{-1/2}Vᵀ`, so that `S⁻¹ = RᵀR`.
    pub inverse_root: DMatrix<f64>,
    pub inverse: SymmetricMatrix,
    pub logdet: f64,
}

/// Factors of `S + ridge·I`; fails unless the smallest eigenvalue exceeds
/// `PD_RELATIVE_TOL · max(1, λ_max)`.
pub fn pd_factors(s: &SymmetricMatrix, ridge: f64) -> Result<PdFactors, LinalgError> {
    if !(ridge >= 0.0) {
        return Err(LinalgError::InvalidInput("ridge must be non-negative".into()));
    }
    let shifted = if ridge > 0.0 { s.add_ridge(ridge) } else { s.clone() };
    let spec = sym_eig(&shifted, 0.0)?;
    let lambda_max = spec.eigenvalues[0];
    let lambda_min = *spec.eigenvalues.last().unwrap();
    if lambda_min <= PD_RELATIVE_TOL * lambda_max.max(1.0) {
        return Err(LinalgError::NotPositiveDefinite { eigenvalue: lambda_min });
    }
    let vt = spec.eigenvectors.matrix().transpose();
    let scaled_rows = |f: &dyn Fn(f64) -> f64| {
        let mut r = vt.clone();
        for (i, l) in spec.eigenvalues.iter().enumerate() {
            r.row_mut(i).scale_mut(f(*l));
        }
        r
    };
    let root = scaled_rows(&|l| l.sqrt());
    let inverse_root = scaled_rows(&|l| 1.0 / l.sqrt());
    let inverse = SymmetricMatrix::symmetrized(inverse_root.transpose() * &inverse_root)?;
    let logdet = spec.eigenvalues.iter().map(|l| l.ln()).sum();
    Ok(PdFactors { root, inverse_root, inverse, logdet })
}

/// `(S + ridge·I)⁻¹` and `log|S + ridge·I|` from the spectral decomposition.
///
/// An eigenvalue `λ ≤ 1e-12 × max(1, λ_max)` is treated as non-positive.
pub fn pd_inverse_logdet(
    s: &SymmetricMatrix,
    ridge: f64,
) -> Result<(SymmetricMatrix, f64), LinalgError> {
    let f = pd_factors(s, ridge)?;
    Ok((f.inverse, f.logdet))
}

/// Whether `s` passes the positive-definiteness tolerance.
pub fn is_positive_definite(s: &SymmetricMatrix) -> bool {
    match sym_eig(s, 0.0) {
        Ok(spec) => {
            let lmin = *spec.eigenvalues.last().unwrap();
            lmin > PD_RELATIVE_TOL * spec.eigenvalues[0].max(1.0)
        }
        Err(_) => false,
    }
}

/// `log|Gᵀ S G|` via Cholesky; a Gram matrix that is not positive definite
/// is reported as singular. An empty `G` yields 0.
pub fn gram_logdet(s: &SymmetricMatrix, g: &DMatrix<f64>) -> Result<f64, LinalgError> {
    if g.nrows() != s.dim() {
        return Err(LinalgError::DimensionMismatch { expected: s.dim(), found: g.nrows() });
    }
    if g.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = s.congruence(g);
    cholesky_logdet(gram.matrix()).ok_or(LinalgError::SingularGram)
}

/// `log|GᵀRᵀRG|` from the QR factorization of `RG`, for a square-root factor
/// `R` of `S = RᵀR`. An empty `G` yields 0.
pub fn factored_gram_logdet(root: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64, LinalgError> {
    if g.nrows() != root.ncols() {
        return Err(LinalgError::DimensionMismatch { expected: root.ncols(), found: g.nrows() });
    }
    if g.ncols() == 0 {
        return Ok(0.0);
    }
    if g.ncols() > root.nrows() {
        return Err(LinalgError::SingularGram);
    }
    let r = (root * g).qr().r();
    let mut acc = 0.0;
    for i in 0..g.ncols() {
        let v = r[(i, i)].abs();
        if !(v > 0.0 && v.is_finite()) {
            return Err(LinalgError::SingularGram);
        }
        acc += v.ln();
    }
    Ok(2.0 * acc)
}

/// `log|A|` for a positive-definite `A`, `None` if Cholesky fails.
pub(crate) fn cholesky_logdet(a: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(a.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        let v = l[(i, i)];
        if !(v > 0.0) {
            return None;
        }
        acc += v.ln();
    }
    Some(2.0 * acc)
}

/// Orthonormal basis `G₀` of the complement of `span(G)`.
///
/// Gram–Schmidt against the standard basis, at each step taking the
/// coordinate vector with the largest residual (lowest index on ties).
pub fn orthonormal_complement(g: &Basis) -> Result<Basis, LinalgError> {
    let (d, k) = (g.rows(), g.cols());
    if k >= d {
        return Err(LinalgError::EmptyComplement);
    }
    let gm = g.matrix();
    // Residuals of e_1..e_d against span(G): columns of I - GGᵀ.
    let mut residual = DMatrix::<f64>::identity(d, d) - gm * gm.transpose();
    let mut out = DMatrix::<f64>::zeros(d, d - k);
    for c in 0..(d - k) {
        let mut best = 0;
        let mut best_norm = -1.0;
        for j in 0..d {
            let n = residual.column(j).norm();
            if n > best_norm * (1.0 + 1e-12) {
                best = j;
                best_norm = n;
            }
        }
        let mut v = residual.column(best).into_owned();
        // Re-orthogonalize against G and the columns already chosen.
        for _ in 0..2 {
            for i in 0..k {
                let gi = gm.column(i);
                let coef = gi.dot(&v);
                v.axpy(-coef, &gi, 1.0);
            }
            for i in 0..c {
                let qi = out.column(i);
                let coef = qi.dot(&v);
                v.axpy(-coef, &qi, 1.0);
            }
        }
        let v = v.normalize();
        for j in 0..d {
            let coef = v.dot(&residual.column(j));
            let mut col = residual.column_mut(j);
            col.axpy(-coef, &v, 1.0);
        }
        out.set_column(c, &v);
    }
    Ok(Basis(out))
}

/// `‖AAᵀ − BBᵀ‖_F`.
pub fn subspace_distance(a: &Basis, b: &Basis) -> Result<f64, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch { expected: a.rows(), found: b.rows() });
    }
    Ok((a.projection() - b.projection()).norm())
}

/// `P_{A(V)} = A (AᵀVA)⁻¹ AᵀV`, with `V = I` when `metric` is `None`.
pub fn project(metric: Option<&SymmetricMatrix>, a: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let d = a.nrows();
    let av = match metric {
        Some(v) => {
            if v.dim() != d {
                return Err(LinalgError::DimensionMismatch { expected: v.dim(), found: d });
            }
            a.transpose() * v.matrix()
        }
        None => a.transpose(),
    };
    if a.ncols() == 0 {
        return Ok(DMatrix::zeros(d, d));
    }
    let gram = SymmetricMatrix::symmetrized(&av * a)?;
    let spec = sym_eig(&gram, 0.0).map_err(|_| LinalgError::SingularGram)?;
    let scale = spec.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let smallest = spec.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    if scale == 0.0 || smallest <= PD_RELATIVE_TOL * scale {
        return Err(LinalgError::SingularGram);
    }
    let v = spec.eigenvectors.matrix();
    let inv_diag = DVector::from_iterator(spec.eigenvalues.len(), spec.eigenvalues.iter().map(|l| 1.0 / l));
    let gram_inv = v * DMatrix::from_diagonal(&inv_diag) * v.transpose();
    Ok(a * gram_inv * av)
}

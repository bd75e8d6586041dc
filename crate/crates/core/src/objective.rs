//! The envelope objective
//!
//! ```text
//! J(Γ) = log|ΓᵀMΓ| + log|Γᵀ(M+U)⁻¹Γ|
//! ```
//!
//! its split into a reducing part and a containment part, the one-direction
//! objective `D̃(w)` minimized by the sequential algorithm, and derivatives.
//!
//! `D̃` is minimized. Its maximization counterpart with sample size `n`,
//! `Qₙ(w) = −(n/2)·D̃(w)`, is available as [`q_n_value`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, LinalgError, Result};
use crate::linalg::{self, Basis, SymmetricMatrix};

/// `M` together with `M+U`, its inverse and log-determinant.
///
/// `(M+U)⁻¹` and square-root factors of `M`, `M+U` and `(M+U)⁻¹` are computed
/// once at construction; log-determinants of Gram matrices are taken from QR
/// factors of `RΓ` rather than from `ΓᵀSΓ`.
#[derive(Debug, Clone)]
pub struct ObjectivePair {
    m: SymmetricMatrix,
    m_plus_u: SymmetricMatrix,
    m_plus_u_inv: SymmetricMatrix,
    m_plus_u_logdet: f64,
    m_root: DMatrix<f64>,
    m_plus_u_root: DMatrix<f64>,
    m_plus_u_inv_root: DMatrix<f64>,
}

impl ObjectivePair {
    /// From `M` and `U`.
    pub fn new(m: SymmetricMatrix, u: &SymmetricMatrix) -> Result<Self> {
        if u.dim() != m.dim() {
            return Err(LinalgError::DimensionMismatch { expected: m.dim(), found: u.dim() }.into());
        }
        let sum = m.add(u);
        Self::from_sum(m, sum)
    }

    /// From `M` and `M+U` directly (e.g. `S_{Y|X}` and `S_Y`).
    pub fn from_sum(m: SymmetricMatrix, m_plus_u: SymmetricMatrix) -> Result<Self> {
        if m_plus_u.dim() != m.dim() {
            return Err(LinalgError::DimensionMismatch { expected: m.dim(), found: m_plus_u.dim() }.into());
        }
        let m_factors = linalg::pd_factors(&m, 0.0)?;
        let mu = linalg::pd_factors(&m_plus_u, 0.0)?;
        Ok(Self {
            m,
            m_plus_u,
            m_plus_u_inv: mu.inverse,
            m_plus_u_logdet: mu.logdet,
            m_root: m_factors.root,
            m_plus_u_root: mu.root,
            m_plus_u_inv_root: mu.inverse_root,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn m(&self) -> &SymmetricMatrix {
        &self.m
    }

    pub fn m_plus_u(&self) -> &SymmetricMatrix {
        &self.m_plus_u
    }

    pub fn m_plus_u_inv(&self) -> &SymmetricMatrix {
        &self.m_plus_u_inv
    }

    pub fn m_plus_u_logdet(&self) -> f64 {
        self.m_plus_u_logdet
    }

    /// `U = (M+U) − M`.
    pub fn u(&self) -> SymmetricMatrix {
        self.m_plus_u.sub(&self.m)
    }

    /// The pair restricted to `span(G₀)`: `(G₀ᵀMG₀, G₀ᵀ(M+U)G₀)`, with the
    /// inverse taken after restriction.
    pub fn deflate(&self, g0: &Basis) -> Result<Self> {
        let g = g0.matrix();
        Self::from_sum(self.m.congruence(g), self.m_plus_u.congruence(g))
    }
}

fn check_basis(obj: &ObjectivePair, gamma: &Basis) -> Result<()> {
    if gamma.rows() != obj.dim() {
        return Err(LinalgError::DimensionMismatch { expected: obj.dim(), found: gamma.rows() }.into());
    }
    if gamma.cols() == 0 {
        return Err(Error::InvalidDimension("basis must have at least one column".into()));
    }
    Ok(())
}

/// `J(Γ) = log|ΓᵀMΓ| + log|Γᵀ(M+U)⁻¹Γ|`.
pub fn j_value(obj: &ObjectivePair, gamma: &Basis) -> Result<f64> {
    check_basis(obj, gamma)?;
    let g = gamma.matrix();
    Ok(linalg::factored_gram_logdet(&obj.m_root, g)? + linalg::factored_gram_logdet(&obj.m_plus_u_inv_root, g)?)
}

/// `(J⁽¹⁾, J⁽²⁾)` with
/// `J⁽¹⁾ = log|ΓᵀMΓ| + log|Γ₀ᵀMΓ₀|` and
/// `J⁽²⁾ = log|Γ₀ᵀ(M+U)Γ₀| − log|Γ₀ᵀMΓ₀| − log|M+U|`.
pub fn j_decomposition(obj: &ObjectivePair, gamma: &Basis) -> Result<(f64, f64)> {
    check_basis(obj, gamma)?;
    let gamma0 = if gamma.cols() == gamma.rows() {
        Basis::empty(gamma.rows())
    } else {
        linalg::orthonormal_complement(gamma)?
    };
    let g = gamma.matrix();
    let g0 = gamma0.matrix();
    let m_gamma = linalg::factored_gram_logdet(&obj.m_root, g)?;
    let m_gamma0 = linalg::factored_gram_logdet(&obj.m_root, g0)?;
    let mu_gamma0 = linalg::factored_gram_logdet(&obj.m_plus_u_root, g0)?;
    Ok((m_gamma + m_gamma0, mu_gamma0 - m_gamma0 - obj.m_plus_u_logdet))
}

/// `J⁽²⁾ + log|M+U| = log|Γ₀ᵀ(M+U)Γ₀| − log|Γ₀ᵀMΓ₀|`: nonnegative, and zero
/// exactly when `span(U) ⊆ span(Γ)`.
pub fn containment_gap(obj: &ObjectivePair, gamma: &Basis) -> Result<f64> {
    let (_, j2) = j_decomposition(obj, gamma)?;
    Ok(j2 + obj.m_plus_u_logdet)
}

/// Euclidean gradient of `J`: `2MΓ(ΓᵀMΓ)⁻¹ + 2(M+U)⁻¹Γ(Γᵀ(M+U)⁻¹Γ)⁻¹`.
pub fn j_gradient(obj: &ObjectivePair, gamma: &Basis) -> Result<DMatrix<f64>> {
    check_basis(obj, gamma)?;
    let g = gamma.matrix();
    let term = |s: &SymmetricMatrix| -> Result<DMatrix<f64>> {
        let sg = s.matrix() * g;
        let gram = g.transpose() * &sg;
        let gram = (&gram + gram.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(gram).ok_or(LinalgError::SingularGram)?;
        // S Γ (ΓᵀSΓ)⁻¹ = (Gram⁻¹ (SΓ)ᵀ)ᵀ
        Ok(chol.solve(&sg.transpose()).transpose() * 2.0)
    };
    Ok(term(&obj.m)? + term(&obj.m_plus_u_inv)?)
}

/// Projection of a Euclidean gradient onto the tangent space at `Γ`:
/// `(I − ΓΓᵀ)·grad`.
pub fn tangent_projection(gamma: &Basis, grad: &DMatrix<f64>) -> DMatrix<f64> {
    let g = gamma.matrix();
    grad - g * (g.transpose() * grad)
}

struct Quadratics {
    a: f64,
    b: f64,
    c: f64,
    mw: DVector<f64>,
    nw: DVector<f64>,
}

fn quadratics(obj: &ObjectivePair, w: &DVector<f64>) -> Result<Quadratics> {
    if w.len() != obj.dim() {
        return Err(LinalgError::DimensionMismatch { expected: obj.dim(), found: w.len() }.into());
    }
    let c = w.dot(w);
    if c == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mw = obj.m.matrix() * w;
    let nw = obj.m_plus_u_inv.matrix() * w;
    Ok(Quadratics { a: w.dot(&mw), b: w.dot(&nw), c, mw, nw })
}

/// `D̃(w) = log(wᵀMw) + log(wᵀ(M+U)⁻¹w) − 2·log(wᵀw)`.
pub fn d_tilde_value(obj: &ObjectivePair, w: &DVector<f64>) -> Result<f64> {
    let q = quadratics(obj, w)?;
    Ok(q.a.ln() + q.b.ln() - 2.0 * q.c.ln())
}

/// `∇D̃(w) = 2Mw/(wᵀMw) + 2(M+U)⁻¹w/(wᵀ(M+U)⁻¹w) − 4w/(wᵀw)`.
pub fn d_tilde_gradient(obj: &ObjectivePair, w: &DVector<f64>) -> Result<DVector<f64>> {
    let q = quadratics(obj, w)?;
    Ok(q.mw * (2.0 / q.a) + q.nw * (2.0 / q.b) - w * (4.0 / q.c))
}

/// Hessian of `D̃`:
///
/// ```text
/// 2M/a − 4(Mw)(Mw)ᵀ/a² + 2N/b − 4(Nw)(Nw)ᵀ/b² − 4I/c + 8wwᵀ/c²
/// ```
///
/// with `N = (M+U)⁻¹`, `a = wᵀMw`, `b = wᵀNw`, `c = wᵀw`.
pub fn d_tilde_hessian(obj: &ObjectivePair, w: &DVector<f64>) -> Result<SymmetricMatrix> {
    let q = quadratics(obj, w)?;
    let d = w.len();
    let mut h = obj.m.matrix() * (2.0 / q.a) + obj.m_plus_u_inv.matrix() * (2.0 / q.b);
    h -= DMatrix::<f64>::identity(d, d) * (4.0 / q.c);
    h.ger(-4.0 / (q.a * q.a), &q.mw, &q.mw, 1.0);
    h.ger(-4.0 / (q.b * q.b), &q.nw, &q.nw, 1.0);
    h.ger(8.0 / (q.c * q.c), w, w, 1.0);
    Ok(SymmetricMatrix::symmetrized(h)?)
}

/// The maximization form used in asymptotic arguments:
/// `Qₙ(w) = −(n/2)·log(wᵀMw) − (n/2)·log(wᵀ(M+U)⁻¹w) + n·log(wᵀw)`.
pub fn q_n_value(obj: &ObjectivePair, w: &DVector<f64>, n: f64) -> Result<f64> {
    let q = quadratics(obj, w)?;
    Ok(-0.5 * n * q.a.ln() - 0.5 * n * q.b.ln() + n * q.c.ln())
}

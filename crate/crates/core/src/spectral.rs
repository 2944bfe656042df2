//! Dense Hermitian linear algebra: eigen-decomposition, inertia, Cholesky,
//! null spaces, and the majorization utilities the trace bounds rest on.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative threshold below which singular values (or eigenvalue magnitudes)
/// count as zero.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Absolute floor used when a norm is zero.
pub const ABS_FLOOR: f64 = 1e-12;

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Dense square complex matrix that has been checked to be Hermitian and
/// then exactly symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asymmetry = max_abs(&(&m - m.adjoint()));
        let norm = max_abs(&m);
        let tol = if norm > 0.0 { 1e-12 * norm } else { ABS_FLOOR };
        if asymmetry > tol {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self::symmetrize(m))
    }

    /// Hermitian part `(M + Mᴴ)/2` without any check.
    pub fn symmetrize(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        HermitianMatrix(h)
    }

    /// Builds from real row-major data.
    pub fn from_real_rows(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::LengthMismatch { left: data.len(), right: n * n });
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| C64::new(data[i * n + j], 0.0)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrize(&self.0 + other.0.scale(alpha))
    }

    pub fn scale(&self, alpha: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.scale(alpha))
    }

    pub fn neg(&self) -> HermitianMatrix {
        self.scale(-1.0)
    }

    /// `Tᴴ H T`; `T` may be rectangular.
    pub fn congruence(&self, t: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrize(t.adjoint() * &self.0 * t)
    }

    /// Principal submatrix on `rows` (same index set for rows and columns).
    pub fn principal(&self, idx: &[usize]) -> HermitianMatrix {
        let m = idx.len();
        HermitianMatrix(CMatrix::from_fn(m, m, |i, j| self.0[(idx[i], idx[j])]))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }
}

/// Eigenvalues sorted descending, with unitary eigenvector columns aligned.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, j: usize) -> CMatrix {
        self.vectors.columns(j, 1).into_owned()
    }

    /// Columns for the selected indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> CMatrix {
        select_columns(&self.vectors, idx)
    }
}

pub fn select_columns(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

/// Horizontal concatenation; either side may have zero columns.
pub fn hstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows());
    let (n, ka, kb) = (a.nrows(), a.ncols(), b.ncols());
    CMatrix::from_fn(n, ka + kb, |i, j| if j < ka { a[(i, j)] } else { b[(i, j - ka)] })
}

/// Hermitian eigen-decomposition, values descending.
///
/// Each eigenvector is rotated so that its largest-magnitude entry is real
/// and positive, which makes the output deterministic up to ties.
pub fn eig_herm(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = h.dim();
    if n == 0 {
        return Ok(EigenDecomposition { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let max_niter = (30 * n * n).max(1000) * n;
    let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, max_niter)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = select_columns(&eig.eigenvectors, &order);
    for j in 0..n {
        let mut col = vectors.column_mut(j);
        let norm = col.norm();
        let pivot = col.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            col *= phase / norm;
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigvals_herm(h: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eig_herm(h)?.values)
}

/// Counts of positive, zero and negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_zero: usize,
    pub n_minus: usize,
}

impl Inertia {
    pub fn n(&self) -> usize {
        self.n_plus + self.n_zero + self.n_minus
    }

    pub fn rank(&self) -> usize {
        self.n_plus + self.n_minus
    }

    pub fn from_values(values: &[f64], tol: f64) -> Inertia {
        let n_plus = values.iter().filter(|&&v| v > tol).count();
        let n_minus = values.iter().filter(|&&v| v < -tol).count();
        Inertia { n_plus, n_zero: values.len() - n_plus - n_minus, n_minus }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.n_zero == 0 && self.n_minus == 0 && self.n_plus > 0
    }

    pub fn is_negative_definite(&self) -> bool {
        self.n_zero == 0 && self.n_plus == 0 && self.n_minus > 0
    }

    pub fn is_genuinely_indefinite(&self) -> bool {
        self.n_plus > 0 && self.n_minus > 0
    }
}

/// Default inertia tolerance `1e-10·‖H‖_max`, absolute `1e-12` for `H = 0`.
pub fn default_inertia_tol(h: &HermitianMatrix) -> f64 {
    let norm = h.max_abs();
    if norm > 0.0 {
        1e-10 * norm
    } else {
        ABS_FLOOR
    }
}

pub fn inertia(h: &HermitianMatrix, tol: f64) -> Result<Inertia> {
    Ok(Inertia::from_values(&eigvals_herm(h)?, tol))
}

/// Lower-triangular `L` with `B = L Lᴴ` and positive real diagonal.
pub fn cholesky(b: &HermitianMatrix) -> Result<CMatrix> {
    let n = b.dim();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let lmin = eigvals_herm(b)?.last().copied().unwrap_or(0.0);
    if lmin <= 1e-10 * b.max_abs() || lmin <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = nalgebra::Cholesky::new(b.matrix().clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.unpack())
}

/// Orthonormal basis for the null space of a (possibly rectangular) matrix,
/// using the shared relative rank threshold on singular values.
pub fn null_space(m: &CMatrix) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // Work with the n×n Gram-free form: pad to at least n rows so that the SVD
    // returns a full right basis.
    let padded = if m.nrows() >= n {
        m.clone()
    } else {
        let mut p = CMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = if smax > 0.0 { RANK_REL_TOL * smax } else { ABS_FLOOR };
    let idx: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut basis = CMatrix::zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        let row = v_t.row(i);
        for r in 0..n {
            basis[(r, j)] = row[r].conj();
        }
    }
    basis
}

/// Numerical rank with the shared relative threshold.
pub fn rank(m: &CMatrix) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_TOL * smax).count()
}

/// `H^{1/2}` for a positive semi-definite `H` (negative round-off clipped).
pub fn sqrtm_psd(h: &HermitianMatrix) -> Result<CMatrix> {
    let eig = eig_herm(h)?;
    let n = h.dim();
    let mut scaled = eig.vectors.clone();
    for j in 0..n {
        let s = eig.values[j].max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(&scaled * eig.vectors.adjoint())
}

/// `tr(D Xᴴ A X)` (real part; the imaginary part vanishes for Hermitian `A`, `D`).
pub fn trace_objective(a: &CMatrix, d: &CMatrix, x: &CMatrix) -> f64 {
    let m = x.adjoint() * a * x;
    let mut t = 0.0;
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            t += (d[(i, j)] * m[(j, i)]).re;
        }
    }
    t
}

/// Whether `beta` majorizes `alpha`: descending prefix sums of `beta`
/// dominate those of `alpha`, and the totals agree within `1e-9·(1+|Σβ|)`.
pub fn majorizes(beta: &[f64], alpha: &[f64]) -> Result<bool> {
    if beta.len() != alpha.len() {
        return Err(Error::LengthMismatch { left: beta.len(), right: alpha.len() });
    }
    let b = sorted_desc(beta);
    let a = sorted_desc(alpha);
    let total: f64 = b.iter().sum();
    let tol = 1e-9 * (1.0 + total.abs());
    let (mut pa, mut pb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        pa += x;
        pb += y;
        if pa > pb + tol {
            return Ok(false);
        }
    }
    Ok((pa - pb).abs() <= tol)
}

/// `(Σ γᵢ βᵢ↑, Σ γᵢ βᵢ↓)` for `γ` sorted descending.
pub fn weighted_sum_bounds(gamma: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    if gamma.len() != beta.len() {
        return Err(Error::LengthMismatch { left: gamma.len(), right: beta.len() });
    }
    let down = sorted_desc(beta);
    let lower = gamma.iter().zip(down.iter().rev()).map(|(g, b)| g * b).sum();
    let upper = gamma.iter().zip(&down).map(|(g, b)| g * b).sum();
    Ok((lower, upper))
}

pub fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn sorted_asc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

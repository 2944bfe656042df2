//! Minimization and maximization of `tr(D Xᴴ A X)` over `Xᴴ B X = I_k` with
//! positive definite `B`.

use crate::error::{Error, Result};
use crate::report::{PairRole, PairingTerm, Route, SolveReport};
use crate::spectral::{
    cholesky, eig_herm, max_abs, select_columns, CMatrix, HermitianMatrix,
};

/// `Uᴴ B U = I`, `Uᴴ A U = diag(lambdas)` with `lambdas` ascending.
#[derive(Debug, Clone)]
pub struct DefinitePencilEigen {
    pub u: CMatrix,
    pub lambdas: Vec<f64>,
}

/// Eigenvalues of `D` in descending order, their eigenvectors, and the
/// number of weights that count as nonnegative.
#[derive(Debug, Clone)]
pub struct OmegaSplit {
    pub omegas: Vec<f64>,
    pub ell: usize,
    pub q: CMatrix,
    pub tol: f64,
}

impl OmegaSplit {
    pub fn new(d: &HermitianMatrix) -> Result<Self> {
        let eig = eig_herm(d)?;
        let tol = omega_tol(d);
        let ell = eig.values.iter().filter(|&&w| w >= -tol).count();
        Ok(OmegaSplit { omegas: eig.values, ell, q: eig.vectors, tol })
    }

    /// Indices of weights strictly above `tol` or strictly below `-tol`.
    pub fn nonzero_indices(&self) -> Vec<usize> {
        (0..self.omegas.len()).filter(|&i| self.omegas[i].abs() > self.tol).collect()
    }
}

/// Tolerance for sign decisions on the weights, `1e-10·(1+‖D‖_max)`.
pub fn omega_tol(d: &HermitianMatrix) -> f64 {
    1e-10 * (1.0 + d.max_abs())
}

pub fn pencil_eig_definite(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<DefinitePencilEigen> {
    check_square_pair(a, b)?;
    let n = a.dim();
    let l = cholesky(b)?;
    let l_inv = l
        .solve_lower_triangular(&CMatrix::identity(n, n))
        .ok_or(Error::NotPositiveDefinite)?;
    let reduced = a.congruence(&l_inv.adjoint());
    let eig = eig_herm(&reduced)?;
    let order: Vec<usize> = (0..n).rev().collect();
    let lambdas = order.iter().map(|&i| eig.values[i]).collect();
    let u = l_inv.adjoint() * eig.select(&order);
    Ok(DefinitePencilEigen { u, lambdas })
}

pub(crate) fn check_square_pair(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but B is {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(())
}

pub(crate) fn check_k(d: &HermitianMatrix, k: usize, available: usize) -> Result<()> {
    if d.dim() != k {
        return Err(Error::DimensionMismatch(format!("D is {}x{} but k = {k}", d.dim(), d.dim())));
    }
    if k == 0 {
        return Err(Error::DimensionMismatch("k must be at least 1".into()));
    }
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    Ok(())
}

pub fn solve_definite_min(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    k: usize,
    want_optimizer: bool,
) -> Result<SolveReport> {
    check_square_pair(a, b)?;
    let n = a.dim();
    check_k(d, k, n)?;
    let pe = pencil_eig_definite(a, b)?;
    let split = OmegaSplit::new(d)?;
    let ell = split.ell;

    let mut columns = Vec::with_capacity(k);
    let mut pairing = Vec::with_capacity(k);
    for i in 0..k {
        let (j, role) = if i < ell { (i, PairRole::Leading) } else { (i + n - k, PairRole::Trailing) };
        columns.push(j);
        pairing.push(PairingTerm {
            omega: split.omegas[i],
            lambda: pe.lambdas[j],
            sign: 1.0,
            index: j + 1,
            role,
        });
    }
    let value = pairing.iter().map(PairingTerm::product).sum();
    let x_opt = want_optimizer.then(|| select_columns(&pe.u, &columns) * split.q.adjoint());
    Ok(SolveReport {
        finite: true,
        value: Some(value),
        attained: true,
        x_opt,
        pairing,
        route: Route::DefiniteMin,
        lambdas: pe.lambdas,
        pencil: None,
        warnings: vec![],
    })
}

/// Maximum, obtained as `-min` over `-A`.
pub fn solve_definite_max(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    k: usize,
    want_optimizer: bool,
) -> Result<SolveReport> {
    let mut report = solve_definite_min(&a.neg(), b, d, k, want_optimizer)?;
    let n = a.dim();
    report.value = report.value.map(|v| -v);
    for term in &mut report.pairing {
        term.lambda = -term.lambda;
        term.index = n + 1 - term.index;
        term.role = match term.role {
            PairRole::Leading => PairRole::Trailing,
            _ => PairRole::Leading,
        };
    }
    report.lambdas = report.lambdas.iter().rev().map(|l| -l).collect();
    report.route = Route::DefiniteMax;
    Ok(report)
}

/// Compression of `A` onto the optimizer columns that carry nonzero weight.
#[derive(Debug, Clone)]
pub struct MinimizerCharacterization {
    pub kept: Vec<usize>,
    pub compressed: CMatrix,
    pub off_diagonal_max: f64,
    pub diagonal: Vec<f64>,
    /// `tr(Ω (X Q)ᴴ A (X Q))`, equal to the reported value.
    pub weighted_trace: f64,
    pub constraint_residual: f64,
}

pub fn characterize_minimizer(
    report: &SolveReport,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
) -> Result<MinimizerCharacterization> {
    let x = match (&report.x_opt, report.attained) {
        (Some(x), true) => x,
        _ => return Err(Error::MissingOptimizer),
    };
    let split = OmegaSplit::new(d)?;
    let xq = x * &split.q;
    let full = xq.adjoint() * a.matrix() * &xq;
    let weighted_trace = (0..split.omegas.len()).map(|i| split.omegas[i] * full[(i, i)].re).sum();
    let kept = split.nonzero_indices();
    let compressed = select_columns(&xq, &kept);
    let compressed = compressed.adjoint() * a.matrix() * &compressed;
    let m = kept.len();
    let mut off = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                off = off.max(compressed[(i, j)].norm());
            }
        }
    }
    let diagonal = (0..m).map(|i| compressed[(i, i)].re).collect();
    let k = x.ncols();
    let gram = x.adjoint() * b.matrix() * x;
    let constraint_residual = max_abs(&(gram - CMatrix::identity(k, k)));
    Ok(MinimizerCharacterization {
        kept,
        compressed,
        off_diagonal_max: off,
        diagonal,
        weighted_trace,
        constraint_residual,
    })
}

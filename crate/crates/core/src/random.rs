//! Seeded random matrices used by the oracle and the test suites.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spectral::{CMatrix, HermitianMatrix, C64};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian entry with unit variance.
pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(s * gaussian(rng), s * gaussian(rng))
}

pub fn real_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), 0.0))
}

pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// diagonal phases of `R` divided out.
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = complex_matrix(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
    }
    q
}

/// Matrix with orthonormal columns (first `k` columns of a Haar unitary).
pub fn stiefel(rng: &mut impl Rng, n: usize, k: usize) -> CMatrix {
    unitary(rng, n).columns(0, k).into_owned()
}

/// `(G + Gᴴ)/2` for complex Gaussian `G`.
pub fn hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrize(complex_matrix(rng, n, n))
}

/// `L Lᴴ + n·1e-2·I` for Gaussian `L`, which keeps the condition number modest.
pub fn spd(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let l = complex_matrix(rng, n, n);
    let shift = CMatrix::identity(n, n).scale(1e-2 * n as f64);
    HermitianMatrix::symmetrize(&l * l.adjoint() + shift)
}

/// Hermitian matrix with the prescribed spectrum, conjugated by a Haar unitary.
pub fn hermitian_with_spectrum(rng: &mut impl Rng, values: &[f64]) -> HermitianMatrix {
    let u = unitary(rng, values.len());
    HermitianMatrix::from_diagonal(values).congruence(&u.adjoint())
}

/// Invertible matrix `I + G/(2√n)` style perturbation with bounded condition.
pub fn well_conditioned(rng: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let g = complex_matrix(rng, n, n);
        let t = CMatrix::identity(n, n) + g.scale(0.5 / (n as f64).sqrt());
        let sv = t.clone().singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if smin > 0.0 && smax / smin < 20.0 {
            return t;
        }
    }
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

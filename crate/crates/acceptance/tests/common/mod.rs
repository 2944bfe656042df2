#![allow(dead_code)]

use rand::Rng;
use tracemin::indefinite::ConstraintSpec;
use tracemin::random::{self, TestRng};
use tracemin::spectral::{CMatrix, HermitianMatrix, C64};

/// Random definite instance: `B = L Lᴴ` for Gaussian `L`, Hermitian `A`,
/// and `D` with a spectrum of both signs whenever `k ≥ 2`.
pub struct DefiniteInstance {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub d: HermitianMatrix,
    pub k: usize,
}

pub fn definite_instance(seed: u64) -> DefiniteInstance {
    let mut rng = random::rng(seed);
    let n = rng.random_range(1..=6usize);
    let k = rng.random_range(1..=n.min(3));
    let l = random::complex_matrix(&mut rng, n, n);
    let b = HermitianMatrix::symmetrize(&l * l.adjoint());
    let a = random::hermitian(&mut rng, n);
    let mut omegas: Vec<f64> = (0..k).map(|_| random::uniform(&mut rng, -2.0, 2.0)).collect();
    if k >= 2 {
        omegas[0] = random::uniform(&mut rng, 0.1, 2.0);
        omegas[1] = random::uniform(&mut rng, -2.0, -0.1);
    }
    let d = random::hermitian_with_spectrum(&mut rng, &omegas);
    DefiniteInstance { a, b, d, k }
}

/// Pencil `A - λB` built as `T⁻ᴴ (Λ - λJ) T⁻¹` from a known canonical form.
pub struct ConstructedPencil {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub shift: f64,
    /// Finite eigenvalues of positive type, ascending.
    pub plus: Vec<f64>,
    /// Finite eigenvalues of negative type, descending.
    pub minus: Vec<f64>,
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    /// Number of 2×2 blocks that make the pencil non-diagonalizable.
    pub defective: usize,
}

impl ConstructedPencil {
    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn diagonalizable(&self) -> bool {
        self.defective == 0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.plus.iter().chain(&self.minus).copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub fn constructed_pencil(seed: u64) -> ConstructedPencil {
    let mut rng = random::rng(0xC0DE_0000 + seed);
    let n = rng.random_range(2..=6usize);
    let n_plus = rng.random_range(1..n);
    let rest = n - n_plus;
    let n_minus = rng.random_range(1..=rest);
    let n_zero = rest - n_minus;
    let defective = usize::from(rng.random_bool(0.25));
    let shift = random::uniform(&mut rng, -1.0, 1.0);

    let mut lam = CMatrix::zeros(n, n);
    let mut sig = CMatrix::zeros(n, n);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut pos = 0;
    if defective == 1 {
        let beta = random::uniform(&mut rng, 0.5, 2.0);
        lam[(0, 1)] = C64::new(shift, 0.0);
        lam[(1, 0)] = C64::new(shift, 0.0);
        lam[(1, 1)] = C64::new(beta, 0.0);
        sig[(0, 1)] = C64::new(1.0, 0.0);
        sig[(1, 0)] = C64::new(1.0, 0.0);
        plus.push(shift);
        minus.push(shift);
        pos = 2;
    }
    for _ in defective..n_plus {
        let l = shift + random::uniform(&mut rng, 0.2, 3.0);
        lam[(pos, pos)] = C64::new(l, 0.0);
        sig[(pos, pos)] = C64::new(1.0, 0.0);
        plus.push(l);
        pos += 1;
    }
    for _ in defective..n_minus {
        let l = shift - random::uniform(&mut rng, 0.2, 3.0);
        lam[(pos, pos)] = C64::new(-l, 0.0);
        sig[(pos, pos)] = C64::new(-1.0, 0.0);
        minus.push(l);
        pos += 1;
    }
    for _ in 0..n_zero {
        lam[(pos, pos)] = C64::new(random::uniform(&mut rng, 0.5, 2.0), 0.0);
        pos += 1;
    }
    assert_eq!(pos, n);
    let t = random::well_conditioned(&mut rng, n);
    let t_inv = t.try_inverse().expect("well-conditioned T");
    let a = HermitianMatrix::symmetrize(lam).congruence(&t_inv);
    let b = HermitianMatrix::symmetrize(sig).congruence(&t_inv);
    plus.sort_by(f64::total_cmp);
    minus.sort_by(|x, y| y.total_cmp(x));
    ConstructedPencil { a, b, shift, plus, minus, n_plus, n_minus, n_zero, defective }
}

/// Constraint cycling through the three kinds, sized to fit the inertia.
pub fn constraint_for(p: &ConstructedPencil, seed: u64, rng: &mut TestRng) -> ConstraintSpec {
    match seed % 3 {
        0 => ConstraintSpec::plus(rng.random_range(1..=p.n_plus)),
        1 => ConstraintSpec::minus(rng.random_range(1..=p.n_minus)),
        _ => ConstraintSpec::signature(rng.random_range(1..=p.n_plus), rng.random_range(1..=p.n_minus)).unwrap(),
    }
}

/// Block-diagonal `diag(D₊, D₋)` with both blocks positive semi-definite.
pub fn psd_weights(c: &ConstraintSpec, rng: &mut TestRng) -> HermitianMatrix {
    let mut block = |k: usize| {
        let w: Vec<f64> = (0..k).map(|_| random::uniform(rng, 0.0, 2.0)).collect();
        random::hermitian_with_spectrum(rng, &w)
    };
    let p = block(c.k_plus);
    let m = block(c.k_minus);
    tracemin::indefinite::block_diag(&p, &m)
}

/// Weights with one eigenvalue at or below `-0.1`.
pub fn negative_weights(k: usize, rng: &mut TestRng) -> HermitianMatrix {
    let mut w: Vec<f64> = (0..k).map(|_| random::uniform(rng, -1.0, 2.0)).collect();
    w[0] = random::uniform(rng, -2.0, -0.1);
    random::hermitian_with_spectrum(rng, &w)
}

//! Positive semi-definite Hermitian pencils `A - λB` with indefinite and
//! possibly singular `B`: a shift certificate, the real finite eigenvalues
//! split by type, B-normalized eigenvectors, and the count of defective
//! `2×2` blocks.
//!
//! The finite spectrum is computed by shifting to `A₀ = A - λ₀B ⪰ 0`,
//! eliminating the null space of `B` through a Schur complement, and reducing
//! what remains to a Hermitian eigenproblem `Fᴴ J F` where `C = F Fᴴ` is the
//! scaled complement and `J` the sign pattern of `B`.

use serde::{Deserialize, Serialize};

use crate::definite::check_square_pair;
use crate::error::{Error, Result};
use crate::report::PencilSummary;
use crate::spectral::{
    eig_herm, eigvals_herm, hstack, null_space, select_columns, CMatrix, HermitianMatrix, Inertia, C64,
    RANK_REL_TOL,
};

/// Relative width of the eigenvalue cluster at the shift that is examined
/// for defective blocks.
const CLUSTER_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsdPencilAnalysis {
    pub lambda0: f64,
    pub inertia_b: Inertia,
    /// Ascending.
    pub lambda_plus: Vec<f64>,
    /// Descending, so that `lambda_minus[0]` is the largest.
    pub lambda_minus: Vec<f64>,
    pub diagonalizable: bool,
    pub m0: usize,
    #[serde(skip)]
    pub eigvecs_plus: Option<CMatrix>,
    #[serde(skip)]
    pub eigvecs_minus: Option<CMatrix>,
}

impl PsdPencilAnalysis {
    pub fn rank(&self) -> usize {
        self.lambda_plus.len() + self.lambda_minus.len()
    }

    /// All finite eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lambda_minus.iter().rev().chain(&self.lambda_plus).copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn summary(&self) -> PencilSummary {
        PencilSummary {
            lambda0: self.lambda0,
            inertia_b: self.inertia_b,
            lambda_plus: self.lambda_plus.clone(),
            lambda_minus: self.lambda_minus.clone(),
            diagonalizable: self.diagonalizable,
            m0: self.m0,
        }
    }
}

/// Tolerance for the shift certificate, `1e-9·(1+‖A‖_max)`.
pub fn certificate_tol(a: &HermitianMatrix) -> f64 {
    1e-9 * (1.0 + a.max_abs())
}

/// Smallest eigenvalue of `A - λB`.
pub fn shifted_min_eig(a: &HermitianMatrix, b: &HermitianMatrix, lambda: f64) -> f64 {
    eigvals_herm(&a.add_scaled(-lambda, b))
        .ok()
        .and_then(|v| v.last().copied())
        .unwrap_or(f64::NEG_INFINITY)
}

fn golden_max(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = g(x1);
        }
        if hi - lo <= f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi].into_iter().max_by(|a, b| g(*a).total_cmp(&g(*b))).unwrap()
}

/// A shift `λ₀` with `A - λ₀B ⪰ 0` up to [`certificate_tol`], if one exists.
///
/// `g(λ) = λ_min(A - λB)` is concave, so a golden-section search finds its
/// maximum. When `g` is monotone on the search range (semi-definite `B`) the
/// returned point is the boundary of `{g ≥ 0}`.
pub fn find_lambda0(a: &HermitianMatrix, b: &HermitianMatrix) -> Option<f64> {
    if a.dim() != b.dim() {
        return None;
    }
    let tol = certificate_tol(a);
    let g = |l: f64| shifted_min_eig(a, b, l);
    if b.is_zero() {
        return (g(0.0) >= -tol).then_some(0.0);
    }
    let sv = b.matrix().clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin_plus = sv.iter().copied().filter(|&s| s > RANK_REL_TOL * smax).fold(f64::INFINITY, f64::min);
    let mut rho = 1.0 + a.dim() as f64 * a.max_abs() / smin_plus;

    let mut best;
    let mut at_edge;
    let mut expansions = 0;
    loop {
        best = golden_max(&g, -rho, rho, 200);
        at_edge = (best + rho).abs() < 1e-6 * rho || (rho - best).abs() < 1e-6 * rho;
        if !at_edge || g(best) >= 0.0 || expansions >= 60 {
            break;
        }
        rho *= 2.0;
        expansions += 1;
    }
    let g_best = g(best);
    if g_best < -tol {
        return None;
    }
    if at_edge && g_best >= 0.0 {
        let far = if best < 0.0 { rho } else { -rho };
        if g(far) >= 0.0 {
            return Some(best);
        }
        let (mut good, mut bad) = (best, far);
        for _ in 0..200 {
            let mid = 0.5 * (good + bad);
            if mid == good || mid == bad {
                break;
            }
            if g(mid) >= 0.0 {
                good = mid;
            } else {
                bad = mid;
            }
        }
        return Some(good);
    }
    Some(best)
}

/// Coordinates of the reduction at a fixed shift.
struct Reduction {
    n: usize,
    /// Range basis of `B` (`n × r`) and `|d|^{-1/2}` of its eigenvalues.
    vb: CMatrix,
    scale: Vec<f64>,
    /// Positive part of `A₀` on the null space of `B`.
    vn_pos: CMatrix,
    inv_e_pos: Vec<f64>,
    a12: CMatrix,
    inertia: Inertia,
}

impl Reduction {
    /// Maps vectors `ỹ` in the scaled range coordinates back to `ℂⁿ`.
    fn lift(&self, y: &CMatrix) -> CMatrix {
        let mut yb = y.clone();
        for (i, s) in self.scale.iter().enumerate() {
            yb.row_mut(i).scale_mut(*s);
        }
        let mut x = &self.vb * &yb;
        if self.vn_pos.ncols() > 0 {
            let mut z = self.a12.adjoint() * &yb;
            for (i, e) in self.inv_e_pos.iter().enumerate() {
                z.row_mut(i).scale_mut(-*e);
            }
            x += &self.vn_pos * z;
        }
        debug_assert_eq!(x.nrows(), self.n);
        x
    }
}

/// One eigenpair candidate: eigenvalue, B-norm sign, and vector in `ℂⁿ`.
struct Eigenpair {
    value: f64,
    sign: f64,
    vector: Option<CMatrix>,
}

struct Pass {
    reduction: Reduction,
    values: Vec<f64>,
    pairs: Vec<Eigenpair>,
    m0: usize,
}

fn diag_scale_rows_cols(m: &CMatrix, s: &[f64]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (s[i] * s[j]))
}

fn analyze_at(a: &HermitianMatrix, b: &HermitianMatrix, lambda0: f64) -> Result<Pass> {
    let n = a.dim();
    let eb = eig_herm(b)?;
    let dmax = eb.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let btol = RANK_REL_TOL * dmax;
    let idx_b: Vec<usize> = (0..n).filter(|&i| dmax > 0.0 && eb.values[i].abs() > btol).collect();
    let idx_n: Vec<usize> = (0..n).filter(|i| !idx_b.contains(i)).collect();
    let d_b: Vec<f64> = idx_b.iter().map(|&i| eb.values[i]).collect();
    let r = idx_b.len();
    let inertia = Inertia {
        n_plus: d_b.iter().filter(|&&v| v > 0.0).count(),
        n_zero: n - r,
        n_minus: d_b.iter().filter(|&&v| v < 0.0).count(),
    };
    let vb = eb.select(&idx_b);
    let vn = eb.select(&idx_n);

    let a0 = a.add_scaled(-lambda0, b);
    let a0_norm = eigvals_herm(&a0)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let a22 = a0.congruence(&vn);
    let e22 = eig_herm(&a22)?;
    let pos: Vec<usize> = (0..e22.len()).filter(|&i| e22.values[i] > RANK_REL_TOL * a0_norm).collect();
    let vn_pos = &vn * e22.select(&pos);
    let inv_e_pos: Vec<f64> = pos.iter().map(|&i| 1.0 / e22.values[i]).collect();
    let a12 = vb.adjoint() * a0.matrix() * &vn_pos;

    let mut schur = vb.adjoint() * a0.matrix() * &vb;
    if !pos.is_empty() {
        let mut scaled = a12.clone();
        for (j, e) in inv_e_pos.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*e);
        }
        schur -= scaled * a12.adjoint();
    }
    let scale: Vec<f64> = d_b.iter().map(|v| 1.0 / v.abs().sqrt()).collect();
    let sign: Vec<f64> = d_b.iter().map(|v| v.signum()).collect();
    let c = HermitianMatrix::symmetrize(diag_scale_rows_cols(&schur, &scale));
    let reduction = Reduction { n, vb, scale, vn_pos, inv_e_pos, a12, inertia };

    if r == 0 {
        return Ok(Pass { reduction, values: vec![], pairs: vec![], m0: 0 });
    }

    let ec = eig_herm(&c)?;
    let cmax = ec.values[0].max(0.0);
    let kept: Vec<usize> = (0..r).filter(|&i| cmax > 0.0 && ec.values[i] > RANK_REL_TOL * cmax).collect();
    let rest: Vec<usize> = (0..r).filter(|i| !kept.contains(i)).collect();
    let s = kept.len();
    let mut f = ec.select(&kept);
    for (j, &i) in kept.iter().enumerate() {
        f.column_mut(j).scale_mut(ec.values[i].sqrt());
    }
    let e0 = ec.select(&rest);
    let jf = CMatrix::from_fn(r, s, |i, j| f[(i, j)] * sign[i]);
    let h = HermitianMatrix::symmetrize(f.adjoint() * &jf);
    let eh = eig_herm(&h)?;

    let tau = CLUSTER_REL_TOL * cmax.max(f64::MIN_POSITIVE);
    let small: Vec<usize> = (0..s).filter(|&i| eh.values[i].abs() <= tau).collect();
    let large: Vec<usize> = (0..s).filter(|i| !small.contains(i)).collect();

    let mut values: Vec<f64> = eh.values.iter().map(|t| lambda0 + t).collect();
    values.extend(std::iter::repeat_n(lambda0, r - s));
    values.sort_by(f64::total_cmp);

    let mut pairs = Vec::with_capacity(r);
    for &i in &large {
        let theta = eh.values[i];
        let w = eh.column(i);
        let y = (&jf * w).scale(1.0 / theta.abs().sqrt());
        pairs.push(Eigenpair { value: lambda0 + theta, sign: theta.signum(), vector: Some(reduction.lift(&y)) });
    }

    // Cluster at the shift: null space of C together with the chain
    // directions F (FᴴF)⁻¹ w of the small eigenvalues of FᴴJF.
    let mut m0 = 0;
    if !rest.is_empty() || !small.is_empty() {
        let mut chain = CMatrix::zeros(r, small.len());
        if !small.is_empty() {
            let gram = f.adjoint() * &f;
            let w_small = eh.select(&small);
            let solved = gram.lu().solve(&w_small).ok_or(Error::NoConvergence)?;
            chain = &f * solved;
        }
        let z = orthonormal_basis(&hstack(&e0, &chain), 1e-8);
        let m = HermitianMatrix::symmetrize(z.adjoint() * c.matrix() * &z);
        let em = eigvals_herm(&m)?;
        m0 = em.iter().filter(|&&v| v > tau).count();
        let cluster_values: Vec<f64> = small
            .iter()
            .map(|&i| lambda0 + eh.values[i])
            .chain(std::iter::repeat_n(lambda0, r - s))
            .collect();
        let jz = CMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * sign[i]);
        let k = HermitianMatrix::symmetrize(z.adjoint() * &jz);
        let ek = eig_herm(&k)?;
        let mut order: Vec<usize> = (0..ek.len()).collect();
        // pair the cluster vectors with the cluster values by sign type
        order.sort_by(|&p, &q| ek.values[p].total_cmp(&ek.values[q]));
        let mut sorted_values = cluster_values.clone();
        sorted_values.sort_by(f64::total_cmp);
        for (slot, &p) in order.iter().enumerate() {
            let kappa = ek.values[p];
            let vector = (m0 == 0 && kappa.abs() > 1e-8).then(|| {
                let y = (&z * ek.column(p)).scale(1.0 / kappa.abs().sqrt());
                reduction.lift(&y)
            });
            let value = sorted_values.get(slot).copied().unwrap_or(lambda0);
            pairs.push(Eigenpair { value, sign: kappa.signum(), vector });
        }
    }
    Ok(Pass { reduction, values, pairs, m0 })
}

/// Orthonormal basis for the column span, dropping directions whose singular
/// value is below `rel_tol` times the largest.
pub fn orthonormal_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    if m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .collect();
    select_columns(&u, &idx)
}

fn build_analysis(lambda0: f64, pass: Pass) -> PsdPencilAnalysis {
    let inertia = pass.reduction.inertia;
    let values = &pass.values;
    let n_minus = inertia.n_minus;
    let mut lambda_minus: Vec<f64> = values[..n_minus].to_vec();
    lambda_minus.reverse();
    let lambda_plus = values[n_minus..].to_vec();
    let diagonalizable = pass.m0 == 0;

    let (mut eigvecs_plus, mut eigvecs_minus) = (None, None);
    if diagonalizable && pass.pairs.iter().all(|p| p.vector.is_some()) {
        let mut plus: Vec<&Eigenpair> = pass.pairs.iter().filter(|p| p.sign > 0.0).collect();
        let mut minus: Vec<&Eigenpair> = pass.pairs.iter().filter(|p| p.sign < 0.0).collect();
        if plus.len() == inertia.n_plus && minus.len() == n_minus {
            plus.sort_by(|p, q| p.value.total_cmp(&q.value));
            minus.sort_by(|p, q| q.value.total_cmp(&p.value));
            let n = pass.reduction.n;
            let gather = |list: &[&Eigenpair]| {
                let mut out = CMatrix::zeros(n, list.len());
                for (j, p) in list.iter().enumerate() {
                    out.set_column(j, &p.vector.as_ref().unwrap().column(0));
                }
                out
            };
            eigvecs_plus = Some(gather(&plus));
            eigvecs_minus = Some(gather(&minus));
        }
    }
    PsdPencilAnalysis {
        lambda0,
        inertia_b: inertia,
        lambda_plus,
        lambda_minus,
        diagonalizable,
        m0: pass.m0,
        eigvecs_plus,
        eigvecs_minus,
    }
}

/// Finite eigenvalues, their split by type, eigenvectors and `m₀`.
pub fn finite_eigenvalues(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<PsdPencilAnalysis> {
    check_square_pair(a, b)?;
    let mut lambda0 = find_lambda0(a, b).ok_or(Error::NotPsdPencil)?;
    let tol = certificate_tol(a);
    let mut analysis = build_analysis(lambda0, analyze_at(a, b, lambda0)?);
    // Re-center between the two groups: the eigen-reduction is most accurate
    // where A - λ₀B has the largest gap.
    for _ in 0..3 {
        let (Some(&lo), Some(&hi)) = (analysis.lambda_minus.first(), analysis.lambda_plus.first()) else {
            break;
        };
        let mid = 0.5 * (lo + hi);
        if (mid - lambda0).abs() <= 1e-14 * (1.0 + lambda0.abs()) || shifted_min_eig(a, b, mid) < -tol {
            break;
        }
        lambda0 = mid;
        analysis = build_analysis(lambda0, analyze_at(a, b, lambda0)?);
    }
    Ok(analysis)
}

/// Basis of `𝒩(A - μB)` with the common null space of `A` and `B` projected out.
pub fn eigenvectors_of(a: &HermitianMatrix, b: &HermitianMatrix, mu: f64) -> CMatrix {
    eigenvectors_with_tol(a, b, mu, RANK_REL_TOL)
}

fn null_space_tol(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| smax == 0.0 || sv[i] <= rel_tol * smax).collect();
    // rows of v_t beyond the returned singular values (m has fewer rows than columns)
    idx.extend(sv.len()..v_t.nrows());
    CMatrix::from_fn(n, idx.len(), |r, j| v_t[(idx[j], r)].conj())
}

fn eigenvectors_with_tol(a: &HermitianMatrix, b: &HermitianMatrix, mu: f64, rel_tol: f64) -> CMatrix {
    let n = a.dim();
    let shifted = a.add_scaled(-mu, b);
    let basis = null_space_tol(shifted.matrix(), rel_tol);
    let mut stacked = CMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(a.matrix());
    stacked.rows_mut(n, n).copy_from(b.matrix());
    let common = null_space(&stacked);
    let projected = if common.ncols() > 0 { &basis - &common * (common.adjoint() * &basis) } else { basis };
    let keep: Vec<usize> = (0..projected.ncols()).filter(|&j| projected.column(j).norm() > 1e-6).collect();
    orthonormal_basis(&select_columns(&projected, &keep), 1e-6)
}

/// Diagonalizability from the Gram matrix `VᴴBV` of all finite-eigenvalue
/// eigenvectors: `m₀ = (r - rank)/2`.
pub fn diagonalizability(a: &HermitianMatrix, b: &HermitianMatrix, analysis: &PsdPencilAnalysis) -> (bool, usize) {
    let values = analysis.eigenvalues();
    let r = values.len();
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut clusters: Vec<Vec<f64>> = vec![];
    for v in values {
        match clusters.last_mut() {
            Some(c) if (v - c[c.len() - 1]).abs() <= 1e-6 * scale => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    let n = a.dim();
    let mut all = CMatrix::zeros(n, 0);
    for c in &clusters {
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        all = hstack(&all, &eigenvectors_with_tol(a, b, mean, 1e-6));
    }
    let gram = HermitianMatrix::symmetrize(all.adjoint() * b.matrix() * &all);
    let bnorm = b.max_abs().max(f64::MIN_POSITIVE);
    let rank = eigvals_herm(&gram).map(|v| v.iter().filter(|x| x.abs() > 1e-6 * bnorm).count()).unwrap_or(0);
    let rank = rank.min(r);
    let m0 = (r - rank) / 2;
    (m0 == 0, m0)
}

/// `det(A - λB)`.
pub fn det_shifted(a: &HermitianMatrix, b: &HermitianMatrix, lambda: f64) -> C64 {
    a.add_scaled(-lambda, b).matrix().clone().determinant()
}

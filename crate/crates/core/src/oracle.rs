//! Independent numerical checks: parametrizations of the feasible sets,
//! projected descent on the objective, explicit escape paths for unbounded
//! instances, and the two-by-two coupled-weight counterexample.

use rayon::prelude::*;
use serde::Serialize;

use crate::definite::OmegaSplit;
use crate::error::{Error, Result};
use crate::random::{self, TestRng};
use crate::spectral::{
    eig_herm, max_abs, select_columns, sqrtm_psd, trace_objective, CMatrix, HermitianMatrix, C64, RANK_REL_TOL,
};
use crate::indefinite::ConstraintSpec;

/// `X = [[(I+WWᴴ)^{1/2}, W], [Wᴴ, (I+WᴴW)^{1/2}]] · diag(V₊, V₋)`.
#[derive(Debug, Clone)]
pub struct HyperbolicFactorization {
    pub w: CMatrix,
    pub v_plus: CMatrix,
    pub v_minus: CMatrix,
}

impl HyperbolicFactorization {
    pub fn identity(n_plus: usize, n_minus: usize) -> Self {
        HyperbolicFactorization {
            w: CMatrix::zeros(n_plus, n_minus),
            v_plus: CMatrix::identity(n_plus, n_plus),
            v_minus: CMatrix::identity(n_minus, n_minus),
        }
    }

    /// Gaussian `W` with entry scale `spread` and Haar unitaries.
    pub fn random(rng: &mut TestRng, n_plus: usize, n_minus: usize, spread: f64) -> Self {
        HyperbolicFactorization {
            w: random::complex_matrix(rng, n_plus, n_minus).scale(spread),
            v_plus: random::unitary(rng, n_plus),
            v_minus: random::unitary(rng, n_minus),
        }
    }
}

/// `diag(I_p, -I_q)` as a complex matrix.
pub fn signature_matrix(p: usize, q: usize) -> CMatrix {
    CMatrix::from_fn(p + q, p + q, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if i < p {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        }
    })
}

pub fn compose_hyperbolic(f: &HyperbolicFactorization) -> CMatrix {
    let (p, q) = (f.w.nrows(), f.w.ncols());
    let top = HermitianMatrix::symmetrize(CMatrix::identity(p, p) + &f.w * f.w.adjoint());
    let bottom = HermitianMatrix::symmetrize(CMatrix::identity(q, q) + f.w.adjoint() * &f.w);
    let top = sqrtm_psd(&top).expect("Hermitian eigensolver");
    let bottom = sqrtm_psd(&bottom).expect("Hermitian eigensolver");
    let mut x = CMatrix::zeros(p + q, p + q);
    x.view_mut((0, 0), (p, p)).copy_from(&(top * &f.v_plus));
    x.view_mut((0, p), (p, q)).copy_from(&(&f.w * &f.v_minus));
    x.view_mut((p, 0), (q, p)).copy_from(&(f.w.adjoint() * &f.v_plus));
    x.view_mut((p, p), (q, q)).copy_from(&(bottom * &f.v_minus));
    x
}

/// Inverse of [`compose_hyperbolic`] for `X` with `Xᴴ J X = J`,
/// `J = diag(I_p, -I_q)`. The diagonal blocks are split by polar
/// decomposition; `W` is read off the upper-right block.
pub fn decompose_hyperbolic(x: &CMatrix, p: usize, q: usize) -> Result<HyperbolicFactorization> {
    if x.nrows() != p + q || x.ncols() != p + q {
        return Err(Error::DimensionMismatch(format!("expected {0}x{0}, got {1}x{2}", p + q, x.nrows(), x.ncols())));
    }
    let polar = |blk: CMatrix| -> Result<CMatrix> {
        let gram = HermitianMatrix::symmetrize(&blk * blk.adjoint());
        let eig = eig_herm(&gram)?;
        if eig.values.iter().any(|&v| v < 0.5) {
            return Err(Error::DomainViolation("diagonal block is not a hyperbolic boost".into()));
        }
        // (blk blkᴴ)^{-1/2} blk
        let mut scaled = eig.vectors.clone();
        for (j, v) in eig.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(1.0 / v.sqrt());
        }
        Ok(scaled * eig.vectors.adjoint() * blk)
    };
    let v_plus = polar(x.view((0, 0), (p, p)).into_owned())?;
    let v_minus = polar(x.view((p, p), (q, q)).into_owned())?;
    let w = x.view((0, p), (p, q)).into_owned() * v_minus.adjoint();
    Ok(HyperbolicFactorization { w, v_plus, v_minus })
}

/// `x = M y + N z` where `Mᴴ B M = diag(I_{n₊}, -I_{n₋})` spans the range of
/// `B` and `N` is an orthonormal basis of its null space. The constraint acts
/// on `y` only.
#[derive(Debug, Clone)]
pub struct FeasibleParametrization {
    pub n_plus: usize,
    pub n_minus: usize,
    pub range: CMatrix,
    pub null: CMatrix,
    pub signs: Vec<f64>,
}

impl FeasibleParametrization {
    pub fn new(b: &HermitianMatrix) -> Result<Self> {
        let n = b.dim();
        let eig = eig_herm(b)?;
        let dmax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = RANK_REL_TOL * dmax;
        let plus: Vec<usize> = (0..n).filter(|&i| dmax > 0.0 && eig.values[i] > tol).collect();
        let minus: Vec<usize> = (0..n).filter(|&i| dmax > 0.0 && eig.values[i] < -tol).collect();
        let zero: Vec<usize> = (0..n).filter(|i| !plus.contains(i) && !minus.contains(i)).collect();
        let order: Vec<usize> = plus.iter().chain(&minus).copied().collect();
        let mut range = eig.select(&order);
        for (j, &i) in order.iter().enumerate() {
            range.column_mut(j).scale_mut(1.0 / eig.values[i].abs().sqrt());
        }
        let signs = plus.iter().map(|_| 1.0).chain(minus.iter().map(|_| -1.0)).collect();
        Ok(FeasibleParametrization {
            n_plus: plus.len(),
            n_minus: minus.len(),
            range,
            null: eig.select(&zero),
            signs,
        })
    }

    pub fn rank(&self) -> usize {
        self.n_plus + self.n_minus
    }

    pub fn to_x(&self, y: &CMatrix, z: &CMatrix) -> CMatrix {
        if self.null.ncols() == 0 {
            &self.range * y
        } else {
            &self.range * y + &self.null * z
        }
    }

    fn check(&self, c: &ConstraintSpec) -> Result<()> {
        if c.k_plus > self.n_plus || c.k_minus > self.n_minus {
            return Err(Error::InfeasibleConstraint(format!(
                "need {} positive and {} negative directions of B, have {} and {}",
                c.k_plus, c.k_minus, self.n_plus, self.n_minus
            )));
        }
        Ok(())
    }

    /// Random `(y, z)` with `yᴴ J y` equal to the constraint signature.
    fn sample(&self, c: &ConstraintSpec, rng: &mut TestRng, spread: f64) -> (CMatrix, CMatrix) {
        let h = HyperbolicFactorization::random(rng, self.n_plus, self.n_minus, spread);
        let full = compose_hyperbolic(&h);
        let cols: Vec<usize> = (0..c.k_plus).chain(self.n_plus..self.n_plus + c.k_minus).collect();
        let y = select_columns(&full, &cols);
        let z = random::complex_matrix(rng, self.null.ncols(), c.k());
        (y, z)
    }
}

/// `‖Xᴴ B X - J_k‖_max`.
pub fn constraint_residual(b: &HermitianMatrix, c: &ConstraintSpec, x: &CMatrix) -> f64 {
    max_abs(&(x.adjoint() * b.matrix() * x - c.matrix()))
}

pub fn feasible_sample(b: &HermitianMatrix, constraint: &ConstraintSpec, seed: u64) -> Result<CMatrix> {
    let param = FeasibleParametrization::new(b)?;
    param.check(constraint)?;
    let mut rng = random::rng(seed);
    for _ in 0..20 {
        let (y, z) = param.sample(constraint, &mut rng, 0.5);
        let x = param.to_x(&y, &z);
        if constraint_residual(b, constraint, &x) <= 1e-8 {
            return Ok(x);
        }
    }
    Err(Error::DegenerateDraw)
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_value: f64,
    pub best_x: CMatrix,
    pub iterations: usize,
    pub feasibility_residual: f64,
    pub unbounded_flag: bool,
}

/// Objective below which a run is declared divergent.
pub fn divergence_threshold(a: &HermitianMatrix, d: &HermitianMatrix) -> f64 {
    -1e6 * (1.0 + a.max_abs() * d.max_abs())
}

/// Gram–Schmidt in the indefinite inner product `⟨u, v⟩ = uᴴ J v`, asking
/// column `j` to have norm `target[j]`. Fails when a column lands on the
/// wrong side of the light cone.
fn j_orthonormalize(y: &CMatrix, jsig: &[f64], target: &[f64]) -> Option<CMatrix> {
    let (r, k) = y.shape();
    let jdot = |u: &CMatrix, i: usize, v: &CMatrix| -> C64 {
        (0..r).map(|t| u[(t, i)].conj() * v[(t, 0)] * jsig[t]).sum()
    };
    let mut q = CMatrix::zeros(r, k);
    for j in 0..k {
        let mut v: CMatrix = y.columns(j, 1).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let coef = jdot(&q, i, &v) * target[i];
                for t in 0..r {
                    let qi = q[(t, i)];
                    v[(t, 0)] -= coef * qi;
                }
            }
        }
        let nu = jdot(&v, 0, &v).re;
        let norm2 = v.norm_squared();
        if nu.signum() != target[j] || nu.abs() <= 1e-12 * norm2 || !nu.is_finite() {
            return None;
        }
        q.set_column(j, &v.column(0).scale(1.0 / nu.abs().sqrt()));
    }
    Some(q)
}

/// Solves `P S + S P = R` for Hermitian positive definite `P`.
fn sylvester_sym(p: &CMatrix, r: &CMatrix) -> Option<CMatrix> {
    let eig = eig_herm(&HermitianMatrix::symmetrize(p.clone())).ok()?;
    let u = &eig.vectors;
    let mut t = u.adjoint() * r * u;
    let k = t.nrows();
    for i in 0..k {
        for j in 0..k {
            let den = eig.values[i] + eig.values[j];
            if den <= 0.0 {
                return None;
            }
            t[(i, j)] /= den;
        }
    }
    Some(u * t * u.adjoint())
}

struct Problem<'a> {
    a: &'a CMatrix,
    d: &'a CMatrix,
    param: &'a FeasibleParametrization,
    target: Vec<f64>,
    threshold: f64,
}

struct Point {
    y: CMatrix,
    z: CMatrix,
    x: CMatrix,
    f: f64,
}

impl Problem<'_> {
    fn point(&self, y: CMatrix, z: CMatrix) -> Point {
        let x = self.param.to_x(&y, &z);
        let f = trace_objective(self.a, self.d, &x);
        Point { y, z, x, f }
    }

    /// Riemannian gradient in `y` (projected onto the tangent space of
    /// `{yᴴJy = C}`) and the free gradient in `z`.
    fn gradient(&self, p: &Point) -> Option<(CMatrix, CMatrix)> {
        let gx = (self.a * &p.x * self.d).scale(2.0);
        let gy = self.param.range.adjoint() * &gx;
        let gz = self.param.null.adjoint() * &gx;
        let jsig = &self.param.signs;
        let jy = CMatrix::from_fn(p.y.nrows(), p.y.ncols(), |i, j| p.y[(i, j)] * jsig[i]);
        let rhs = jy.adjoint() * &gy;
        let rhs = &rhs + rhs.adjoint();
        let s = sylvester_sym(&(p.y.adjoint() * &p.y), &rhs)?;
        Some((gy - jy * s, gz))
    }

    fn retract(&self, y: &CMatrix) -> Option<CMatrix> {
        j_orthonormalize(y, &self.param.signs, &self.target)
    }

    fn descend(&self, start: Point, iters: usize) -> (Point, usize, bool) {
        let mut cur = start;
        let Some(mut grad) = self.gradient(&cur) else { return (cur, 0, false) };
        let mut step = 1.0 / (1.0 + grad.0.norm() + grad.1.norm());
        let mut used = 0;
        for it in 0..iters {
            used = it + 1;
            let g2 = grad.0.norm_squared() + grad.1.norm_squared();
            if !g2.is_finite() || g2.sqrt() <= 1e-13 * (1.0 + cur.f.abs()) {
                break;
            }
            let mut t = step;
            let mut accepted = None;
            for _ in 0..=30 {
                if let Some(y) = self.retract(&(&cur.y - grad.0.scale(t))) {
                    let cand = self.point(y, &cur.z - grad.1.scale(t));
                    if cand.f.is_finite() && cand.f <= cur.f - 1e-4 * t * g2 {
                        accepted = Some(cand);
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some(next) = accepted else { break };
            if next.f < self.threshold {
                return (next, used, true);
            }
            let Some(next_grad) = self.gradient(&next) else {
                cur = next;
                break;
            };
            // Barzilai–Borwein step from the coordinate differences.
            let sy = &next.y - &cur.y;
            let sz = &next.z - &cur.z;
            let dy = &next_grad.0 - &grad.0;
            let dz = &next_grad.1 - &grad.1;
            let ss = sy.norm_squared() + sz.norm_squared();
            let sd = (sy.adjoint() * &dy).trace().re + (sz.adjoint() * &dz).trace().re;
            step = if sd.abs() > 0.0 { (ss / sd).abs() } else { 2.0 * t };
            step = step.clamp(1e-14, 1e14);
            let stalled = (cur.f - next.f).abs() <= 1e-16 * (1.0 + cur.f.abs());
            cur = next;
            grad = next_grad;
            if stalled {
                break;
            }
        }
        (cur, used, false)
    }
}

fn restart_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Best feasible point found by projected descent from `restarts` random
/// starting points. Restarts run in parallel; the merge is a deterministic
/// minimum over restart order.
pub fn local_search(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    constraint: &ConstraintSpec,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<OracleResult> {
    if a.dim() != b.dim() || d.dim() != constraint.k() {
        return Err(Error::DimensionMismatch("oracle inputs".into()));
    }
    let param = FeasibleParametrization::new(b)?;
    param.check(constraint)?;
    let problem = Problem {
        a: a.matrix(),
        d: d.matrix(),
        param: &param,
        target: constraint.signs(),
        threshold: divergence_threshold(a, d),
    };
    let runs: Vec<(Point, usize, bool)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = random::rng(restart_seed(seed, i));
            let (y, z) = param.sample(constraint, &mut rng, 0.5);
            let start = problem.point(y, z);
            problem.descend(start, iters)
        })
        .collect();
    let iterations = runs.iter().map(|r| r.1).sum();
    let unbounded_flag = runs.iter().any(|r| r.2);
    let best = runs
        .into_iter()
        .filter(|r| r.0.f.is_finite())
        .min_by(|p, q| q.2.cmp(&p.2).then(p.0.f.total_cmp(&q.0.f)))
        .ok_or(Error::NoConvergence)?
        .0;
    Ok(OracleResult {
        best_value: best.f,
        feasibility_residual: constraint_residual(b, constraint, &best.x),
        best_x: best.x,
        iterations,
        unbounded_flag,
    })
}

/// Feasible point with objective below `target` when some weight is negative
/// and the constraint has only one sign. Moves along a hyperbolic rotation
/// between the column carrying the negative weight and an unused direction
/// of the opposite type.
pub fn escape_witness(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    constraint: &ConstraintSpec,
    target: f64,
    seed: u64,
) -> Result<CMatrix> {
    let split = OmegaSplit::new(d)?;
    let q_idx = split.omegas.len() - 1;
    if split.omegas[q_idx] >= -split.tol {
        return Err(Error::Unsupported("all weights are nonnegative; no escape direction".into()));
    }
    let k = constraint.k();
    let (extended, base_cols, spare) = if constraint.k_minus == 0 {
        (ConstraintSpec::signature(k, 1)?, (0..k).collect::<Vec<_>>(), k)
    } else if constraint.k_plus == 0 {
        (ConstraintSpec::signature(1, k)?, (1..=k).collect::<Vec<_>>(), 0)
    } else {
        return Err(Error::Unsupported("escape path for mixed signature constraints".into()));
    };
    let sample = feasible_sample(b, &extended, seed)?;
    let x0 = select_columns(&sample, &base_cols);
    let mut v = sample.columns(spare, 1).into_owned();
    let q = split.q.columns(q_idx, 1).into_owned();
    let xq = &x0 * &q;
    let coupling = (xq.adjoint() * a.matrix() * &v)[(0, 0)];
    if coupling.norm() > 0.0 {
        v *= coupling.conj() / coupling.norm();
    }
    let xqq = &xq * q.adjoint();
    let vq = &v * q.adjoint();
    let mut sigma = 1.0f64;
    for _ in 0..200 {
        let c = (1.0 + sigma * sigma).sqrt();
        let x = &x0 + xqq.scale(c - 1.0) + vq.scale(sigma);
        if trace_objective(a.matrix(), d.matrix(), &x) < target {
            return Ok(x);
        }
        sigma *= 2.0;
        if !sigma.is_finite() {
            break;
        }
    }
    Err(Error::BudgetExceeded { best: f64::NEG_INFINITY, target })
}

/// Parameters of the coupled-weight example: `A = diag(1, μ)`,
/// `B = diag(1, -1)`, `Ω = diag(1, δ)` with `0 < δ < 1/μ < 1 < μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleParams {
    pub mu: f64,
    pub delta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub eta: f64,
}

impl CounterexampleParams {
    pub fn new(mu: f64, delta: f64) -> Result<Self> {
        if !(mu.is_finite() && delta.is_finite() && 0.0 < delta && delta < 1.0 / mu && 1.0 < mu) {
            return Err(Error::DomainViolation(format!(
                "need 0 < delta < 1/mu < 1 < mu, got mu = {mu}, delta = {delta}"
            )));
        }
        let gamma = (1.0 - delta) / (1.0 + delta);
        let nu = (1.0 - mu) / (1.0 + mu);
        let eta = ((1.0 - gamma * gamma) / (1.0 - nu * nu)).sqrt();
        Ok(CounterexampleParams { mu, delta, gamma, nu, eta })
    }

    /// `(A, B, D)` for the rotation angle with sine `sigma`.
    pub fn matrices(&self, sigma: f64) -> (HermitianMatrix, HermitianMatrix, HermitianMatrix) {
        let c = (1.0 - sigma * sigma).sqrt();
        let q = CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-sigma, 0.0), C64::new(sigma, 0.0), C64::new(c, 0.0)]);
        let omega = HermitianMatrix::from_diagonal(&[1.0, self.delta]);
        (
            HermitianMatrix::from_diagonal(&[1.0, self.mu]),
            HermitianMatrix::from_diagonal(&[1.0, -1.0]),
            omega.congruence(&q),
        )
    }
}

/// The feasible family `[[√(1+τ²), τ], [τ, √(1+τ²)]]`.
pub fn counterexample_y(tau: f64) -> CMatrix {
    let c = C64::new((1.0 + tau * tau).sqrt(), 0.0);
    let t = C64::new(tau, 0.0);
    CMatrix::from_row_slice(2, 2, &[c, t, t, c])
}

pub fn counterexample_f(p: &CounterexampleParams, sigma: f64, tau: f64) -> Result<f64> {
    if !(sigma > -1.0 && sigma < 1.0 && tau >= 0.0 && tau.is_finite()) {
        return Err(Error::DomainViolation(format!("need sigma in (-1, 1) and tau >= 0, got ({sigma}, {tau})")));
    }
    let (g, nu) = (p.gamma, p.nu);
    let bracket = tau * tau - g * nu * sigma * sigma
        - 2.0 * g * tau * sigma * (1.0 - sigma * sigma).sqrt() * (1.0 + tau * tau).sqrt();
    Ok(1.0 + p.delta * p.mu + (1.0 + p.delta) * (1.0 + p.mu) * bracket)
}

/// `tr(D Yᴴ A Y)` evaluated with explicit matrices.
pub fn counterexample_direct(p: &CounterexampleParams, sigma: f64, tau: f64) -> f64 {
    let (a, _, d) = p.matrices(sigma);
    trace_objective(a.matrix(), d.matrix(), &counterexample_y(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoints {
    pub tau_star: f64,
    pub sigma_star_minus: f64,
    pub sigma_star_plus: f64,
}

/// The two candidate stationary points from the closed-form roots.
pub fn counterexample_stationary(p: &CounterexampleParams) -> StationaryPoints {
    let (g, nu) = (p.gamma, p.nu);
    let tau2 = 0.5 * (((1.0 - nu * nu) / (1.0 - g * g)).sqrt() - 1.0);
    let sigma2 = 0.5 * ((nu / g) * ((1.0 - g * g) / (1.0 - nu * nu)).sqrt() + 1.0);
    let s = sigma2.sqrt();
    StationaryPoints { tau_star: tau2.sqrt(), sigma_star_minus: -s, sigma_star_plus: s }
}

/// Central-difference gradient `(∂f/∂σ, ∂f/∂τ)`.
pub fn counterexample_gradient(p: &CounterexampleParams, sigma: f64, tau: f64, h: f64) -> Result<(f64, f64)> {
    let ds = (counterexample_f(p, sigma + h, tau)? - counterexample_f(p, sigma - h, tau)?) / (2.0 * h);
    let dt = (counterexample_f(p, sigma, tau + h)? - counterexample_f(p, sigma, tau - h)?) / (2.0 * h);
    Ok((ds, dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleGap {
    pub tau_star: f64,
    /// Root at which the gradient vanishes.
    pub sigma_star: f64,
    pub f_at_stationary: f64,
    /// Objective at the other root, where the gradient does not vanish.
    pub f_at_other_root: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Objective at the genuine stationary point against `min(1+δμ, μ+δ)`.
pub fn counterexample_gap(p: &CounterexampleParams) -> Result<CounterexampleGap> {
    let st = counterexample_stationary(p);
    let grad_norm = |s: f64| {
        counterexample_gradient(p, s, st.tau_star, 1e-6).map(|(a, b)| a.hypot(b)).unwrap_or(f64::INFINITY)
    };
    let (sigma_star, other) = if grad_norm(st.sigma_star_plus) <= grad_norm(st.sigma_star_minus) {
        (st.sigma_star_plus, st.sigma_star_minus)
    } else {
        (st.sigma_star_minus, st.sigma_star_plus)
    };
    let f_at_stationary = counterexample_f(p, sigma_star, st.tau_star)?;
    let f_at_other_root = counterexample_f(p, other, st.tau_star)?;
    let bound = (1.0 + p.delta * p.mu).min(p.mu + p.delta);
    Ok(CounterexampleGap {
        tau_star: st.tau_star,
        sigma_star,
        f_at_stationary,
        f_at_other_root,
        bound,
        margin: bound - f_at_stationary,
    })
}

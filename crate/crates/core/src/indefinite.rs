//! Problem dispatch and the closed forms for genuinely indefinite `B`.

use serde::{Deserialize, Serialize};

use crate::definite::{check_k, check_square_pair, solve_definite_max, solve_definite_min, OmegaSplit};
use crate::error::{Error, Result};
use crate::oracle;
use crate::pencil::{finite_eigenvalues, PsdPencilAnalysis};
use crate::report::{PairRole, PairingTerm, Route, SolveReport};
use crate::spectral::{
    default_inertia_tol, eigvals_herm, hstack, inertia, max_abs, trace_objective, CMatrix, HermitianMatrix, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    PlusIdentity,
    MinusIdentity,
    Signature,
}

/// `Xᴴ B X = diag(I_{k₊}, -I_{k₋})`; the identity forms have one block empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub k_plus: usize,
    pub k_minus: usize,
}

impl ConstraintSpec {
    pub fn plus(k: usize) -> Self {
        ConstraintSpec { kind: ConstraintKind::PlusIdentity, k_plus: k, k_minus: 0 }
    }

    pub fn minus(k: usize) -> Self {
        ConstraintSpec { kind: ConstraintKind::MinusIdentity, k_plus: 0, k_minus: k }
    }

    pub fn signature(k_plus: usize, k_minus: usize) -> Result<Self> {
        if k_plus + k_minus == 0 {
            return Err(Error::DimensionMismatch("k must be at least 1".into()));
        }
        Ok(ConstraintSpec { kind: ConstraintKind::Signature, k_plus, k_minus })
    }

    pub fn k(&self) -> usize {
        self.k_plus + self.k_minus
    }

    pub fn signs(&self) -> Vec<f64> {
        std::iter::repeat_n(1.0, self.k_plus).chain(std::iter::repeat_n(-1.0, self.k_minus)).collect()
    }

    pub fn matrix(&self) -> CMatrix {
        let s = self.signs();
        CMatrix::from_fn(s.len(), s.len(), |i, j| C64::new(if i == j { s[i] } else { 0.0 }, 0.0))
    }

    /// `tr(D J_k)`: the change of the objective per unit shift `A → A + sB`.
    pub fn signed_trace(&self, d: &HermitianMatrix) -> f64 {
        d.diagonal().iter().zip(self.signs()).map(|(x, s)| x * s).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Min,
    Max,
}

/// Whether `D ⪰ 0` up to `1e-10·(1+‖D‖_max)`.
pub fn check_finiteness(d: &HermitianMatrix) -> bool {
    let min = eigvals_herm(d).ok().and_then(|v| v.last().copied()).unwrap_or(0.0);
    min >= -1e-10 * (1.0 + d.max_abs())
}

fn is_degenerate(a: &HermitianMatrix, b: &HermitianMatrix, lambda0: f64) -> bool {
    let shifted = a.add_scaled(-lambda0, b);
    shifted.max_abs() <= 1e-10 * (a.max_abs() + lambda0.abs() * b.max_abs()) || a.is_zero()
}

fn degenerate_report(
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    constraint: &ConstraintSpec,
    analysis: &PsdPencilAnalysis,
    want_optimizer: bool,
) -> Result<SolveReport> {
    // A = λ₀B makes the objective the constant λ₀·tr(D J_k).
    let lambda0 = if analysis.lambda0.abs() < 1e-12 { 0.0 } else { analysis.lambda0 };
    let x_opt = if want_optimizer { Some(oracle::feasible_sample(b, constraint, 0)?) } else { None };
    Ok(SolveReport {
        finite: true,
        value: Some(lambda0 * constraint.signed_trace(d)),
        attained: true,
        x_opt,
        pairing: vec![],
        route: Route::Degenerate,
        lambdas: vec![],
        pencil: Some(analysis.summary()),
        warnings: vec!["degenerate_A".into()],
    })
}

fn require_indefinite(analysis: &PsdPencilAnalysis) -> Result<()> {
    let i = analysis.inertia_b;
    if i.n_plus == 0 || i.n_minus == 0 {
        return Err(Error::Unsupported("B is not genuinely indefinite".into()));
    }
    Ok(())
}

fn infinite_report(route: Route, analysis: &PsdPencilAnalysis) -> SolveReport {
    SolveReport {
        finite: false,
        value: None,
        attained: false,
        x_opt: None,
        pairing: vec![],
        route,
        lambdas: vec![],
        pencil: Some(analysis.summary()),
        warnings: vec![],
    }
}

/// One block of the optimizer: the first `k` eigenvectors of one type,
/// rotated by the weight eigenvectors.
fn block_optimizer(vectors: &Option<CMatrix>, split: &OmegaSplit) -> Option<CMatrix> {
    let k = split.omegas.len();
    vectors.as_ref().map(|v| v.columns(0, k) * split.q.adjoint())
}

fn one_sided(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    k: usize,
    want_optimizer: bool,
    plus: bool,
) -> Result<SolveReport> {
    check_square_pair(a, b)?;
    let analysis = finite_eigenvalues(a, b)?;
    require_indefinite(&analysis)?;
    let available = if plus { analysis.inertia_b.n_plus } else { analysis.inertia_b.n_minus };
    check_k(d, k, available)?;
    let constraint = if plus { ConstraintSpec::plus(k) } else { ConstraintSpec::minus(k) };
    let route = if plus { Route::IndefinitePlus } else { Route::IndefiniteMinus };
    if is_degenerate(a, b, analysis.lambda0) {
        let mut r = degenerate_report(b, d, &constraint, &analysis, want_optimizer)?;
        r.route = route;
        return Ok(r);
    }
    if !check_finiteness(d) {
        return Ok(infinite_report(route, &analysis));
    }
    let split = OmegaSplit::new(d)?;
    let (lambdas, sign, role) = if plus {
        (&analysis.lambda_plus, 1.0, PairRole::Plus)
    } else {
        (&analysis.lambda_minus, -1.0, PairRole::Minus)
    };
    let pairing: Vec<PairingTerm> = (0..k)
        .map(|i| PairingTerm { omega: split.omegas[i], lambda: lambdas[i], sign, index: i + 1, role })
        .collect();
    let value = pairing.iter().map(PairingTerm::product).sum();
    let attained = analysis.diagonalizable;
    let vectors = if plus { &analysis.eigvecs_plus } else { &analysis.eigvecs_minus };
    let x_opt = if attained && want_optimizer { block_optimizer(vectors, &split) } else { None };
    Ok(SolveReport {
        finite: true,
        value: Some(value),
        attained,
        x_opt,
        pairing,
        route,
        lambdas: vec![],
        pencil: Some(analysis.summary()),
        warnings: vec![],
    })
}

/// Infimum over `Xᴴ B X = I_k`: `Σ ωᵢ λᵢ⁺` when `D ⪰ 0`, otherwise unbounded.
pub fn solve_indefinite_plus(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    k: usize,
    want_optimizer: bool,
) -> Result<SolveReport> {
    one_sided(a, b, d, k, want_optimizer, true)
}

/// Infimum over `Xᴴ B X = -I_k`: `-Σ ωᵢ λᵢ⁻` when `D ⪰ 0`, otherwise unbounded.
pub fn solve_indefinite_minus(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    k: usize,
    want_optimizer: bool,
) -> Result<SolveReport> {
    one_sided(a, b, d, k, want_optimizer, false)
}

/// Largest entry coupling the first `k_plus` indices with the rest.
pub fn block_coupling(d: &HermitianMatrix, k_plus: usize) -> f64 {
    let k = d.dim();
    let m = d.matrix();
    let mut c = 0.0f64;
    for i in 0..k_plus.min(k) {
        for j in k_plus..k {
            c = c.max(m[(i, j)].norm());
        }
    }
    c
}

/// Splits a full weight matrix into its diagonal blocks, rejecting coupling.
pub fn split_signature_weights(d: &HermitianMatrix, k_plus: usize) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let coupling = block_coupling(d, k_plus);
    if coupling > 1e-10 * d.max_abs() {
        return Err(Error::BlockStructureViolated { coupling });
    }
    let k = d.dim();
    let plus: Vec<usize> = (0..k_plus).collect();
    let minus: Vec<usize> = (k_plus..k).collect();
    Ok((d.principal(&plus), d.principal(&minus)))
}

/// Infimum over `Xᴴ B X = J_k` for block-diagonal weights `diag(D₊, D₋)`.
pub fn solve_signature(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d_plus: &HermitianMatrix,
    d_minus: &HermitianMatrix,
    k_plus: usize,
    k_minus: usize,
    want_optimizer: bool,
) -> Result<SolveReport> {
    if k_minus == 0 {
        return solve_indefinite_plus(a, b, d_plus, k_plus, want_optimizer);
    }
    if k_plus == 0 {
        return solve_indefinite_minus(a, b, d_minus, k_minus, want_optimizer);
    }
    check_square_pair(a, b)?;
    let analysis = finite_eigenvalues(a, b)?;
    require_indefinite(&analysis)?;
    check_k(d_plus, k_plus, analysis.inertia_b.n_plus)?;
    check_k(d_minus, k_minus, analysis.inertia_b.n_minus)?;
    let constraint = ConstraintSpec::signature(k_plus, k_minus)?;
    if is_degenerate(a, b, analysis.lambda0) {
        let d = block_diag(d_plus, d_minus);
        let mut r = degenerate_report(b, &d, &constraint, &analysis, want_optimizer)?;
        r.route = Route::Signature;
        return Ok(r);
    }
    if !check_finiteness(d_plus) || !check_finiteness(d_minus) {
        return Err(Error::Unsupported(
            "signature constraint with an indefinite weight block has no closed form".into(),
        ));
    }
    let sp = OmegaSplit::new(d_plus)?;
    let sm = OmegaSplit::new(d_minus)?;
    let mut pairing: Vec<PairingTerm> = (0..k_plus)
        .map(|i| PairingTerm {
            omega: sp.omegas[i],
            lambda: analysis.lambda_plus[i],
            sign: 1.0,
            index: i + 1,
            role: PairRole::Plus,
        })
        .collect();
    pairing.extend((0..k_minus).map(|i| PairingTerm {
        omega: sm.omegas[i],
        lambda: analysis.lambda_minus[i],
        sign: -1.0,
        index: i + 1,
        role: PairRole::Minus,
    }));
    let value = pairing.iter().map(PairingTerm::product).sum();
    let attained = analysis.diagonalizable;
    let x_opt = if attained && want_optimizer {
        match (block_optimizer(&analysis.eigvecs_plus, &sp), block_optimizer(&analysis.eigvecs_minus, &sm)) {
            (Some(xp), Some(xm)) => Some(hstack(&xp, &xm)),
            _ => None,
        }
    } else {
        None
    };
    Ok(SolveReport {
        finite: true,
        value: Some(value),
        attained,
        x_opt,
        pairing,
        route: Route::Signature,
        lambdas: vec![],
        pencil: Some(analysis.summary()),
        warnings: vec![],
    })
}

pub fn block_diag(p: &HermitianMatrix, m: &HermitianMatrix) -> HermitianMatrix {
    let (kp, km) = (p.dim(), m.dim());
    let mut out = CMatrix::zeros(kp + km, kp + km);
    out.view_mut((0, 0), (kp, kp)).copy_from(p.matrix());
    out.view_mut((kp, kp), (km, km)).copy_from(m.matrix());
    HermitianMatrix::symmetrize(out)
}

/// Routes a problem to the closed form that covers it.
pub fn solve(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    constraint: &ConstraintSpec,
    sense: Sense,
    want_optimizer: bool,
) -> Result<SolveReport> {
    check_square_pair(a, b)?;
    let k = constraint.k();
    if d.dim() != k || k == 0 {
        return Err(Error::DimensionMismatch(format!("D is {}x{} but k = {k}", d.dim(), d.dim())));
    }
    if b.is_zero() {
        return Err(Error::InfeasibleConstraint("B = 0 admits no X with XᴴBX nonsingular".into()));
    }
    let ib = inertia(b, default_inertia_tol(b))?;
    let n = b.dim();
    let definite = |bb: &HermitianMatrix, negated: bool| -> Result<SolveReport> {
        let mut r = match sense {
            Sense::Min => solve_definite_min(a, bb, d, k, want_optimizer)?,
            Sense::Max => solve_definite_max(a, bb, d, k, want_optimizer)?,
        };
        if negated {
            r.route = match sense {
                Sense::Min => Route::DefiniteMinNegatedB,
                Sense::Max => Route::DefiniteMaxNegatedB,
            };
        }
        Ok(r)
    };
    if ib.n_plus == n {
        if constraint.k_minus > 0 {
            return Err(Error::InfeasibleConstraint("B is positive definite, so XᴴBX cannot have negative eigenvalues".into()));
        }
        return definite(b, false);
    }
    if ib.n_minus == n {
        if constraint.k_plus > 0 {
            return Err(Error::InfeasibleConstraint("B is negative definite, so XᴴBX cannot have positive eigenvalues".into()));
        }
        return definite(&b.neg(), true);
    }
    if ib.n_plus == 0 || ib.n_minus == 0 {
        if constraint.k_plus > ib.n_plus || constraint.k_minus > ib.n_minus {
            return Err(Error::KTooLarge {
                k,
                available: if constraint.k_plus > 0 { ib.n_plus } else { ib.n_minus },
            });
        }
        return Err(Error::Unsupported("B is semi-definite and singular".into()));
    }
    if sense == Sense::Max {
        return Err(Error::UnsupportedSense("maximization with indefinite B has no closed form here".into()));
    }
    match constraint.kind {
        ConstraintKind::PlusIdentity => solve_indefinite_plus(a, b, d, k, want_optimizer),
        ConstraintKind::MinusIdentity => solve_indefinite_minus(a, b, d, k, want_optimizer),
        ConstraintKind::Signature => {
            let (dp, dm) = split_signature_weights(d, constraint.k_plus)?;
            solve_signature(a, b, &dp, &dm, constraint.k_plus, constraint.k_minus, want_optimizer)
        }
    }
}

/// A feasible point within `eps` of the infimum, or below the divergence
/// threshold when the infimum is `-∞`.
#[derive(Debug, Clone)]
pub struct Suboptimal {
    pub x: CMatrix,
    pub objective: f64,
    pub target: f64,
    pub residual: f64,
}

pub fn epsilon_suboptimal(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    d: &HermitianMatrix,
    constraint: &ConstraintSpec,
    eps: f64,
    seed: u64,
) -> Result<Suboptimal> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::DomainViolation(format!("eps must be positive, got {eps}")));
    }
    let report = solve(a, b, d, constraint, Sense::Min, true)?;
    let finish = |x: CMatrix, target: f64| {
        let objective = trace_objective(a.matrix(), d.matrix(), &x);
        let residual = max_abs(&(x.adjoint() * b.matrix() * &x - constraint.matrix()));
        Suboptimal { x, objective, target, residual }
    };
    let Some(value) = report.value else {
        let target = oracle::divergence_threshold(a, d);
        let x = oracle::escape_witness(a, b, d, constraint, target, seed)?;
        return Ok(finish(x, target));
    };
    let target = value + eps;
    if let Some(x) = report.x_opt {
        return Ok(finish(x, target));
    }
    let mut best = f64::INFINITY;
    for round in 0..4u64 {
        let found = oracle::local_search(a, b, d, constraint, 8, 4000, seed.wrapping_add(round))?;
        if found.best_value <= target && found.feasibility_residual <= 1e-8 {
            return Ok(finish(found.best_x, target));
        }
        best = best.min(found.best_value);
    }
    Err(Error::BudgetExceeded { best, target })
}

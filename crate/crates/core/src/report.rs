use serde::{Deserialize, Serialize};

use crate::spectral::{CMatrix, Inertia};

/// Which closed form produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    DefiniteMin,
    DefiniteMax,
    DefiniteMinNegatedB,
    DefiniteMaxNegatedB,
    IndefinitePlus,
    IndefiniteMinus,
    Signature,
    Degenerate,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::DefiniteMin => "definite_min",
            Route::DefiniteMax => "definite_max",
            Route::DefiniteMinNegatedB => "definite_min_negated_b",
            Route::DefiniteMaxNegatedB => "definite_max_negated_b",
            Route::IndefinitePlus => "indefinite_plus",
            Route::IndefiniteMinus => "indefinite_minus",
            Route::Signature => "signature",
            Route::Degenerate => "degenerate",
        }
    }
}

/// Index role of the pencil eigenvalue in a pairing term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRole {
    /// One of the smallest eigenvalues (paired with nonnegative weights).
    Leading,
    /// One of the largest eigenvalues (paired with negative weights).
    Trailing,
    Plus,
    Minus,
}

/// One product `sign · omega · lambda` of the optimal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingTerm {
    pub omega: f64,
    pub lambda: f64,
    pub sign: f64,
    /// 1-based position of `lambda` in its ordered list.
    pub index: usize,
    pub role: PairRole,
}

impl PairingTerm {
    pub fn product(&self) -> f64 {
        self.sign * self.omega * self.lambda
    }
}

/// Pencil facts carried along for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilSummary {
    pub lambda0: f64,
    pub inertia_b: Inertia,
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    pub diagonalizable: bool,
    pub m0: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub finite: bool,
    pub value: Option<f64>,
    pub attained: bool,
    pub x_opt: Option<CMatrix>,
    pub pairing: Vec<PairingTerm>,
    pub route: Route,
    /// Ascending eigenvalues of the pencil on the definite routes.
    pub lambdas: Vec<f64>,
    pub pencil: Option<PencilSummary>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn pairing_sum(&self) -> f64 {
        self.pairing.iter().map(PairingTerm::product).sum()
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the solvers, the pencil analysis and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("pencil A - lambda B is not positive semi-definite")]
    NotPsdPencil,

    #[error("k = {k} exceeds the available {available} columns of the matching sign")]
    KTooLarge { k: usize, available: usize },

    #[error("constraint is infeasible: {0}")]
    InfeasibleConstraint(String),

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("unsupported optimization sense: {0}")]
    UnsupportedSense(String),

    #[error(
        "D couples the k+ and k- column groups (max coupling {coupling:e}); with D not \
         block-diagonal like J_k the infimum has no eigenvalue-product formula \
         (see the mu/delta counterexample, `tracemin counterexample`)"
    )]
    BlockStructureViolated { coupling: f64 },

    #[error("report carries no optimizer")]
    MissingOptimizer,

    #[error("search budget exhausted: best {best:e}, target {target:e}")]
    BudgetExceeded { best: f64, target: f64 },

    #[error("parameter out of domain: {0}")]
    DomainViolation(String),

    #[error("could not draw a well-conditioned feasible point")]
    DegenerateDraw,
}

//! Exact optimal values and optimizers for `inf tr(D Xᴴ A X)` subject to
//! `Xᴴ B X ∈ {I_k, −I_k, J_k}`, for definite and indefinite `B`, plus a
//! randomized oracle that checks the closed forms numerically.

pub mod cli;
pub mod definite;
pub mod error;
pub mod indefinite;
pub mod oracle;
pub mod pencil;
pub mod random;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{CMatrix, HermitianMatrix, C64};

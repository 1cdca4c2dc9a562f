//! Explicit external deflation (Hotelling deflation) around a thick-restart
//! Lanczos eigensolver, with backward-stability diagnostics.
//!
//! The driver computes all eigenpairs of a symmetric operator inside a
//! lower-spectrum interval one (or a few) at a time: each converged pair is
//! shifted out of the way with a rank-one update `A + sigma v v^T` and the
//! solver is restarted on the updated operator.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deflation;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod lanczos;
pub mod linalg;
pub mod mtx;
pub mod operator;
pub mod oracle;
pub mod tridiagonal;

pub use deflation::{governing_residual, DeflationState, MuStrategy, ResidualBlock};
pub use error::{EedError, Result};
pub use lanczos::{lanczos_lowest, ConvergenceCheck, EigenPairResult, LanczosConfig};
pub use operator::{
    estimate_two_norm, CsrMatrix, DenseSymMatrix, NormEstimate, NormMethod, SymmetricOperator,
};

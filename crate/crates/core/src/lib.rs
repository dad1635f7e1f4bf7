//! Best approximation of symmetric operators by real diagonals in operator
//! norm: construction of test operators, an approximate solver with a
//! certified duality gap, and the certificate machinery that decides
//! minimality.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx_solver;
pub mod certificates;
pub mod construction;
pub mod error;
pub mod linalg;
pub mod operator_core;
pub mod par;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use operator_core::{block_compose, hadamard, DiagVector, SymMatrix};
pub use par::Execution;

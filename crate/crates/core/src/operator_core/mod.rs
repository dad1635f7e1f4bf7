//! Symmetric operators, diagonal multipliers, the γ-family and matrix files.

pub mod family;
pub mod io;
mod matrix;

pub use family::{c_lower, FamilyObject, GammaFamily, GammaFamilySpec, RFactor, Variant};
pub use io::{load_matrix, save_matrix, MatrixFile, Metadata};
pub use matrix::{block_compose, hadamard, DiagVector, SymMatrix};

//! Operators with a distinguished column orthogonal to every other column:
//! hypothesis checks, the diagonal that produces the orthogonality, and the
//! resulting norm identity `‖T‖ = ‖c_{i0}(T)‖`.
//!
//! Indices are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::operator_core::{DiagVector, SymMatrix};
use crate::spectral::op_norm;

/// Entries of the distinguished row with `|T_{i0 n}| ≤ NONZERO_REL·max|T|` count as zero.
pub const NONZERO_REL: f64 = 1e-13;
/// Relative slack for the dominance and orthogonality checks.
pub const CHECK_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caso3Report {
    pub i0: usize,
    /// All entries real and finite (always true for a valid `SymMatrix`).
    pub hyp1_real: bool,
    /// `T_{i0,i0} = 0` and `T_{i0,n} ≠ 0` for every `n ≠ i0`.
    pub hyp2_nonzero_row: bool,
    /// `‖c_{i0}(T)‖ ≥ ‖T^{[i0]}‖` up to relative slack.
    pub hyp3_dominance: bool,
    /// `‖c_{i0}(T)‖ − ‖T^{[i0]}‖`; may be slightly negative from roundoff.
    pub dominance_margin: f64,
    /// `max_{n≠i0} |⟨c_{i0}(T), c_n(T)⟩|`.
    pub hyp4_orthogonality: f64,
    pub hyp4_holds: bool,
    /// Existing diagonal of `T`, which is the minimal one when all hypotheses hold.
    pub minimal_diag: DiagVector,
    pub column_norm: f64,
    pub operator_norm: f64,
    /// `|‖T‖ − ‖c_{i0}(T)‖|`.
    pub norm_identity_residual: f64,
}

impl Caso3Report {
    pub fn all_hold(&self) -> bool {
        self.hyp1_real && self.hyp2_nonzero_row && self.hyp3_dominance && self.hyp4_holds
    }
}

/// Evaluates the four hypotheses at column `i0` and the norm identity.
pub fn verify_caso3(t: &SymMatrix, i0: usize) -> Result<Caso3Report> {
    let c = t.column(i0)?;
    let n = t.n();
    let scale = t.max_abs();
    let hyp1_real = t.as_slice().iter().all(|x| x.is_finite());
    let hyp2_nonzero_row =
        t.get(i0, i0) == 0.0 && (0..n).filter(|&k| k != i0).all(|k| t.get(i0, k).abs() > NONZERO_REL * scale);

    let column_norm = norm2(&c);
    let cross_norm = op_norm(&t.zero_row_col(i0)?)?;
    let dominance_margin = column_norm - cross_norm;
    let hyp3_dominance = dominance_margin >= -CHECK_REL * column_norm.max(cross_norm);

    let hyp4_orthogonality = (0..n)
        .filter(|&k| k != i0)
        .map(|k| dot(&c, t.row(k)).abs())
        .fold(0.0, f64::max);
    let hyp4_holds = hyp4_orthogonality <= CHECK_REL * column_norm * column_norm.max(scale);

    let operator_norm = op_norm(t)?;
    Ok(Caso3Report {
        i0,
        hyp1_real,
        hyp2_nonzero_row,
        hyp3_dominance,
        dominance_margin,
        hyp4_orthogonality,
        hyp4_holds,
        minimal_diag: t.diag_map(),
        column_norm,
        operator_norm,
        norm_identity_residual: (operator_norm - column_norm).abs(),
    })
}

/// Diagonal `d` with `d[i0] = 0` making every other column of `T_off + Diag(d)`
/// orthogonal to column `i0`:
/// `d[n] = −Σ_{k≠i0,n} T[i0][k]·T[k][n] / T[i0][n]`.
///
/// The diagonal of `t_off` is ignored.
pub fn solve_orthogonal_diagonal(t_off: &SymMatrix, i0: usize) -> Result<DiagVector> {
    let n = t_off.n();
    let row = t_off.column(i0)?;
    let mut d = vec![0.0; n];
    for m in (0..n).filter(|&m| m != i0) {
        let pivot = row[m];
        if pivot == 0.0 {
            return Err(Error::DivisionByZero { index: m });
        }
        let tm = t_off.row(m);
        let s: f64 = (0..n).filter(|&k| k != i0 && k != m).map(|k| row[k] * tm[k]).sum();
        d[m] = -s / pivot;
    }
    DiagVector::new(d)
}

//! The one-parameter family of Hilbert–Schmidt operators whose unique minimal
//! diagonal is bounded but not compact, and the auxiliary operators used to
//! show the scaled member is trace class.
//!
//! Indices in the formulas below are 1-based (`T_{11}` is the corner entry);
//! the returned matrices are ordinary 0-based Rust values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::operator_core::{DiagVector, SymMatrix};
use crate::spectral::op_norm;

/// Which member (or auxiliary object) of the family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    T,
    T1,
    #[serde(rename = "D_seq")]
    DSeq,
    Tr,
    TrPlusD,
    Q,
    R,
    #[serde(rename = "C_a")]
    Ca,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::T,
        Variant::T1,
        Variant::DSeq,
        Variant::Tr,
        Variant::TrPlusD,
        Variant::Q,
        Variant::R,
        Variant::Ca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::T => "T",
            Variant::T1 => "T1",
            Variant::DSeq => "D_seq",
            Variant::Tr => "Tr",
            Variant::TrPlusD => "TrPlusD",
            Variant::Q => "Q",
            Variant::R => "R",
            Variant::Ca => "C_a",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::Parameter(format!("unknown variant {s:?}; expected one of {names:?}"))
            })
    }
}

/// Validated family parameter `0 < |γ| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFamily {
    gamma: f64,
}

/// `r = ‖T^{[1]} + D‖ / ‖c_1(T)‖` at one truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RFactor {
    pub r: f64,
    /// `‖c_1(T)‖` of the truncation, from the closed form `γ²(1−γ^{2(n−1)})/(1−γ²)`.
    pub column_norm: f64,
    /// `‖T^{[1]} + D‖` of the truncation.
    pub interior_norm: f64,
    /// Analytic remainder `Σ_{k>n} γ^{2k}`.
    pub tail_bound: f64,
}

impl GammaFamily {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma == 0.0 || gamma.abs() >= 1.0 {
            return Err(Error::Parameter(format!("gamma must satisfy 0 < |gamma| < 1, got {gamma}")));
        }
        Ok(GammaFamily { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Entry `T_{ij}` (1-based) of the infinite matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let g = self.gamma;
        if i == j {
            0.0
        } else if i == 1 || j == 1 {
            g.powi(i.abs_diff(j) as i32)
        } else {
            g.powi((i.max(j) - 2) as i32)
        }
    }

    /// Principal n×n corner of `T`.
    pub fn t(&self, n: usize) -> Result<SymMatrix> {
        check_n(n)?;
        SymMatrix::from_upper_fn(n, |i, j| self.entry(i + 1, j + 1))
    }

    /// `T^{[1]}`: `T` with first row and column zeroed.
    pub fn t1(&self, n: usize) -> Result<SymMatrix> {
        self.t(n)?.zero_row_col(0)
    }

    /// Analytic remainder `Σ_{k>n} γ^{2k}` of the truncation.
    pub fn tail_bound(&self, n: usize) -> f64 {
        let g2 = self.gamma * self.gamma;
        g2.powi(n as i32 + 1) / (1.0 - g2)
    }

    /// `d_k = −(γ² − γ^k)/((1−γ)γ²) + γ^k/(γ² − 1)`, the entry of the
    /// orthogonality diagonal for `k > 3`.
    pub fn d_closed_form(&self, k: usize) -> f64 {
        let g = self.gamma;
        let gk = g.powi(k as i32);
        -(g * g - gk) / ((1.0 - g) * g * g) + gk / (g * g - 1.0)
    }

    /// Limit of `d_k`, `1/(γ − 1)`.
    pub fn d_limit(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    /// `d_k` from `⟨c_1(T), c_k(T + D)⟩ = 0` on an implicit truncation long
    /// enough that the neglected tail of the inner product is below `1e-16`.
    fn d_by_orthogonality(&self, k: usize) -> f64 {
        let g = self.gamma.abs();
        let horizon = ((1e-17f64).ln() / (2.0 * g.ln())).ceil() as usize + k + 4;
        let mut acc = 0.0;
        for m in 2..=horizon {
            if m != k {
                acc += self.entry(1, m) * self.entry(m, k);
            }
        }
        -acc / self.entry(1, k)
    }

    /// The diagonal `D = Diag(d_1, ..., d_n)` with `d_1 = 0` and every other
    /// column of `T + D` orthogonal to `c_1(T)`.
    ///
    /// Entries `k > 3` use the closed form; `d_2` and `d_3` are solved from the
    /// orthogonality equation directly.
    pub fn d_sequence(&self, n: usize) -> Result<DiagVector> {
        check_n(n)?;
        let d = (1..=n)
            .map(|k| match k {
                1 => 0.0,
                2 | 3 => self.d_by_orthogonality(k),
                _ => self.d_closed_form(k),
            })
            .collect();
        DiagVector::new(d)
    }

    /// Squared Hilbert–Schmidt norm `Σ_{i,j≤n} T_ij²` of the truncation.
    pub fn hilbert_schmidt_sq(&self, n: usize) -> f64 {
        let mut s = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                let v = self.entry(i, j);
                s += v * v;
            }
        }
        s
    }

    /// `tr(T²) = 2γ²/(1−γ²) + 2γ²/(1−γ²)²`: the first row and column
    /// contribute a geometric series, the interior entries `γ^{m−2}` appear
    /// `2(m−2)` times for each `m ≥ 3`.
    pub fn hilbert_schmidt_limit(&self) -> f64 {
        let g2 = self.gamma * self.gamma;
        2.0 * g2 / (1.0 - g2) + 2.0 * g2 / ((1.0 - g2) * (1.0 - g2))
    }

    /// `r = ‖T^{[1]} + D‖ / ‖c_1(T)‖` at truncation `n`.
    pub fn r_factor(&self, n: usize) -> Result<RFactor> {
        if n < 2 {
            return Err(Error::Parameter(format!(
                "r needs at least two rows (no off-diagonal data at n = {n})"
            )));
        }
        let g2 = self.gamma * self.gamma;
        let column_norm = (g2 * (1.0 - g2.powi(n as i32 - 1)) / (1.0 - g2)).sqrt();
        let interior = self.t1(n)?.add_diag(&self.d_sequence(n)?)?;
        let interior_norm = op_norm(&interior)?;
        Ok(RFactor {
            r: interior_norm / column_norm,
            column_norm,
            interior_norm,
            tail_bound: self.tail_bound(n),
        })
    }

    /// `T` with first row and column multiplied by `r`.
    pub fn tr_with(&self, n: usize, r: f64) -> Result<SymMatrix> {
        let t = self.t(n)?;
        SymMatrix::from_upper_fn(n, |i, j| if i == 0 || j == 0 { r * t.get(i, j) } else { t.get(i, j) })
    }

    /// `T_r` with `r` computed at the same truncation.
    pub fn tr(&self, n: usize) -> Result<SymMatrix> {
        let r = self.r_factor(n)?.r;
        self.tr_with(n, r)
    }

    /// `T_r + D`, the minimal operator of the construction.
    pub fn tr_plus_d(&self, n: usize) -> Result<SymMatrix> {
        self.tr(n)?.add_diag(&self.d_sequence(n)?)
    }

    /// `Q_ij = γ^{max(i,j)}`.
    pub fn q(&self, n: usize) -> Result<SymMatrix> {
        check_n(n)?;
        let g = self.gamma;
        SymMatrix::from_upper_fn(n, |i, j| g.powi(i.max(j) as i32 + 1))
    }

    /// Rank-two operator carrying the scaled first row and column of `T_r`.
    pub fn r_matrix(&self, n: usize) -> Result<SymMatrix> {
        let r = self.r_factor(n)?.r;
        let g = self.gamma;
        SymMatrix::from_upper_fn(n, |i, j| match (i, j) {
            (0, 0) => 0.0,
            (0, k) | (k, 0) => r * g.powi(k as i32),
            _ => 0.0,
        })
    }

    /// Lower-triangular `(C_a)_ij = a^i` for `i ≥ j` with `a = √γ`.
    pub fn c_sqrt_gamma(&self, n: usize) -> Result<Matrix> {
        if self.gamma <= 0.0 {
            return Err(Error::Parameter(format!(
                "C_a with a = sqrt(gamma) needs gamma > 0, got {}",
                self.gamma
            )));
        }
        c_lower(self.gamma.sqrt(), n)
    }
}

/// Lower-triangular `(C_a)_ij = a^i` (1-based) for `i ≥ j`.
pub fn c_lower(a: f64, n: usize) -> Result<Matrix> {
    check_n(n)?;
    Ok(Matrix::from_fn(n, n, |i, j| if i >= j { a.powi(i as i32 + 1) } else { 0.0 }))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Parameter("truncation size must be positive".into()))
    } else {
        Ok(())
    }
}

/// Parameters selecting one object of the family at one truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFamilySpec {
    pub gamma: f64,
    pub n: usize,
    pub variant: Variant,
}

/// Output of [`GammaFamilySpec::build`].
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyObject {
    Symmetric(SymMatrix),
    Diagonal(DiagVector),
    /// Non-symmetric (only `C_a`).
    General(Matrix),
}

impl FamilyObject {
    /// Dense rows for serialization; diagonals become diagonal matrices.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        match self {
            FamilyObject::Symmetric(m) => m.to_rows(),
            FamilyObject::Diagonal(d) => SymMatrix::diagonal(d).to_rows(),
            FamilyObject::General(m) => m.to_rows(),
        }
    }

    pub fn as_symmetric(&self) -> Option<&SymMatrix> {
        match self {
            FamilyObject::Symmetric(m) => Some(m),
            _ => None,
        }
    }
}

impl GammaFamilySpec {
    pub fn new(gamma: f64, n: usize, variant: Variant) -> Result<Self> {
        GammaFamily::new(gamma)?;
        check_n(n)?;
        Ok(GammaFamilySpec { gamma, n, variant })
    }

    pub fn family(&self) -> Result<GammaFamily> {
        GammaFamily::new(self.gamma)
    }

    pub fn with_n(&self, n: usize) -> Self {
        GammaFamilySpec { n, ..*self }
    }

    pub fn build(&self) -> Result<FamilyObject> {
        let f = self.family()?;
        let n = self.n;
        Ok(match self.variant {
            Variant::T => FamilyObject::Symmetric(f.t(n)?),
            Variant::T1 => FamilyObject::Symmetric(f.t1(n)?),
            Variant::DSeq => FamilyObject::Diagonal(f.d_sequence(n)?),
            Variant::Tr => FamilyObject::Symmetric(f.tr(n)?),
            Variant::TrPlusD => FamilyObject::Symmetric(f.tr_plus_d(n)?),
            Variant::Q => FamilyObject::Symmetric(f.q(n)?),
            Variant::R => FamilyObject::Symmetric(f.r_matrix(n)?),
            Variant::Ca => FamilyObject::General(f.c_sqrt_gamma(n)?),
        })
    }

    /// Symmetric operator for the solver; rejects `D_seq` and `C_a`.
    pub fn build_symmetric(&self) -> Result<SymMatrix> {
        match self.build()? {
            FamilyObject::Symmetric(m) => Ok(m),
            _ => Err(Error::Parameter(format!(
                "variant {} is not a symmetric operator",
                self.variant
            ))),
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Dense real symmetric n×n matrix, the finite truncation of a Hermitian
/// compact operator. Symmetry is exact: only the upper triangle is ever read
/// from input and the lower triangle mirrors it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on `i <= j`.
    pub fn from_upper_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::Parameter(format!("non-finite entry at ({i}, {j})")));
                }
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Accepts nested rows only if they are square, finite and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows_with_tolerance(rows, 0.0)
    }

    /// Like [`SymMatrix::from_rows`] but tolerates `|a_ij - a_ji| <= tol`; the
    /// stored matrix is the exact average of the two triangles.
    pub fn from_rows_with_tolerance(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Format(format!(
                    "row {i} has {} entries, expected {n} (matrix must be square)",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Format(format!("non-finite entry at ({i}, {j})")));
            }
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = rows[i][i];
            for j in (i + 1)..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > tol {
                    return Err(Error::Format(format!(
                        "asymmetric entries ({i}, {j}): {a} vs {b}"
                    )));
                }
                let v = if a == b { a } else { 0.5 * (a + b) };
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Symmetric part `(A + Aᵀ)/2` of a square dense matrix.
    pub fn symmetrize(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension { expected: m.rows(), got: m.cols() });
        }
        SymMatrix::from_upper_fn(m.rows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn diagonal(d: &DiagVector) -> Self {
        let n = d.len();
        let mut m = SymMatrix::zeros(n);
        for (i, &v) in d.as_slice().iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Column `j` as a vector, `c_j(T) = (T_{0j}, T_{1j}, ...)` (0-based).
    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        self.check_index(j)?;
        Ok(self.row(j).to_vec())
    }

    /// Copy with row and column `i0` set to zero.
    pub fn zero_row_col(&self, i0: usize) -> Result<Self> {
        self.check_index(i0)?;
        let mut out = self.clone();
        for k in 0..self.n {
            out.data[i0 * self.n + k] = 0.0;
            out.data[k * self.n + i0] = 0.0;
        }
        Ok(out)
    }

    /// Main diagonal as a diagonal operator.
    pub fn diag_map(&self) -> DiagVector {
        DiagVector::from_trusted((0..self.n).map(|i| self.get(i, i)).collect())
    }

    /// Copy with the diagonal set to zero.
    pub fn off_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] = 0.0;
        }
        out
    }

    /// `self + Diag(d)`.
    pub fn add_diag(&self, d: &DiagVector) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: d.len() });
        }
        let mut out = self.clone();
        for (i, &v) in d.as_slice().iter().enumerate() {
            out.data[i * self.n + i] += v;
        }
        Ok(out)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::Dimension { expected: self.n, got: other.n });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(SymMatrix { n: self.n, data })
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMatrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Principal `m×m` corner.
    pub fn principal(&self, m: usize) -> Result<Self> {
        if m > self.n {
            return Err(Error::IndexOutOfRange { index: m, size: self.n });
        }
        SymMatrix::from_upper_fn(m, |i, j| self.get(i, j))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec shape mismatch");
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `tr(A B)` for symmetric `A`, `B`.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        dot(&self.data, &other.data)
    }

    pub fn frobenius_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange { index: i, size: self.n })
        } else {
            Ok(())
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Real diagonal operator truncated to n entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagVector(Vec<f64>);

impl DiagVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some(i) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite diagonal entry {i}")));
        }
        Ok(DiagVector(d))
    }

    pub fn zeros(n: usize) -> Self {
        DiagVector(vec![0.0; n])
    }

    pub(crate) fn from_trusted(d: Vec<f64>) -> Self {
        debug_assert!(d.iter().all(|v| v.is_finite()));
        DiagVector(d)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &DiagVector) -> DiagVector {
        DiagVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn concat(&self, other: &DiagVector) -> DiagVector {
        DiagVector(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl TryFrom<Vec<f64>> for DiagVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        DiagVector::new(v)
    }
}

impl From<DiagVector> for Vec<f64> {
    fn from(d: DiagVector) -> Self {
        d.0
    }
}

/// Entrywise product `v∘w = (v₁w₁, v₂w₂, ...)`.
pub fn hadamard(v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(Error::Dimension { expected: v.len(), got: w.len() });
    }
    Ok(v.iter().zip(w).map(|(a, b)| a * b).collect())
}

/// Direct sum `A ⊕ B`: `A` and `B` on the diagonal, zeros elsewhere.
pub fn block_compose(a: &SymMatrix, b: &SymMatrix) -> SymMatrix {
    let (na, nb) = (a.n(), b.n());
    let n = na + nb;
    let mut out = SymMatrix::zeros(n);
    for i in 0..na {
        out.data[i * n..i * n + na].copy_from_slice(a.row(i));
    }
    for i in 0..nb {
        let r = na + i;
        out.data[r * n + na..r * n + n].copy_from_slice(b.row(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hadamard_definition() {
        assert_eq!(hadamard(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        assert!(hadamard(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn asymmetric_rows_rejected() {
        let rows = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(SymMatrix::from_rows(&rows), Err(Error::Format(_))));
        let ragged = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0]];
        assert!(matches!(SymMatrix::from_rows(&ragged), Err(Error::Format(_))));
    }

    #[test]
    fn tolerance_averages_triangles() {
        let rows = vec![vec![0.0, 1.0], vec![1.0 + 1e-13, 0.0]];
        let m = SymMatrix::from_rows_with_tolerance(&rows, 1e-12).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn index_errors() {
        let m = SymMatrix::identity(3);
        assert!(matches!(m.column(3), Err(Error::IndexOutOfRange { index: 3, size: 3 })));
        assert!(m.zero_row_col(5).is_err());
    }

    #[test]
    fn zero_row_col_clears_cross() {
        let m = SymMatrix::from_upper_fn(3, |i, j| (i + j + 1) as f64).unwrap();
        let z = m.zero_row_col(1).unwrap();
        assert_eq!(z.column(1).unwrap(), vec![0.0; 3]);
        assert_eq!(z.get(0, 2), 3.0);
        assert_eq!(z.get(2, 2), 5.0);
    }

    #[test]
    fn block_compose_layout() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let b = SymMatrix::from_rows(&[vec![7.0]]).unwrap();
        let s = block_compose(&a, &b);
        assert_eq!(
            s.to_rows(),
            vec![vec![1.0, 2.0, 0.0], vec![2.0, 3.0, 0.0], vec![0.0, 0.0, 7.0]]
        );
    }

    proptest! {
        #[test]
        fn hadamard_commutative_and_bilinear(
            v in proptest::collection::vec(-10.0f64..10.0, 5),
            w in proptest::collection::vec(-10.0f64..10.0, 5),
            u in proptest::collection::vec(-10.0f64..10.0, 5),
            a in -3.0f64..3.0,
        ) {
            prop_assert_eq!(hadamard(&v, &w).unwrap(), hadamard(&w, &v).unwrap());
            let lin: Vec<f64> = v.iter().zip(&u).map(|(x, y)| a * x + y).collect();
            let lhs = hadamard(&lin, &w).unwrap();
            let vw = hadamard(&v, &w).unwrap();
            let uw = hadamard(&u, &w).unwrap();
            for k in 0..5 {
                prop_assert!((lhs[k] - (a * vw[k] + uw[k])).abs() < 1e-10);
            }
        }

        #[test]
        fn serde_round_trip_is_exact(entries in proptest::collection::vec(-1e6f64..1e6, 10)) {
            let m = SymMatrix::from_upper_fn(4, |i, j| entries[(i * 4 + j) % 10] / ((i + j + 1) as f64)).unwrap();
            let text = serde_json::to_string(&m).unwrap();
            let back: SymMatrix = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}

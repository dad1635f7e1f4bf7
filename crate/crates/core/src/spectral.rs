//! Symmetric eigendecomposition and the spectral quantities built on it.
//!
//! The eigensolver is cyclic Jacobi: exact symmetric rotations, converged when
//! the off-diagonal Frobenius mass drops below `1e-14·‖T‖_F`, capped at 100
//! sweeps. It is slower than tridiagonal QR but has no failure modes on the
//! matrix sizes this crate targets, and it is deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::operator_core::SymMatrix;

const OFF_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Default relative tolerance for grouping extreme eigenvalues.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Full eigendecomposition; eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
    /// `max_k ‖T v_k − λ_k v_k‖`.
    pub residual: f64,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Operator norm `max |λ|`.
    pub fn norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.n();
        let v = &self.eigenvectors;
        let w: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_upper_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * w[k] * v[(j, k)]).sum())
            .expect("finite spectral function")
    }
}

/// Eigenvalues and (optionally) eigenvectors, unsorted.
///
/// Vectors are returned transposed: row `k` of the matrix is the k-th vector.
pub(crate) fn jacobi(a: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>)> {
    let n = a.n();
    let mut m = a.as_slice().to_vec();
    let mut vt = if want_vectors { Some(Matrix::identity(n)) } else { None };
    if n <= 1 {
        return Ok((m, vt));
    }
    let fro: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_TOL * fro;
    let mut prev_off = f64::INFINITY;
    for sweep in 0..=MAX_SWEEPS {
        let off = off_norm(&m, n);
        if off <= target || fro == 0.0 {
            break;
        }
        // Rounding noise can leave off-diagonal mass just above the target on
        // large matrices; stagnation at that level is convergence.
        if off <= 1e-12 * fro && off > 0.5 * prev_off {
            break;
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS, off_norm: off });
        }
        prev_off = off;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                if apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                rotate(&mut m, n, p, q, apq, t, s, tau);
                if let Some(vt) = vt.as_mut() {
                    for j in 0..n {
                        let g = vt[(p, j)];
                        let h = vt[(q, j)];
                        vt[(p, j)] = g - s * (h + g * tau);
                        vt[(q, j)] = h + s * (g - h * tau);
                    }
                }
            }
        }
    }
    let vals = (0..n).map(|i| m[i * n + i]).collect();
    Ok((vals, vt))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rotate(m: &mut [f64], n: usize, p: usize, q: usize, apq: f64, t: f64, s: f64, tau: f64) {
    let h = t * apq;
    m[p * n + p] -= h;
    m[q * n + q] += h;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
    // The full symmetric array is kept; update row/column p and q together.
    for j in 0..n {
        if j == p || j == q {
            continue;
        }
        let g = m[j * n + p];
        let hh = m[j * n + q];
        let new_p = g - s * (hh + g * tau);
        let new_q = hh + s * (g - hh * tau);
        m[j * n + p] = new_p;
        m[p * n + j] = new_p;
        m[j * n + q] = new_q;
        m[q * n + j] = new_q;
    }
}

fn off_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += m[i * n + j] * m[i * n + j];
        }
    }
    (2.0 * s).sqrt()
}

/// Sorted eigenpairs without the residual computation (hot loops).
pub(crate) fn eig_sorted(a: &SymMatrix) -> Result<(Vec<f64>, Matrix)> {
    let (vals, vt) = jacobi(a, true)?;
    let vt = vt.expect("vectors requested");
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(i.cmp(&j)));
    let mut v = Matrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        sorted.push(vals[k]);
        let row = vt.row(k);
        let sign = canonical_sign(row);
        for i in 0..n {
            v[(i, col)] = sign * row[i];
        }
    }
    Ok((sorted, v))
}

/// Sign making the first non-negligible component positive.
fn canonical_sign(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    match v.iter().find(|x| x.abs() > 1e-8 * scale) {
        Some(&x) if x < 0.0 => -1.0,
        _ => 1.0,
    }
}

/// Sorted eigenvalues only.
pub fn eigvals_sym(t: &SymMatrix) -> Result<Vec<f64>> {
    let (mut vals, _) = jacobi(t, false)?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Full symmetric eigendecomposition with its residual.
pub fn eig_sym(t: &SymMatrix) -> Result<EigenSystem> {
    let (eigenvalues, eigenvectors) = eig_sorted(t)?;
    let mut residual: f64 = 0.0;
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let v = eigenvectors.column(k);
        let tv = t.matvec(&v);
        let r: f64 = tv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r);
    }
    Ok(EigenSystem { eigenvalues, eigenvectors, residual })
}

/// Operator norm `max |λ(T)|`.
pub fn op_norm(t: &SymMatrix) -> Result<f64> {
    let vals = eigvals_sym(t)?;
    Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Trace norm `Σ |λ(T)|`.
pub fn trace_norm(t: &SymMatrix) -> Result<f64> {
    Ok(eigvals_sym(t)?.iter().map(|v| v.abs()).sum())
}

/// Orthonormal bases of the eigenspaces of the extreme eigenvalues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralProjections {
    /// n×r, columns span the λmax cluster (`R(E₊)`).
    pub plus_basis: Matrix,
    /// n×s, columns span the λmin cluster (`R(E₋)`).
    pub minus_basis: Matrix,
    pub cluster_tol: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub norm: f64,
}

impl SpectralProjections {
    pub fn rank_plus(&self) -> usize {
        self.plus_basis.cols()
    }

    pub fn rank_minus(&self) -> usize {
        self.minus_basis.cols()
    }

    pub fn n(&self) -> usize {
        self.plus_basis.rows()
    }
}

/// Groups eigenvalues within `cluster_tol·‖T‖` of λmax (resp. λmin).
///
/// Within a cluster the basis is canonical: the projections of `e_0, e_1, ...`
/// onto the cluster are orthonormalized in index order, so the output does not
/// depend on how the eigensolver happened to rotate a degenerate eigenspace.
pub fn spectral_projections(es: &EigenSystem, cluster_tol: f64) -> Result<SpectralProjections> {
    let n = es.n();
    if n == 0 {
        return Err(Error::DegenerateSpectrum("empty matrix".into()));
    }
    let norm = es.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateSpectrum("zero matrix has no extreme eigenspaces".into()));
    }
    let band = cluster_tol * norm;
    let (lmin, lmax) = (es.lambda_min(), es.lambda_max());
    let plus: Vec<usize> = (0..n).filter(|&k| es.eigenvalues[k] >= lmax - band).collect();
    let minus: Vec<usize> = (0..n).filter(|&k| es.eigenvalues[k] <= lmin + band).collect();
    if plus.iter().any(|k| minus.contains(k)) {
        return Err(Error::DegenerateSpectrum(format!(
            "λmax = {lmax} and λmin = {lmin} fall in one cluster at tolerance {cluster_tol:e}"
        )));
    }
    Ok(SpectralProjections {
        plus_basis: canonical_basis(&es.eigenvectors, &plus),
        minus_basis: canonical_basis(&es.eigenvectors, &minus),
        cluster_tol,
        lambda_max: lmax,
        lambda_min: lmin,
        norm,
    })
}

fn canonical_basis(vectors: &Matrix, cols: &[usize]) -> Matrix {
    let n = vectors.rows();
    let k = cols.len();
    let raw = Matrix::from_fn(n, k, |i, j| vectors[(i, cols[j])]);
    if k == 1 {
        return raw;
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in 0..n {
        if basis.len() == k {
            break;
        }
        // P e_i = B (row i of B)
        let coeffs = raw.row(i).to_vec();
        let mut p = raw.matvec(&coeffs);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &p);
                p.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = norm2(&p);
        if nrm > 1e-3 {
            p.iter_mut().for_each(|x| *x /= nrm);
            basis.push(p);
        }
    }
    if basis.len() < k {
        return raw;
    }
    Matrix::from_fn(n, k, |i, j| basis[j][i])
}

/// Outcome of the balanced-spectrum test `λmax + λmin ≈ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// `|λmax + λmin|`.
    pub residual: f64,
    pub norm: f64,
}

pub fn balanced_spectrum_check(t: &SymMatrix, tol: f64) -> Result<BalanceReport> {
    let vals = eigvals_sym(t)?;
    Ok(balance_from_values(&vals, tol))
}

pub(crate) fn balance_from_values(vals: &[f64], tol: f64) -> BalanceReport {
    let lmin = vals.first().copied().unwrap_or(0.0);
    let lmax = vals.last().copied().unwrap_or(0.0);
    let norm = lmin.abs().max(lmax.abs());
    let residual = (lmax + lmin).abs();
    BalanceReport { balanced: residual <= tol * norm, residual, norm }
}

/// Residuals of the explicit eigenvectors `v± = (‖c‖e_{i0} ± c)/(√2‖c‖)`, `c = c_{i0}(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VpmResiduals {
    pub column_norm: f64,
    /// `‖T v₊ − ‖c‖ v₊‖`.
    pub plus: f64,
    /// `‖T v₋ + ‖c‖ v₋‖`.
    pub minus: f64,
}

pub fn verify_vpm(t: &SymMatrix, i0: usize) -> Result<VpmResiduals> {
    let c = t.column(i0)?;
    if t.get(i0, i0) != 0.0 {
        return Err(Error::Precondition(format!(
            "diagonal entry ({i0}, {i0}) = {} must vanish",
            t.get(i0, i0)
        )));
    }
    let cn = norm2(&c);
    if cn == 0.0 {
        return Err(Error::DegenerateSpectrum(format!("column {i0} is zero")));
    }
    let residual = |sign: f64| {
        let mut v: Vec<f64> = c.iter().map(|x| sign * x).collect();
        v[i0] += cn;
        let scale = 1.0 / (std::f64::consts::SQRT_2 * cn);
        v.iter_mut().for_each(|x| *x *= scale);
        let tv = t.matvec(&v);
        tv.iter()
            .zip(&v)
            .map(|(a, b)| (a - sign * cn * b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    Ok(VpmResiduals { column_norm: cn, plus: residual(1.0), minus: residual(-1.0) })
}

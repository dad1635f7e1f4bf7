//! Intersection of the two convex sets
//! `{diag(B₊ Y B₊ᵀ) : Y ⪰ 0, tr Y = 1}` and `{diag(B₋ Z B₋ᵀ) : Z ⪰ 0, tr Z = 1}`,
//! i.e. the convex hulls of `{v∘v : v ∈ R(E₊), ‖v‖ = 1}` and the same for `E₋`.
//!
//! Least-squares distance is minimized by Frank–Wolfe over the product of the
//! two spectraplexes; the linear minimization oracle is an extreme eigenvector
//! of a compressed diagonal. Frank–Wolfe is slow to reach high accuracy, so once
//! it has settled the iterate is refined with Levenberg–Marquardt on low-rank
//! factors `Y = PPᵀ`, `Z = QQᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{dot, norm2, solve_spd, Matrix};
use crate::operator_core::{DiagVector, SymMatrix};
use crate::spectral::{eig_sorted, SpectralProjections};

/// Default absolute hull tolerance, scaled by `1 + basis scale`.
pub const DEFAULT_HULL_TOL: f64 = 1e-8;
const FW_CAP: usize = 10_000;
const LM_ATTEMPTS: [usize; 3] = [50, 500, 5000];
const LM_ITERS: usize = 200;
const SEPARATION_REL: f64 = 1e-12;

/// Matching convex combinations: `Σ α_i v_i∘v_i ≈ Σ β_j w_j∘w_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullWitness {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Unit vectors in `R(E₊)`, one per weight in `alpha`.
    pub plus_vectors: Vec<Vec<f64>>,
    /// Unit vectors in `R(E₋)`, one per weight in `beta`.
    pub minus_vectors: Vec<Vec<f64>>,
    /// `‖Σ α_i v_i∘v_i − Σ β_j w_j∘w_j‖₂`.
    pub residual: f64,
}

impl HullWitness {
    /// `(Σ α_i v_i∘v_i, Σ β_j w_j∘w_j)`.
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        (mix(&self.alpha, &self.plus_vectors), mix(&self.beta, &self.minus_vectors))
    }
}

/// No intersection found; `separating` is the last least-squares residual
/// `p − q`, which separates the hulls whenever `m > M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullSeparation {
    pub residual: f64,
    pub separating: DiagVector,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    /// `m > M` (beyond rounding): the probe certifies that the hulls are disjoint.
    pub separates: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HullOutcome {
    Intersecting(HullWitness),
    Disjoint(HullSeparation),
}

impl HullOutcome {
    pub fn witness(&self) -> Option<&HullWitness> {
        match self {
            HullOutcome::Intersecting(w) => Some(w),
            HullOutcome::Disjoint(_) => None,
        }
    }

    pub fn residual(&self) -> f64 {
        match self {
            HullOutcome::Intersecting(w) => w.residual,
            HullOutcome::Disjoint(s) => s.residual,
        }
    }

    pub fn is_intersecting(&self) -> bool {
        matches!(self, HullOutcome::Intersecting(_))
    }
}

fn mix(weights: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = vectors.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (w, v) in weights.iter().zip(vectors) {
        out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x * x);
    }
    out
}

fn sq(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `Bᵀ Diag(w) B`.
pub(crate) fn compress(basis: &Matrix, w: &[f64]) -> SymMatrix {
    let k = basis.cols();
    let mut out = vec![0.0; k * k];
    for (i, wi) in w.iter().enumerate() {
        let row = basis.row(i);
        for a in 0..k {
            let s = wi * row[a];
            for b in a..k {
                out[a * k + b] += s * row[b];
            }
        }
    }
    SymMatrix::from_upper_fn(k, |a, b| out[a * k + b]).expect("finite compression")
}

/// Extreme eigenpair of the compression; `max` selects the top one.
fn extreme(basis: &Matrix, w: &[f64], max: bool) -> Result<(f64, Vec<f64>)> {
    let (vals, vecs) = eig_sorted(&compress(basis, w))?;
    let k = if max { vals.len() - 1 } else { 0 };
    Ok((vals[k], vecs.column(k)))
}

/// `(m, M)` for the probe `w`: smallest eigenvalue of `B₊ᵀ Diag(w) B₊` and
/// largest of `B₋ᵀ Diag(w) B₋`.
pub(crate) fn m_and_big_m(proj: &SpectralProjections, w: &[f64]) -> Result<(f64, f64)> {
    Ok((extreme(&proj.plus_basis, w, false)?.0, extreme(&proj.minus_basis, w, true)?.0))
}

fn basis_scale(proj: &SpectralProjections) -> f64 {
    let col_scale = |b: &Matrix| (0..b.cols()).map(|j| norm2(&sq(&b.column(j)))).fold(0.0, f64::max);
    col_scale(&proj.plus_basis).max(col_scale(&proj.minus_basis))
}

/// Finds matching convex combinations or reports the least-squares residual.
///
/// Declared intersecting iff the residual is at most `tol·(1 + basis scale)`,
/// where the basis scale is the largest `‖b∘b‖` over basis columns.
pub fn hull_intersection(proj: &SpectralProjections, tol: f64) -> Result<HullOutcome> {
    let threshold = tol * (1.0 + basis_scale(proj));
    let bp = &proj.plus_basis;
    let bm = &proj.minus_basis;
    let (r, s) = (bp.cols(), bm.cols());
    if r == 1 && s == 1 {
        let v = bp.column(0);
        let w = bm.column(0);
        let res = sub(&sq(&v), &sq(&w));
        let residual = norm2(&res);
        if residual <= threshold {
            return Ok(HullOutcome::Intersecting(HullWitness {
                alpha: vec![1.0],
                beta: vec![1.0],
                plus_vectors: vec![v],
                minus_vectors: vec![w],
                residual,
            }));
        }
        return separation(proj, res, 0);
    }

    let mut fw = FrankWolfe::new(bp, bm);
    let mut k = 0;
    loop {
        let res = fw.residual();
        if norm2(&res) <= threshold {
            if let Some(w) = fw.witness(threshold) {
                return Ok(HullOutcome::Intersecting(w));
            }
        }
        let (m, y) = extreme(bp, &res, false)?;
        let (big_m, z) = extreme(bm, &res, true)?;
        if separates(m, big_m, &res) {
            return separation(proj, res, k);
        }
        if LM_ATTEMPTS.contains(&k) || k == FW_CAP {
            if let Some(w) = fw.refine(threshold) {
                return Ok(HullOutcome::Intersecting(w));
            }
        }
        if k == FW_CAP {
            return separation(proj, res, k);
        }
        fw.step(&y, &z, &res);
        k += 1;
    }
}

/// `m > M` beyond the rounding level of the compressed eigenvalues.
fn separates(m: f64, big_m: f64, res: &[f64]) -> bool {
    let scale = res.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    m - big_m > SEPARATION_REL * scale
}

fn separation(proj: &SpectralProjections, res: Vec<f64>, iterations: usize) -> Result<HullOutcome> {
    let (m, big_m) = m_and_big_m(proj, &res)?;
    let sep = separates(m, big_m, &res);
    Ok(HullOutcome::Disjoint(HullSeparation {
        residual: norm2(&res),
        separating: DiagVector::new(res)?,
        m,
        big_m,
        separates: sep,
        iterations,
    }))
}

/// Frank–Wolfe state: the two trace-one PSD matrices and their diagonals.
struct FrankWolfe<'a> {
    bp: &'a Matrix,
    bm: &'a Matrix,
    y: Matrix,
    z: Matrix,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl<'a> FrankWolfe<'a> {
    fn new(bp: &'a Matrix, bm: &'a Matrix) -> Self {
        let (r, s) = (bp.cols(), bm.cols());
        let y = Matrix::from_fn(r, r, |i, j| if i == j { 1.0 / r as f64 } else { 0.0 });
        let z = Matrix::from_fn(s, s, |i, j| if i == j { 1.0 / s as f64 } else { 0.0 });
        let p = diag_of(bp, &y);
        let q = diag_of(bm, &z);
        FrankWolfe { bp, bm, y, z, p, q }
    }

    fn residual(&self) -> Vec<f64> {
        sub(&self.p, &self.q)
    }

    fn step(&mut self, y: &[f64], z: &[f64], res: &[f64]) {
        let pa = sq(&self.bp.matvec(y));
        let qa = sq(&self.bm.matvec(z));
        let delta: Vec<f64> = pa.iter().zip(&qa).zip(res).map(|((a, b), r)| a - b - r).collect();
        let dd = dot(&delta, &delta);
        if dd == 0.0 {
            return;
        }
        let g = (-dot(res, &delta) / dd).clamp(0.0, 1.0);
        blend(&mut self.y, y, g);
        blend(&mut self.z, z, g);
        self.p.iter_mut().zip(&pa).for_each(|(p, a)| *p = (1.0 - g) * *p + g * a);
        self.q.iter_mut().zip(&qa).for_each(|(q, a)| *q = (1.0 - g) * *q + g * a);
    }

    fn witness(&self, threshold: f64) -> Option<HullWitness> {
        let (alpha, plus_vectors) = spectral_weights(self.bp, &self.y)?;
        let (beta, minus_vectors) = spectral_weights(self.bm, &self.z)?;
        let w = finish(alpha, beta, plus_vectors, minus_vectors);
        (w.residual <= threshold).then_some(w)
    }

    /// Levenberg–Marquardt on `Y = PPᵀ`, `Z = QQᵀ` from the current iterate.
    fn refine(&self, threshold: f64) -> Option<HullWitness> {
        let p0 = factor(&self.y)?;
        let q0 = factor(&self.z)?;
        let (p, q) = levenberg_marquardt(self.bp, self.bm, p0, q0, threshold)?;
        let yy = gram(&p);
        let zz = gram(&q);
        let (alpha, plus_vectors) = spectral_weights(self.bp, &yy)?;
        let (beta, minus_vectors) = spectral_weights(self.bm, &zz)?;
        let w = finish(alpha, beta, plus_vectors, minus_vectors);
        (w.residual <= threshold).then_some(w)
    }
}

fn blend(y: &mut Matrix, v: &[f64], g: f64) {
    let k = v.len();
    for i in 0..k {
        for j in 0..k {
            y[(i, j)] = (1.0 - g) * y[(i, j)] + g * v[i] * v[j];
        }
    }
}

fn diag_of(basis: &Matrix, y: &Matrix) -> Vec<f64> {
    let by = basis.matmul(y);
    (0..basis.rows()).map(|i| dot(by.row(i), basis.row(i))).collect()
}

fn finish(alpha: Vec<f64>, beta: Vec<f64>, pv: Vec<Vec<f64>>, mv: Vec<Vec<f64>>) -> HullWitness {
    let residual = norm2(&sub(&mix(&alpha, &pv), &mix(&beta, &mv)));
    HullWitness { alpha, beta, plus_vectors: pv, minus_vectors: mv, residual }
}

/// Eigen-weights of a trace-one PSD coefficient matrix and the matching unit
/// vectors `B u_k`; negligible components are dropped and the rest renormalized.
fn spectral_weights(basis: &Matrix, y: &Matrix) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let sym = SymMatrix::symmetrize(y).ok()?;
    let (vals, vecs) = eig_sorted(&sym).ok()?;
    let top = vals.last().copied()?;
    let keep: Vec<usize> = (0..vals.len()).rev().filter(|&k| vals[k] > 1e-14 * top).collect();
    let total: f64 = keep.iter().map(|&k| vals[k]).sum();
    if !(total > 0.0) {
        return None;
    }
    let weights = keep.iter().map(|&k| vals[k] / total).collect();
    let vectors = keep
        .iter()
        .map(|&k| {
            let v = basis.matvec(&vecs.column(k));
            let nv = norm2(&v);
            v.into_iter().map(|x| x / nv).collect()
        })
        .collect();
    Some((weights, vectors))
}

/// `Y ≈ PPᵀ` keeping the significant eigen-directions plus one spare column.
fn factor(y: &Matrix) -> Option<Matrix> {
    let (vals, vecs) = eig_sorted(&SymMatrix::symmetrize(y).ok()?).ok()?;
    let k = vals.len();
    let top = vals[k - 1];
    let significant = vals.iter().filter(|&&v| v > 1e-6 * top).count();
    let rank = (significant + 1).min(k);
    Some(Matrix::from_fn(k, rank, |i, j| {
        let col = k - 1 - j;
        vecs[(i, col)] * vals[col].max(1e-8 * top).sqrt()
    }))
}

fn gram(p: &Matrix) -> Matrix {
    p.matmul(&p.transpose())
}

/// Residual `[diag(B₊PPᵀB₊ᵀ) − diag(B₋QQᵀB₋ᵀ); ‖P‖² − 1; ‖Q‖² − 1]`.
fn lm_residual(bp: &Matrix, bm: &Matrix, p: &Matrix, q: &Matrix) -> (Vec<f64>, Matrix, Matrix) {
    let bpp = bp.matmul(p);
    let bmq = bm.matmul(q);
    let n = bp.rows();
    let mut f: Vec<f64> = (0..n).map(|i| dot(bpp.row(i), bpp.row(i)) - dot(bmq.row(i), bmq.row(i))).collect();
    f.push(dot(p.as_slice(), p.as_slice()) - 1.0);
    f.push(dot(q.as_slice(), q.as_slice()) - 1.0);
    (f, bpp, bmq)
}

fn levenberg_marquardt(
    bp: &Matrix,
    bm: &Matrix,
    mut p: Matrix,
    mut q: Matrix,
    threshold: f64,
) -> Option<(Matrix, Matrix)> {
    let n = bp.rows();
    let (r, kp) = (p.rows(), p.cols());
    let (s, kq) = (q.rows(), q.cols());
    let np = r * kp;
    let unknowns = np + s * kq;
    let (mut f, mut bpp, mut bmq) = lm_residual(bp, bm, &p, &q);
    let mut cost = dot(&f, &f);
    let mut lambda = 1e-3;
    for _ in 0..LM_ITERS {
        if cost.sqrt() <= 0.1 * threshold {
            break;
        }
        // Jacobian, (n + 2) × unknowns
        let mut jac = Matrix::zeros(n + 2, unknowns);
        for i in 0..n {
            for a in 0..r {
                for l in 0..kp {
                    jac[(i, a * kp + l)] = 2.0 * bpp[(i, l)] * bp[(i, a)];
                }
            }
            for b in 0..s {
                for l in 0..kq {
                    jac[(i, np + b * kq + l)] = -2.0 * bmq[(i, l)] * bm[(i, b)];
                }
            }
        }
        for (idx, v) in p.as_slice().iter().enumerate() {
            jac[(n, idx)] = 2.0 * v;
        }
        for (idx, v) in q.as_slice().iter().enumerate() {
            jac[(n + 1, np + idx)] = 2.0 * v;
        }
        let jt = jac.transpose();
        let jtj = jt.matmul(&jac);
        let g = jt.matvec(&f);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..unknowns {
                a[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            let step = solve_spd(&a, &rhs)?;
            let p_new = Matrix::from_fn(r, kp, |a, l| p[(a, l)] + step[a * kp + l]);
            let q_new = Matrix::from_fn(s, kq, |b, l| q[(b, l)] + step[np + b * kq + l]);
            let (f_new, bpp_new, bmq_new) = lm_residual(bp, bm, &p_new, &q_new);
            let cost_new = dot(&f_new, &f_new);
            if cost_new < cost {
                p = p_new;
                q = q_new;
                f = f_new;
                bpp = bpp_new;
                bmq = bmq_new;
                cost = cost_new;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some((p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eig_sym, spectral_projections, DEFAULT_CLUSTER_TOL};

    fn proj_of(rows: &[Vec<f64>]) -> SpectralProjections {
        let t = SymMatrix::from_rows(rows).unwrap();
        spectral_projections(&eig_sym(&t).unwrap(), DEFAULT_CLUSTER_TOL).unwrap()
    }

    #[test]
    fn exchange_hulls_meet() {
        let p = proj_of(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let w = hull_intersection(&p, DEFAULT_HULL_TOL).unwrap();
        let w = w.witness().unwrap();
        assert_eq!(w.alpha, vec![1.0]);
        assert_eq!(w.beta, vec![1.0]);
        assert!(w.residual < 1e-15);
    }

    #[test]
    fn coordinate_eigenspaces_are_disjoint() {
        let p = proj_of(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        match hull_intersection(&p, DEFAULT_HULL_TOL).unwrap() {
            HullOutcome::Disjoint(s) => {
                assert!((s.residual - 2f64.sqrt()).abs() < 1e-15);
                assert!(s.separates);
                assert_eq!(s.m, 1.0);
                assert_eq!(s.big_m, -1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_by_three_squares_coincide() {
        let p = proj_of(&[vec![0.0, 1.0, 1.0], vec![1.0, -0.5, 0.5], vec![1.0, 0.5, -0.5]]);
        let w = hull_intersection(&p, DEFAULT_HULL_TOL).unwrap();
        let w = w.witness().unwrap();
        let (a, b) = w.points();
        for (x, y) in a.iter().zip([0.5, 0.25, 0.25]) {
            assert!((x - y).abs() < 1e-14);
        }
        for (x, y) in b.iter().zip([0.5, 0.25, 0.25]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn plus_cluster_of_rank_two() {
        // E₊ = span{(1,−1,0)/√2, e₂}, E₋ = span{(1,1,0)/√2}
        let p = proj_of(&[vec![0.0, -1.0, 0.0], vec![-1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!((p.rank_plus(), p.rank_minus()), (2, 1));
        let out = hull_intersection(&p, DEFAULT_HULL_TOL).unwrap();
        let w = out.witness().expect("intersecting");
        assert!(w.residual <= 1e-8);
        let total: f64 = w.alpha.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let (a, b) = w.points();
        assert!((a[2]).abs() < 1e-8 && (b[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_two_disjoint_is_separated() {
        // E₊ = span{e₀, e₁}, E₋ = span{e₂}
        let p = proj_of(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, -1.0]]);
        match hull_intersection(&p, DEFAULT_HULL_TOL).unwrap() {
            HullOutcome::Disjoint(s) => assert!(s.separates && s.m > s.big_m),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compressions_give_m_and_big_m() {
        let p = proj_of(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let (m, big_m) = m_and_big_m(&p, &[1.0, 2.0]).unwrap();
        assert_eq!((m, big_m), (1.0, 2.0));
    }
}

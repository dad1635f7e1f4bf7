//! Sign-pattern polish.
//!
//! Near an optimum with simple extreme eigenvalues the two eigenvectors `u`
//! (for `+t`) and `w` (for `−t`) satisfy `w∘w = u∘u`, so `w = σ∘u` for a sign
//! vector `σ`. Given `σ`, the pair is recovered exactly: `u` is the top
//! eigenvector of `B_σ = (C − SCS)/2` (the entries of `C` joining opposite
//! signs), and `d_k = t − (Cu)_k / u_k` makes `(t, u)` and `(−t, σ∘u)`
//! eigenpairs of `C + Diag(d)`. Solving for `d` componentwise keeps full
//! relative accuracy in coordinates where `u` is tiny, where the barrier
//! iterate is insensitive.

use crate::error::Result;
use crate::linalg::dot;
use crate::operator_core::SymMatrix;
use crate::spectral::eig_sorted;

const REFINE_PASSES: usize = 4;

pub(crate) struct Polished {
    pub d: Vec<f64>,
    /// `(uuᵀ − wwᵀ)/2`, exactly zero diagonal, not normalized.
    pub certificate: SymMatrix,
    /// `uᵀB_σu / ‖(uuᵀ − wwᵀ)/2‖₁`, a lower bound on the distance.
    pub lower: f64,
}

/// Signs `σ_k = sign(u_k w_k)`.
pub(crate) fn sign_pattern(u: &[f64], w: &[f64]) -> Vec<f64> {
    u.iter().zip(w).map(|(a, b)| if a * b >= 0.0 { 1.0 } else { -1.0 }).collect()
}

/// `(C − SCS)/2`.
fn bipartite_part(c: &SymMatrix, sigma: &[f64]) -> SymMatrix {
    SymMatrix::from_upper_fn(c.n(), |i, j| if sigma[i] != sigma[j] { c.get(i, j) } else { 0.0 })
        .expect("entries of a valid matrix")
}

/// Lower bound and certificate from the top eigenvector of `B_σ`; returns
/// `None` when `d` cannot be recovered (a vanishing coordinate of `u`).
pub(crate) fn polish(c: &SymMatrix, sigma: &[f64]) -> Result<Option<Polished>> {
    let n = c.n();
    let b = bipartite_part(c, sigma);
    let (vals, vecs) = eig_sorted(&b)?;
    let t = vals[n - 1];
    if !(t > 0.0) {
        return Ok(None);
    }
    let mut u = vecs.column(n - 1);
    for _ in 0..REFINE_PASSES {
        let bu = b.matvec(&u);
        let nb = dot(&bu, &bu).sqrt();
        if !(nb > 0.0) {
            break;
        }
        u = bu.into_iter().map(|x| x / nb).collect();
    }
    let w: Vec<f64> = u.iter().zip(sigma).map(|(x, s)| x * s).collect();
    let rayleigh = b.quadratic_form(&u);
    let overlap = dot(&u, &w);
    let tn = (1.0 - overlap * overlap).max(0.0).sqrt();
    let certificate = SymMatrix::from_upper_fn(n, |i, j| 0.5 * (u[i] * u[j] - w[i] * w[j]))?;
    let lower = if tn > 0.0 { rayleigh / tn } else { 0.0 };
    if u.iter().any(|x| x.abs() < 1e-300) {
        return Ok(None);
    }
    let d = (0..n)
        .map(|k| {
            let row = c.row(k);
            let off: f64 = (0..n).filter(|&j| j != k).map(|j| row[j] * u[j]).sum();
            t - row[k] - off / u[k]
        })
        .collect();
    Ok(Some(Polished { d, certificate, lower }))
}

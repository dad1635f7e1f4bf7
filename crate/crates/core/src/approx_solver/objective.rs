//! `f(d) = ‖C + Diag(d)‖ = max(λmax, −λmin)` and its smoothed surrogate.

use crate::error::Result;
use crate::operator_core::{DiagVector, SymMatrix};
use crate::spectral::{eig_sorted, eigvals_sym};

/// `‖C + Diag(d)‖`.
pub fn objective(c: &SymMatrix, d: &DiagVector) -> Result<f64> {
    Ok(extreme_abs(&eigvals_sym(&c.add_diag(d)?)?))
}

pub(crate) fn objective_raw(c: &SymMatrix, d: &[f64]) -> Result<f64> {
    Ok(extreme_abs(&eigvals_sym(&shifted(c, d))?))
}

fn extreme_abs(vals: &[f64]) -> f64 {
    match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => hi.max(-lo),
        _ => 0.0,
    }
}

pub(crate) fn shifted(c: &SymMatrix, d: &[f64]) -> SymMatrix {
    c.add_diag(&DiagVector::from_trusted(d.to_vec())).expect("length checked by caller")
}

/// A subgradient of `f` at `d`: `v∘v` for the top eigenvector when `λmax`
/// attains the norm, otherwise `−w∘w` for the bottom one.
pub fn subgradient(c: &SymMatrix, d: &DiagVector) -> Result<Vec<f64>> {
    let (vals, vecs) = eig_sorted(&c.add_diag(d)?)?;
    let n = vals.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(if vals[n - 1] >= -vals[0] {
        vecs.column(n - 1).iter().map(|x| x * x).collect()
    } else {
        vecs.column(0).iter().map(|x| -x * x).collect()
    })
}

/// `g_μ(d) = μ log Σ_k exp(|λ_k|/μ)` and its gradient
/// `Σ_k softmax_k · sign(λ_k) · v_k∘v_k`.
pub(crate) fn smoothed(c: &SymMatrix, d: &[f64], mu: f64) -> Result<(f64, Vec<f64>)> {
    let (vals, vecs) = eig_sorted(&shifted(c, d))?;
    let n = vals.len();
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let weights: Vec<f64> = vals.iter().map(|v| ((v.abs() - top) / mu).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = top + mu * total.ln();
    let mut grad = vec![0.0; n];
    for (k, (w, v)) in weights.iter().zip(&vals).enumerate() {
        let coef = w / total * v.signum();
        if coef.abs() < 1e-300 {
            continue;
        }
        for (i, g) in grad.iter_mut().enumerate() {
            let x = vecs[(i, k)];
            *g += coef * x * x;
        }
    }
    Ok((value, grad))
}

/// Gradient descent with Armijo backtracking on `g_μ` for each `μ` in the
/// schedule, warm-starting each stage from the previous one.
pub(crate) fn smooth_descent(c: &SymMatrix, d0: &[f64], schedule: &[f64], iters: usize) -> Result<(Vec<f64>, usize)> {
    let mut d = d0.to_vec();
    let mut evals = 0;
    for &mu in schedule {
        let (mut g, mut grad) = smoothed(c, &d, mu)?;
        evals += 1;
        let mut step = mu;
        for _ in 0..iters {
            let gg: f64 = grad.iter().map(|x| x * x).sum();
            if gg <= 1e-30 {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = d.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
                let (gt, gradt) = smoothed(c, &trial, mu)?;
                evals += 1;
                if gt <= g - 1e-4 * step * gg {
                    d = trial;
                    g = gt;
                    grad = gradt;
                    accepted = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    Ok((d, evals))
}

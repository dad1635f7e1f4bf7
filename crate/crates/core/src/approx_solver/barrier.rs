//! Log-barrier interior-point method for
//! `min t  s.t.  tI − (C + Diag(d)) ⪰ 0,  tI + (C + Diag(d)) ⪰ 0`,
//! centering with damped Newton on
//! `τt − log det(tI − M) − log det(tI + M)`.
//!
//! Besides a primal point, each centered iterate yields the dual matrix
//! `(S₁⁻¹ − S₂⁻¹)/τ`, which is a near-feasible certificate.

use crate::error::Result;
use crate::linalg::{solve_spd, Matrix};
use crate::operator_core::SymMatrix;
use crate::spectral::{eig_sorted, eigvals_sym};

use super::objective::{objective_raw, shifted};

const INNER_CAP: usize = 60;
const CENTER_TOL: f64 = 1e-10;
const TAU_FACTOR: f64 = 10.0;

pub(crate) struct BarrierOutcome {
    pub d: Vec<f64>,
    /// Dual matrix at the final centered point.
    pub dual: SymMatrix,
    pub newton_steps: usize,
}

struct Local {
    a: Vec<f64>,
    b: Vec<f64>,
    vecs: Matrix,
}

fn local(c: &SymMatrix, d: &[f64], t: f64) -> Result<Option<Local>> {
    let (vals, vecs) = eig_sorted(&shifted(c, d))?;
    if vals.iter().any(|l| t - l <= 0.0 || t + l <= 0.0) {
        return Ok(None);
    }
    let a = vals.iter().map(|l| 1.0 / (t - l)).collect();
    let b = vals.iter().map(|l| 1.0 / (t + l)).collect();
    Ok(Some(Local { a, b, vecs }))
}

/// `V Diag(w) Vᵀ`.
fn spectral_sum(vecs: &Matrix, w: &[f64]) -> Matrix {
    let n = vecs.rows();
    let scaled = Matrix::from_fn(n, n, |i, k| vecs[(i, k)] * w[k]);
    scaled.matmul(&vecs.transpose())
}

fn feasible(c: &SymMatrix, d: &[f64], t: f64) -> Result<bool> {
    let vals = eigvals_sym(&shifted(c, d))?;
    Ok(vals.iter().all(|l| t - l > 0.0 && t + l > 0.0))
}

/// Runs the barrier method on `c` (assumed scaled to unit size) from `d0`
/// until the duality measure `2n/τ` falls below `rel_gap·t` or the Newton
/// step budget is spent.
pub(crate) fn barrier(c: &SymMatrix, d0: &[f64], rel_gap: f64, max_steps: usize) -> Result<BarrierOutcome> {
    let n = c.n();
    let m = 2.0 * n as f64;
    let mut d = d0.to_vec();
    let f0 = objective_raw(c, &d)?;
    let mut t = 1.1 * f0 + 1e-3;
    let mut tau = m / (0.1 * f0 + 1e-3);
    let mut steps = 0;
    'outer: loop {
        for _ in 0..INNER_CAP {
            if steps >= max_steps {
                break 'outer;
            }
            let Some(loc) = local(c, &d, t)? else { break 'outer };
            let s1 = spectral_sum(&loc.vecs, &loc.a);
            let s2 = spectral_sum(&loc.vecs, &loc.b);
            let a2: Vec<f64> = loc.a.iter().map(|x| x * x).collect();
            let b2: Vec<f64> = loc.b.iter().map(|x| x * x).collect();
            let mut grad = vec![0.0; n + 1];
            let mut h = Matrix::zeros(n + 1, n + 1);
            for i in 0..n {
                grad[i] = s1[(i, i)] - s2[(i, i)];
                let mut cross = 0.0;
                for k in 0..n {
                    let v2 = loc.vecs[(i, k)] * loc.vecs[(i, k)];
                    cross += v2 * (b2[k] - a2[k]);
                }
                h[(i, n)] = cross;
                h[(n, i)] = cross;
                for j in 0..n {
                    h[(i, j)] = s1[(i, j)] * s1[(i, j)] + s2[(i, j)] * s2[(i, j)];
                }
            }
            grad[n] = tau - loc.a.iter().sum::<f64>() - loc.b.iter().sum::<f64>();
            h[(n, n)] = a2.iter().sum::<f64>() + b2.iter().sum::<f64>();
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(delta) = solve_spd(&h, &rhs) else { break 'outer };
            let dec2: f64 = -grad.iter().zip(&delta).map(|(g, x)| g * x).sum::<f64>();
            if !(dec2 >= 0.0) || !dec2.is_finite() {
                break 'outer;
            }
            if dec2 / 2.0 <= CENTER_TOL {
                break;
            }
            let lam = dec2.sqrt();
            let mut step = if lam > 0.25 { 1.0 / (1.0 + lam) } else { 1.0 };
            let mut moved = false;
            for _ in 0..60 {
                let nd: Vec<f64> = d.iter().zip(&delta).map(|(x, s)| x + step * s).collect();
                let nt = t + step * delta[n];
                if feasible(c, &nd, nt)? {
                    d = nd;
                    t = nt;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            steps += 1;
            if !moved {
                break 'outer;
            }
        }
        if m / tau <= rel_gap * t {
            break;
        }
        tau *= TAU_FACTOR;
    }
    let dual = match local(c, &d, t)? {
        Some(loc) => {
            let diff: Vec<f64> = loc.a.iter().zip(&loc.b).map(|(a, b)| (a - b) / tau).collect();
            SymMatrix::symmetrize(&spectral_sum(&loc.vecs, &diff))?
        }
        None => SymMatrix::zeros(n),
    };
    Ok(BarrierOutcome { d, dual, newton_steps: steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::CertificateX;

    #[test]
    fn exchange_converges_to_zero_diagonal() {
        let c = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let out = barrier(&c, &[0.3, -0.2], 1e-12, 500).unwrap();
        let f = objective_raw(&c, &out.d).unwrap();
        assert!((f - 1.0).abs() < 1e-10, "{f}");
        let lower = CertificateX::from_matrix(out.dual.clone(), &c).unwrap().lower_bound(&c).unwrap();
        assert!((lower - 1.0).abs() < 1e-10);
    }

    #[test]
    fn three_by_three_reaches_sqrt_two() {
        let c = SymMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.5], vec![1.0, 0.5, 0.0]]).unwrap();
        let out = barrier(&c, &[0.0; 3], 1e-12, 500).unwrap();
        let f = objective_raw(&c, &out.d).unwrap();
        assert!((f - 2f64.sqrt()).abs() < 1e-10);
        assert!((out.d[1] + 0.5).abs() < 1e-6 && (out.d[2] + 0.5).abs() < 1e-6, "{:?}", out.d);
    }
}

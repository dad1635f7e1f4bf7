//! Brute-force nested grid search for tiny instances, used as an independent
//! check on the solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::operator_core::SymMatrix;
use crate::par::{map_range, Execution};
use crate::spectral::op_norm;

use super::objective::objective_raw;

pub const ORACLE_MAX_N: usize = 4;
const POINTS: usize = 21;
const SHRINK: f64 = 5.0;
const DEFAULT_LEVELS: usize = 4;
const RECENTER_CAP: usize = 50;
const MAX_FRAMES: usize = 16;
const FRAME_GAIN: f64 = 1e-6;
const FRAME_SEED: u64 = 0x6f72_6163;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub d: Vec<f64>,
    pub radius: f64,
    pub levels: usize,
}

/// Smallest `‖C + Diag(d)‖` over a 21-point-per-axis grid on
/// `[−radius, radius]^n`, refined `levels` times around the incumbent with
/// the half-width shrinking 5× each time. Before each shrink the grid is
/// re-centred at the same width as long as the incumbent lands on the box
/// boundary. The whole search is then repeated in seeded random orthonormal
/// frames at a fifth of the radius until a round gains nothing.
/// Defaults: `radius = 2‖C‖`, `levels = 4`.
pub fn oracle_grid(c: &SymMatrix, radius: Option<f64>, levels: Option<usize>) -> Result<f64> {
    Ok(oracle_grid_with(c, radius, levels, Execution::default())?.value)
}

pub fn oracle_grid_with(
    c: &SymMatrix,
    radius: Option<f64>,
    levels: Option<usize>,
    exec: Execution,
) -> Result<OracleResult> {
    let n = c.n();
    if n > ORACLE_MAX_N {
        return Err(Error::Size { n, max: ORACLE_MAX_N });
    }
    let radius = match radius {
        Some(r) if !(r >= 0.0) || !r.is_finite() => {
            return Err(Error::Parameter(format!("radius must be finite and nonnegative, got {r}")))
        }
        Some(r) => r,
        None => 2.0 * op_norm(c)?,
    };
    let levels = levels.unwrap_or(DEFAULT_LEVELS);
    let axes: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|j| f64::from(u8::from(j == k))).collect()).collect();
    let zero = vec![0.0; n];
    let mut best = (objective_raw(c, &zero)?, zero);
    descend(c, &axes, radius, levels, exec, &mut best)?;
    // Narrow valleys that run obliquely to every lattice direction stall the
    // axis-aligned grid; repeat the search in rotated frames until a round
    // stops paying off.
    let mut rng = ChaCha8Rng::seed_from_u64(FRAME_SEED);
    for _ in 0..MAX_FRAMES {
        let before = best.0;
        descend(c, &random_frame(&mut rng, n), radius / SHRINK, levels, exec, &mut best)?;
        if before - best.0 <= FRAME_GAIN * (1.0 + before) {
            break;
        }
    }
    Ok(OracleResult { value: best.0, d: best.1, radius, levels })
}

/// Nested grid search in the frame `axes`, starting from the incumbent.
fn descend(
    c: &SymMatrix,
    axes: &[Vec<f64>],
    radius: f64,
    levels: usize,
    exec: Execution,
    best: &mut (f64, Vec<f64>),
) -> Result<()> {
    let n = c.n();
    let total = POINTS.pow(n as u32);
    let mut half = radius;
    for _ in 0..=levels {
        // Re-grid at the same width while the incumbent sits on the box
        // boundary, so valleys are followed before zooming in.
        for _ in 0..RECENTER_CAP {
            let center = best.1.clone();
            let step = 2.0 * half / (POINTS - 1) as f64;
            let values = map_range(total, exec, |idx| {
                let mut rem = idx;
                let mut d = center.clone();
                for axis in axes {
                    let off = -half + step * (rem % POINTS) as f64;
                    rem /= POINTS;
                    for (x, a) in d.iter_mut().zip(axis) {
                        *x += off * a;
                    }
                }
                objective_raw(c, &d).map(|f| (f, idx, d))
            });
            let mut winner = None;
            for v in values {
                let (f, idx, d) = v?;
                if f < best.0 {
                    *best = (f, d);
                    winner = Some(idx);
                }
            }
            let on_boundary = winner.is_some_and(|mut idx| {
                (0..n).any(|_| {
                    let i = idx % POINTS;
                    idx /= POINTS;
                    i == 0 || i == POINTS - 1
                })
            });
            if !on_boundary {
                break;
            }
        }
        half /= SHRINK;
    }
    Ok(())
}

/// Random orthonormal basis of R^n (Gram–Schmidt on uniform draws).
fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    while frame.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for u in &frame {
            let p = dot(&v, u);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let len = norm2(&v);
        if len > 1e-3 {
            frame.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    frame
}

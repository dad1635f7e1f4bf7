//! Quotient-norm sweeps over truncation sizes of a family member.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operator_core::GammaFamilySpec;
use crate::par::{map_slice, Execution};

use super::{min_diag_norm, SolverOptions, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub lambda_sum_residual: f64,
    pub status: Status,
    pub d_star: Vec<f64>,
}

impl SweepRow {
    /// Entry `k` (0-based) of the optimal diagonal, if the truncation has it.
    pub fn entry(&self, k: usize) -> Option<f64> {
        self.d_star.get(k).copied()
    }
}

/// Solves the family member at each size in `n_list`. Sizes are independent
/// and run under `exec`; each solve itself uses `opts.execution`.
pub fn sweep_quotient_norm(
    family: &GammaFamilySpec,
    n_list: &[usize],
    opts: &SolverOptions,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    map_slice(n_list, exec, |&n| -> Result<SweepRow> {
        let c = family.with_n(n).build_symmetric()?;
        let r = min_diag_norm(&c, opts)?;
        Ok(SweepRow {
            n,
            upper: r.upper,
            lower: r.lower,
            gap: r.gap,
            lambda_sum_residual: r.lambda_sum_residual,
            status: r.status,
            d_star: r.d_star.into_vec(),
        })
    })
    .into_iter()
    .collect()
}

/// CSV with columns `n, upper, lower, gap, lambda_sum_residual` and one
/// `d_<k>` column per tracked entry. `track` holds 0-based indices; column
/// labels are 1-based. Entries beyond a row's size are left empty.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow], track: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["n", "upper", "lower", "gap", "lambda_sum_residual"].map(String::from).to_vec();
    header.extend(track.iter().map(|k| format!("d_{}", k + 1)));
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.n.to_string(),
            row.upper.to_string(),
            row.lower.to_string(),
            row.gap.to_string(),
            row.lambda_sum_residual.to_string(),
        ];
        rec.extend(track.iter().map(|&k| row.entry(k).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

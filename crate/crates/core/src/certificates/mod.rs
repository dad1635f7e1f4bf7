//! Dual certificates of minimality and the tests that decide it: balanced
//! spectrum, the `m`/`M` compression test, hull intersection, and assembly and
//! verification of a zero-diagonal trace-norm-one witness `X`.

mod hull;

pub use hull::{hull_intersection, HullOutcome, HullSeparation, HullWitness, DEFAULT_HULL_TOL};

use serde::{Deserialize, Serialize};

use crate::construction::{verify_caso3, Caso3Report};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::operator_core::{DiagVector, SymMatrix};
use crate::spectral::{
    balance_from_values, eig_sym, eigvals_sym, spectral_projections, BalanceReport, SpectralProjections,
    DEFAULT_CLUSTER_TOL,
};

/// Symmetric `X` with `‖X‖₁ = 1` and (near) zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateX {
    pub x: SymMatrix,
    pub trace_norm: f64,
    /// `tr(X A)` for the operator `A = C + D₁` it was built for.
    pub value: f64,
    /// `max_k |X_kk|`.
    pub diag_residual: f64,
    /// `max_k |X_kk|` of the assembled matrix before its diagonal was removed.
    pub assembly_diag_residual: f64,
}

impl CertificateX {
    /// Normalizes `x` to unit trace norm and evaluates it on `target`.
    pub fn from_matrix(x: SymMatrix, target: &SymMatrix) -> Result<Self> {
        let tn = trace_norm_of(&x)?;
        if !(tn > 0.0) {
            return Err(Error::InvalidCertificate("zero matrix".into()));
        }
        let x = x.scale(1.0 / tn);
        let diag_residual = x.diag_map().max_abs();
        Ok(CertificateX {
            value: x.trace_product(target),
            trace_norm: trace_norm_of(&x)?,
            diag_residual,
            assembly_diag_residual: diag_residual,
            x,
        })
    }

    /// `tr(X A)`.
    pub fn evaluate(&self, a: &SymMatrix) -> f64 {
        self.x.trace_product(a)
    }

    /// `(X⁺, X⁻)`.
    pub fn parts(&self) -> Result<(SymMatrix, SymMatrix)> {
        positive_negative_parts(&self.x)
    }

    /// Dual bound `|tr(X'C)| / ‖X'‖₁` with `X'` the zero-diagonal part of `X`.
    /// Valid for every `X` since `X'` annihilates all diagonals exactly.
    pub fn lower_bound(&self, c: &SymMatrix) -> Result<f64> {
        lower_bound_of(&self.x, c)
    }
}

pub(crate) fn lower_bound_of(x: &SymMatrix, c: &SymMatrix) -> Result<f64> {
    let off = x.off_diagonal();
    let tn = trace_norm_of(&off)?;
    Ok(if tn > 0.0 { off.trace_product(c).abs() / tn } else { 0.0 })
}

fn trace_norm_of(x: &SymMatrix) -> Result<f64> {
    Ok(eigvals_sym(x)?.iter().map(|v| v.abs()).sum())
}

/// `L⁺ = (|L| + L)/2`, `L⁻ = (|L| − L)/2`.
pub fn positive_negative_parts(l: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    let es = eig_sym(l)?;
    Ok((es.reconstruct_with(|v| v.max(0.0)), es.reconstruct_with(|v| (-v).max(0.0))))
}

/// Residuals of the three conditions a certificate must meet for `C + D₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    /// `max_k |X_kk| / ‖X‖₁`.
    pub diag_residual: f64,
    pub trace_norm: f64,
    /// `tr(X(C + D₁))`.
    pub value: f64,
    pub operator_norm: f64,
    /// `| |tr(X(C+D₁))| − ‖C+D₁‖‖X‖₁ | / (‖C+D₁‖‖X‖₁)`.
    pub value_residual: f64,
    /// `‖X⁺ − E₊X⁺‖_F / ‖X‖₁` (roles swapped when the value is negative).
    pub support_plus: f64,
    /// `‖X⁻ − E₋X⁻‖_F / ‖X‖₁`.
    pub support_minus: f64,
    pub holds: bool,
}

/// Checks that `X` has zero diagonal, attains `‖C + D₁‖` and lives on the
/// extreme eigenspaces; a passing verdict certifies that `C + D₁` is minimal.
pub fn verify_certificate(
    c: &SymMatrix,
    d1: &DiagVector,
    x: &CertificateX,
    tol: f64,
    cluster_tol: f64,
) -> Result<CertificateVerdict> {
    if x.x.n() != c.n() {
        return Err(Error::Dimension { expected: c.n(), got: x.x.n() });
    }
    let a = c.add_diag(d1)?;
    let proj = spectral_projections(&eig_sym(&a)?, cluster_tol)?;
    let trace_norm = trace_norm_of(&x.x)?;
    if !(trace_norm > 0.0) {
        return Err(Error::InvalidCertificate("zero matrix".into()));
    }
    let diag_residual = x.x.diag_map().max_abs() / trace_norm;
    let value = x.x.trace_product(&a);
    let scale = proj.norm * trace_norm;
    let value_residual = (value.abs() - scale).abs() / scale;
    let oriented = if value < 0.0 { x.x.scale(-1.0) } else { x.x.clone() };
    let (xp, xm) = positive_negative_parts(&oriented)?;
    let support_plus = off_span(&proj.plus_basis, &xp) / trace_norm;
    let support_minus = off_span(&proj.minus_basis, &xm) / trace_norm;
    let holds = diag_residual <= tol && value_residual <= tol && support_plus <= tol && support_minus <= tol;
    Ok(CertificateVerdict {
        diag_residual,
        trace_norm,
        value,
        operator_norm: proj.norm,
        value_residual,
        support_plus,
        support_minus,
        holds,
    })
}

/// `‖Y − BBᵀY‖_F`.
fn off_span(basis: &Matrix, y: &SymMatrix) -> f64 {
    let ym = y.to_matrix();
    let proj = basis.matmul(&basis.transpose().matmul(&ym));
    let diff: f64 = proj.as_slice().iter().zip(ym.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    diff.sqrt()
}

/// `m = min_{y ∈ R(E₊)} ⟨Dy, y⟩/‖y‖²` and `M = max_{z ∈ R(E₋)} ⟨Dz, z⟩/‖z‖²`.
#[allow(non_snake_case)]
pub fn compute_mM(d: &DiagVector, proj: &SpectralProjections) -> Result<(f64, f64)> {
    if proj.rank_plus() == 0 || proj.rank_minus() == 0 {
        return Err(Error::DegenerateSpectrum("empty eigenspace basis".into()));
    }
    if d.len() != proj.n() {
        return Err(Error::Dimension { expected: proj.n(), got: d.len() });
    }
    hull::m_and_big_m(proj, d.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition3Report {
    pub balance: BalanceReport,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    /// Balanced and `m ≤ M + tol·max(1, max|D|)` for this probe.
    pub holds: bool,
}

/// Balanced spectrum of `C + D₁` plus the `m ≤ M` test for one probe
/// diagonal. The full condition quantifies over all probes; use
/// [`hull_intersection`] for a decision.
pub fn condition3_check(
    c: &SymMatrix,
    d1: &DiagVector,
    probe: &DiagVector,
    cluster_tol: f64,
    tol: f64,
) -> Result<Condition3Report> {
    let a = c.add_diag(d1)?;
    let es = eig_sym(&a)?;
    let balance = balance_from_values(&es.eigenvalues, tol);
    let proj = spectral_projections(&es, cluster_tol)?;
    let (m, big_m) = compute_mM(probe, &proj)?;
    let holds = balance.balanced && m <= big_m + tol * probe.max_abs().max(1.0);
    Ok(Condition3Report { balance, m, big_m, holds })
}

/// `X = (Σ α_i v_i v_iᵀ − Σ β_j w_j w_jᵀ)/2` from a hull witness, with the
/// leftover diagonal (bounded by half the witness residual) removed so that
/// `X` annihilates every diagonal exactly, then normalized to `‖X‖₁ = 1`.
///
/// `target` is `C + D₁`, used only to report the value.
pub fn build_certificate(
    target: &SymMatrix,
    proj: &SpectralProjections,
    witness: &HullWitness,
    tol: f64,
) -> Result<CertificateX> {
    let n = proj.n();
    if target.n() != n {
        return Err(Error::Dimension { expected: n, got: target.n() });
    }
    if witness.residual > tol {
        return Err(Error::CertificateUnavailable { residual: witness.residual, tol });
    }
    let mut acc = vec![0.0; n * n];
    let mut add = |w: f64, v: &[f64]| {
        for i in 0..n {
            for j in 0..n {
                acc[i * n + j] += 0.5 * w * v[i] * v[j];
            }
        }
    };
    for (a, v) in witness.alpha.iter().zip(&witness.plus_vectors) {
        add(*a, v);
    }
    for (b, w) in witness.beta.iter().zip(&witness.minus_vectors) {
        add(-*b, w);
    }
    let raw = SymMatrix::from_upper_fn(n, |i, j| acc[i * n + j])?;
    let assembly = raw.diag_map().max_abs();
    let mut cert = CertificateX::from_matrix(raw.off_diagonal(), target)?;
    cert.assembly_diag_residual = assembly;
    Ok(cert)
}

/// `upper − |tr(XC)|` after validating `X`.
pub fn duality_gap(c: &SymMatrix, upper: f64, x: &CertificateX) -> Result<f64> {
    let tn = trace_norm_of(&x.x)?;
    let diag = x.x.diag_map().max_abs();
    if (tn - 1.0).abs() > 1e-10 || diag > 1e-10 * tn {
        return Err(Error::InvalidCertificate(format!(
            "need zero diagonal and unit trace norm, got max|X_kk| = {diag:e}, ‖X‖₁ = {tn}"
        )));
    }
    Ok(upper - x.evaluate(c).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Relative tolerance for balance and certificate residuals.
    pub tol: f64,
    pub cluster_tol: f64,
    pub hull_tol: f64,
    /// Column at which to evaluate the orthogonal-column hypotheses, if any.
    pub caso3_column: Option<usize>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { tol: 1e-6, cluster_tol: DEFAULT_CLUSTER_TOL, hull_tol: DEFAULT_HULL_TOL, caso3_column: None }
    }
}

/// Everything the decision procedure found for `C + D₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub n: usize,
    pub operator_norm: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub balance: BalanceReport,
    pub rank_plus: usize,
    pub rank_minus: usize,
    pub hull: HullOutcome,
    pub certificate: Option<CertificateX>,
    pub certificate_check: Option<CertificateVerdict>,
    /// `tr(XC)`, equal to `tr(X(C + D₁))` for a zero-diagonal `X`.
    pub value_without_diag: Option<f64>,
    /// `|tr(X(C + D₁)) − tr(XC)|`.
    pub value_difference: Option<f64>,
    pub caso3: Option<Caso3Report>,
    /// A verified certificate exists.
    pub has_certificate: bool,
    /// Balanced spectrum and intersecting hulls.
    pub balanced_and_hull: bool,
    pub minimal: bool,
}

/// Decides minimality of `C + D₁`.
pub fn certify(c: &SymMatrix, d1: &DiagVector, opts: &CertifyOptions) -> Result<CertifyReport> {
    let a = c.add_diag(d1)?;
    let es = eig_sym(&a)?;
    let balance = balance_from_values(&es.eigenvalues, opts.tol);
    let proj = spectral_projections(&es, opts.cluster_tol)?;
    let hull = hull_intersection(&proj, opts.hull_tol)?;
    let mut certificate = None;
    let mut certificate_check = None;
    let mut value_without_diag = None;
    let mut value_difference = None;
    if let Some(w) = hull.witness() {
        let cert = build_certificate(&a, &proj, w, f64::INFINITY)?;
        let check = verify_certificate(c, d1, &cert, opts.tol, opts.cluster_tol)?;
        let plain = cert.evaluate(c);
        value_without_diag = Some(plain);
        value_difference = Some((cert.value - plain).abs());
        certificate_check = Some(check);
        certificate = Some(cert);
    }
    let caso3 = opts.caso3_column.map(|i0| verify_caso3(&a, i0)).transpose()?;
    let has_certificate = certificate_check.is_some_and(|v| v.holds);
    let balanced_and_hull = balance.balanced && hull.is_intersecting();
    Ok(CertifyReport {
        n: a.n(),
        operator_norm: proj.norm,
        lambda_max: proj.lambda_max,
        lambda_min: proj.lambda_min,
        balance,
        rank_plus: proj.rank_plus(),
        rank_minus: proj.rank_minus(),
        hull,
        certificate,
        certificate_check,
        value_without_diag,
        value_difference,
        caso3,
        has_certificate,
        balanced_and_hull,
        minimal: has_certificate && balanced_and_hull,
    })
}

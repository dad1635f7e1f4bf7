use std::fmt;
use std::fs;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use mindiag::approx_solver::{
    min_diag_norm, oracle_grid_with, sweep_quotient_norm, write_sweep_csv, ApproxResult, SolverOptions, Status,
};
use mindiag::certificates::{certify, duality_gap, CertifyOptions, CertifyReport};
use mindiag::operator_core::{load_matrix, GammaFamilySpec, MatrixFile, Metadata, Variant};
use mindiag::{DiagVector, Error, Execution, SymMatrix};

use crate::{ApproxArgs, CertifyArgs, Command, GenArgs, OracleArgs, OutputArgs, SolveArgs, SweepArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_LOAD: u8 = 3;
pub const EXIT_ITER_CAP: u8 = 4;
pub const EXIT_DEGENERATE: u8 = 5;
pub const EXIT_SIZE: u8 = 6;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Load { path: String, source: Error },
    Lib(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Load { .. } => EXIT_LOAD,
            CliError::Lib(e) => match e {
                Error::Parameter(_) | Error::IndexOutOfRange { .. } => EXIT_USAGE,
                Error::DegenerateSpectrum(_) => EXIT_DEGENERATE,
                Error::Size { .. } => EXIT_SIZE,
                _ => EXIT_OTHER,
            },
            CliError::Io(_) => EXIT_OTHER,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Load { path, source } => write!(f, "cannot load {path}: {source}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> CliResult<u8> {
    match cmd {
        Command::Gen(a) => gen(&a),
        Command::Approx(a) => approx(&a),
        Command::Certify(a) => certify_cmd(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Oracle(a) => oracle(&a),
    }
}

fn parse_variant(s: &str) -> CliResult<Variant> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        CliError::Usage(format!("unknown variant {s:?}; expected one of {}", names.join(", ")))
    })
}

fn family_spec(gamma: f64, n: usize, variant: &str) -> CliResult<GammaFamilySpec> {
    let variant = parse_variant(variant)?;
    GammaFamilySpec::new(gamma, n, variant).map_err(|e| CliError::Usage(e.to_string()))
}

fn load(path: &str) -> CliResult<SymMatrix> {
    load_matrix(path).map(|(m, _)| m).map_err(|source| CliError::Load { path: path.into(), source })
}

fn solver_options(s: &SolveArgs, execution: Execution) -> CliResult<SolverOptions> {
    let opts = SolverOptions {
        tol: s.tol,
        max_iters: s.max_iters,
        multistart: s.multistart,
        seed: s.seed,
        execution,
        ..SolverOptions::default()
    };
    opts.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(opts)
}

fn json_text<T: Serialize>(value: &T, pretty: bool) -> CliResult<String> {
    let mut s = if pretty { serde_json::to_string_pretty(value)? } else { serde_json::to_string(value)? };
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, out: Option<&str>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_report<T: Serialize>(report: &T, output: &OutputArgs) -> CliResult<()> {
    emit(&json_text(report, output.pretty)?, output.out.as_deref())
}

fn gen(a: &GenArgs) -> CliResult<u8> {
    let spec = family_spec(a.gamma, a.n, &a.variant)?;
    if a.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    let family = spec.family()?;
    let object = spec.build().map_err(|e| match e {
        Error::Parameter(m) => CliError::Usage(m),
        e => e.into(),
    })?;
    let tail = family.tail_bound(a.n);
    let r = match spec.variant {
        Variant::Tr | Variant::TrPlusD | Variant::R => Some(family.r_factor(a.n)?.r),
        _ => None,
    };
    let file = MatrixFile { n: a.n, entries: object.to_rows(), metadata: Some(Metadata::for_spec(&spec, r, Some(tail))) };
    emit(&json_text(&file, a.output.pretty)?, a.output.out.as_deref())?;
    eprintln!("tail bound beyond n = {}: {tail:.6e}", a.n);
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ApproxReport<'a> {
    command: &'static str,
    flags: &'a ApproxArgs,
    n: usize,
    upper: f64,
    lower: f64,
    gap: f64,
    d_star: &'a [f64],
    status: Status,
    lambda_sum_residual: f64,
    iterations: usize,
    /// `upper − |tr(XC)|` for the returned certificate.
    certified_gap: Option<f64>,
    certificate: Option<&'a [Vec<f64>]>,
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Converged => EXIT_OK,
        Status::IterCap => EXIT_ITER_CAP,
        Status::Degenerate => EXIT_DEGENERATE,
    }
}

fn approx(a: &ApproxArgs) -> CliResult<u8> {
    let opts = solver_options(&a.solve, Execution::Sequential)?;
    let c = load(&a.input)?;
    let r: ApproxResult = min_diag_norm(&c, &opts)?;
    let certified_gap = r.certificate.as_ref().map(|x| duality_gap(&c, r.upper, x)).transpose()?;
    let cert_rows = r.certificate.as_ref().map(|x| x.x.to_rows());
    let report = ApproxReport {
        command: "approx",
        flags: a,
        n: c.n(),
        upper: r.upper,
        lower: r.lower,
        gap: r.gap,
        d_star: r.d_star.as_slice(),
        status: r.status,
        lambda_sum_residual: r.lambda_sum_residual,
        iterations: r.iterations,
        certified_gap,
        certificate: cert_rows.as_deref(),
    };
    emit_report(&report, &a.output)?;
    if a.output.pretty {
        eprintln!("upper {:.12} lower {:.12} gap {:.3e} ({:?})", r.upper, r.lower, r.gap, r.status);
    }
    if r.status == Status::Degenerate {
        eprintln!("mindiag: no certificate could be formed; the extreme eigenspaces are degenerate");
    }
    Ok(status_code(r.status))
}

/// Diagonal from `{"d": [...]}`, `{"d_star": [...]}` or a matrix file.
fn load_diag(path: &str, n: usize) -> CliResult<DiagVector> {
    let load_err = |source: Error| CliError::Load { path: path.into(), source };
    let text = fs::read_to_string(path).map_err(|e| load_err(e.into()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| load_err(e.into()))?;
    let entries: Vec<f64> = if let Some(v) = value.get("d").or_else(|| value.get("d_star")) {
        serde_json::from_value(v.clone()).map_err(|e| load_err(e.into()))?
    } else {
        let file: MatrixFile = serde_json::from_value(value).map_err(|e| load_err(e.into()))?;
        let m = file.to_sym().map_err(load_err)?;
        m.diag_map().into_vec()
    };
    if entries.len() != n {
        return Err(load_err(Error::Dimension { expected: n, got: entries.len() }));
    }
    DiagVector::new(entries).map_err(load_err)
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    command: &'static str,
    flags: &'a CertifyArgs,
    verdict: &'static str,
    /// A zero-diagonal trace-norm-one X attains ‖C + D₁‖.
    certificate_attains_norm: bool,
    /// λmax = −λmin and the convex hulls of the squared moduli meet.
    balanced_and_hulls_meet: bool,
    report: &'a CertifyReport,
}

fn certify_cmd(a: &CertifyArgs) -> CliResult<u8> {
    if a.i0 == Some(0) {
        return Err(CliError::Usage("--i0 is 1-based".into()));
    }
    let c = load(&a.input)?;
    let d1 = match &a.diag {
        Some(p) => load_diag(p, c.n())?,
        None => DiagVector::zeros(c.n()),
    };
    let opts = CertifyOptions {
        tol: a.tol,
        cluster_tol: a.cluster_tol,
        hull_tol: a.hull_tol,
        caso3_column: a.i0.map(|i| i - 1),
    };
    let report = certify(&c, &d1, &opts)?;
    let out = CertifyOutput {
        command: "certify",
        flags: a,
        verdict: if report.minimal { "minimal" } else { "not minimal" },
        certificate_attains_norm: report.has_certificate,
        balanced_and_hulls_meet: report.balanced_and_hull,
        report: &report,
    };
    emit_report(&out, &a.output)?;
    if a.output.pretty {
        eprintln!(
            "{}: balance residual {:.3e}, hull {}, certificate {}",
            out.verdict,
            report.balance.residual,
            if report.hull.is_intersecting() { "meets" } else { "separated" },
            if report.has_certificate { "verified" } else { "absent" }
        );
    }
    Ok(EXIT_OK)
}

fn sweep(a: &SweepArgs) -> CliResult<u8> {
    let first = a.n_list.first().copied().unwrap_or(1);
    let spec = family_spec(a.gamma, first.max(1), &a.variant)?;
    if a.n_list.contains(&0) {
        return Err(CliError::Usage("sizes in --n-list must be at least 1".into()));
    }
    if a.track_diag.contains(&0) {
        return Err(CliError::Usage("--track-diag indices are 1-based".into()));
    }
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let opts = solver_options(&a.solve, Execution::Sequential)?;
    let track: Vec<usize> = a.track_diag.iter().map(|k| k - 1).collect();
    let rows = run_sweep(&spec, &a.n_list, &opts, a.jobs)?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows, &track)?;
    emit(&String::from_utf8(csv).expect("csv output is utf-8"), a.out.as_deref())?;
    if a.pretty {
        for r in &rows {
            eprintln!("n = {:4}: upper {:.12} gap {:.3e} ({:?})", r.n, r.upper, r.gap, r.status);
        }
    }
    let worst = rows.iter().map(|r| status_code(r.status)).max().unwrap_or(EXIT_OK);
    Ok(worst)
}

#[cfg(feature = "parallel")]
fn run_sweep(
    spec: &GammaFamilySpec,
    n_list: &[usize],
    opts: &SolverOptions,
    jobs: usize,
) -> CliResult<Vec<mindiag::approx_solver::SweepRow>> {
    if jobs == 1 {
        return Ok(sweep_quotient_norm(spec, n_list, opts, Execution::Sequential)?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    Ok(pool.install(|| sweep_quotient_norm(spec, n_list, opts, Execution::Parallel))?)
}

#[cfg(not(feature = "parallel"))]
fn run_sweep(
    spec: &GammaFamilySpec,
    n_list: &[usize],
    opts: &SolverOptions,
    _jobs: usize,
) -> CliResult<Vec<mindiag::approx_solver::SweepRow>> {
    Ok(sweep_quotient_norm(spec, n_list, opts, Execution::Sequential)?)
}

#[derive(Serialize)]
struct OracleReport<'a> {
    command: &'static str,
    flags: &'a OracleArgs,
    value: f64,
    d: &'a [f64],
    radius: f64,
    levels: usize,
}

fn oracle(a: &OracleArgs) -> CliResult<u8> {
    let c = load(&a.input)?;
    let r = oracle_grid_with(&c, a.radius, a.levels, Execution::Sequential)?;
    let report = OracleReport { command: "oracle", flags: a, value: r.value, d: &r.d, radius: r.radius, levels: r.levels };
    emit_report(&report, &a.output)?;
    if a.output.pretty {
        eprintln!("oracle distance {:.12}", r.value);
    }
    Ok(EXIT_OK)
}

//! Command implementations. Each `run_*` function does the numeric work
//! and returns a structured outcome; rendering to text, key-value files
//! and manifests happens in the callers so the same paths are exercised
//! in-process by the test suites.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use mgsn::{
    gaussian_fit, lrt_diagonal, lrt_normality, lrt_symmetry, mgsn_logpdf, mgsn_moments,
    moment_relation, profile_fit, profile_fit_variant, sample_mgsn, Constraint, DataMatrix,
    EmControl, FitResult, LrtResult, MgsnParams, MomentSummary, RngStream, SeriesControl,
    SymMatrix, TailFamily,
};

use crate::error::{CliError, CliResult};
use crate::io::{self, kv, kv_matrix, kv_vector};
use crate::manifest::RunManifest;
use crate::stiffness::stiffness_data;

/// Where fitting input comes from.
#[derive(Debug, Clone)]
pub enum InputSource {
    Csv(PathBuf),
    Stiffness { raw: bool },
}

impl InputSource {
    pub fn load(&self) -> CliResult<DataMatrix> {
        match self {
            InputSource::Csv(path) => io::read_csv(path),
            InputSource::Stiffness { raw } => Ok(stiffness_data(*raw)),
        }
    }

    fn describe(&self) -> String {
        match self {
            InputSource::Csv(p) => p.display().to_string(),
            InputSource::Stiffness { raw: true } => "stiffness (raw)".into(),
            InputSource::Stiffness { raw: false } => "stiffness (/100)".into(),
        }
    }
}

/// Series/EM controls resolved from `--paper-mode`.
pub fn resolve_controls(paper_mode: bool) -> (EmControl, SeriesControl) {
    if paper_mode {
        (EmControl::paper(), SeriesControl::paper())
    } else {
        (EmControl::default(), SeriesControl::default())
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join("  ")
}

fn fmt_matrix(m: &SymMatrix, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim()).map(|j| format!("{:10.6}", m.get(i, j))).collect();
        let _ = writeln!(out, "{indent}{}", row.join("  "));
    }
    out
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub params: MgsnParams,
    pub n: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub struct SimulateOutcome {
    pub csv: String,
    pub manifest: RunManifest,
}

pub fn run_simulate(args: &SimulateArgs) -> CliResult<SimulateOutcome> {
    if args.n == 0 {
        return Err(CliError::Input("--n must be >= 1".into()));
    }
    let start = Instant::now();
    let mut rng = RngStream::new(args.seed, 0);
    let draws = sample_mgsn(&mut rng, &args.params, args.n);
    let csv = io::matrix_to_csv(&draws);
    let mut manifest = RunManifest::new("simulate");
    manifest.seed = Some(args.seed);
    let sctl = SeriesControl::default();
    manifest.series_k_max = sctl.k_max;
    manifest.series_rel_tol = sctl.rel_tol;
    manifest
        .flag("p", args.params.p())
        .flag("n", args.n)
        .flag("d", args.params.dim())
        .flag("out", args.out.as_ref().map_or("-".into(), |p| p.display().to_string()));
    manifest.wall_clock = start.elapsed();
    Ok(SimulateOutcome { csv, manifest })
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintArg {
    None,
    MuZero,
    Diag,
    Normal,
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub input: InputSource,
    pub constraint: ConstraintArg,
    pub grid: Vec<f64>,
    pub paper_mode: bool,
}

pub struct FitOutcome {
    pub n: usize,
    pub d: usize,
    pub fit: FitResult,
    pub manifest: RunManifest,
}

pub fn run_fit(args: &FitArgs) -> CliResult<FitOutcome> {
    let start = Instant::now();
    let data = args.input.load()?;
    let (em, series) = resolve_controls(args.paper_mode);
    let fit = match args.constraint {
        ConstraintArg::Normal => gaussian_fit(&data)?,
        ConstraintArg::None => profile_fit(&data, &args.grid, &em, &series)?,
        ConstraintArg::MuZero => {
            profile_fit_variant(&data, &args.grid, Constraint::MuZero, &em, &series)?
        }
        ConstraintArg::Diag => {
            profile_fit_variant(&data, &args.grid, Constraint::DiagSigma, &em, &series)?
        }
    };
    let mut manifest = RunManifest::new("fit");
    manifest.series_k_max = series.k_max;
    manifest.series_rel_tol = series.rel_tol;
    manifest.em_max_iter = Some(em.max_iter);
    manifest.em_rel_tol = Some(em.rel_tol);
    manifest.paper_mode = args.paper_mode;
    manifest
        .flag("input", args.input.describe())
        .flag(
            "constraint",
            match args.constraint {
                ConstraintArg::None => "none",
                ConstraintArg::MuZero => "mu0",
                ConstraintArg::Diag => "diag",
                ConstraintArg::Normal => "normal",
            },
        )
        .flag("grid_points", args.grid.len());
    manifest.wall_clock = start.elapsed();
    Ok(FitOutcome { n: data.n_rows(), d: data.n_cols(), fit, manifest })
}

pub fn render_fit(outcome: &FitOutcome) -> String {
    let fit = &outcome.fit;
    let mut out = String::new();
    let _ = writeln!(out, "fit report");
    let _ = writeln!(out, "  input shape   {} x {}", outcome.n, outcome.d);
    let _ = writeln!(out, "  constraint    {}", fit.constraint);
    let _ = writeln!(out, "  p_hat         {:.4}", fit.params.p());
    let _ = writeln!(out, "  loglik        {:.6}", fit.loglik);
    let _ = writeln!(out, "  iterations    {}", fit.n_iter);
    let _ = writeln!(out, "  converged     {}", fit.converged);
    let _ = writeln!(out, "  mu_hat        {}", fmt_vec(fit.params.mu()));
    let _ = writeln!(out, "  sigma_hat");
    out.push_str(&fmt_matrix(fit.params.sigma(), "    "));
    if !fit.profile_trace.is_empty() {
        let _ = writeln!(out, "profile trace");
        let _ = writeln!(out, "p,loglik");
        for (p, ll) in &fit.profile_trace {
            let _ = writeln!(out, "{p},{ll}");
        }
    }
    out
}

pub fn kv_fit(outcome: &FitOutcome) -> Vec<(String, String)> {
    let fit = &outcome.fit;
    let mut pairs = vec![
        kv("command", "fit"),
        kv("n", outcome.n),
        kv("d", outcome.d),
        kv("constraint", fit.constraint),
        kv("p_hat", fit.params.p()),
        kv("loglik", fit.loglik),
        kv("iterations", fit.n_iter),
        kv("converged", fit.converged),
    ];
    kv_vector(&mut pairs, "mu", fit.params.mu());
    kv_matrix(&mut pairs, "sigma", fit.params.sigma());
    for (i, (p, ll)) in fit.profile_trace.iter().enumerate() {
        pairs.push(kv(format!("profile[{i}].p"), p));
        pairs.push(kv(format!("profile[{i}].loglik"), ll));
    }
    pairs
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichTest {
    Normality,
    Symmetry,
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct TestArgs {
    pub input: InputSource,
    pub which: WhichTest,
    pub grid: Vec<f64>,
    pub paper_mode: bool,
}

pub struct TestOutcome {
    pub n: usize,
    pub d: usize,
    pub which: WhichTest,
    pub lrt: LrtResult,
    pub manifest: RunManifest,
}

pub fn run_test(args: &TestArgs) -> CliResult<TestOutcome> {
    let start = Instant::now();
    let data = args.input.load()?;
    let (em, series) = resolve_controls(args.paper_mode);
    let lrt = match args.which {
        WhichTest::Normality => lrt_normality(&data, &args.grid, &em, &series)?,
        WhichTest::Symmetry => lrt_symmetry(&data, &args.grid, &em, &series)?,
        WhichTest::Diagonal => lrt_diagonal(&data, &args.grid, &em, &series)?,
    };
    let mut manifest = RunManifest::new("test");
    manifest.series_k_max = series.k_max;
    manifest.series_rel_tol = series.rel_tol;
    manifest.em_max_iter = Some(em.max_iter);
    manifest.em_rel_tol = Some(em.rel_tol);
    manifest.paper_mode = args.paper_mode;
    manifest.flag("input", args.input.describe()).flag(
        "which",
        match args.which {
            WhichTest::Normality => "normality",
            WhichTest::Symmetry => "symmetry",
            WhichTest::Diagonal => "diagonal",
        },
    );
    manifest.wall_clock = start.elapsed();
    Ok(TestOutcome { n: data.n_rows(), d: data.n_cols(), which: args.which, lrt, manifest })
}

fn reference_name(lrt: &LrtResult) -> String {
    match lrt.reference.family {
        TailFamily::ChiSquare => format!("chi2({})", lrt.reference.df),
        TailFamily::HalfChiSquareMix => "0.5*delta0 + 0.5*chi2(1)".into(),
    }
}

pub fn render_test(outcome: &TestOutcome) -> String {
    let lrt = &outcome.lrt;
    let mut out = String::new();
    let _ = writeln!(out, "likelihood-ratio test report");
    let _ = writeln!(out, "  input shape   {} x {}", outcome.n, outcome.d);
    let which = match outcome.which {
        WhichTest::Normality => "normality (p = 1)",
        WhichTest::Symmetry => "symmetry (mu = 0)",
        WhichTest::Diagonal => "uncorrelatedness (diagonal sigma)",
    };
    let _ = writeln!(out, "  null          {which}");
    let _ = writeln!(out, "  statistic     {:.6}", lrt.statistic);
    let _ = writeln!(out, "  reference     {}", reference_name(lrt));
    let _ = writeln!(out, "  p_value       {:.6e}", lrt.p_value);
    if lrt.statistic == 0.0 && lrt.alt_fit.loglik < lrt.null_fit.loglik {
        let _ = writeln!(out, "  note          statistic clamped to zero from truncation noise");
    }
    let _ = writeln!(out, "alternative fit");
    let _ = writeln!(out, "  p_hat         {:.4}", lrt.alt_fit.params.p());
    let _ = writeln!(out, "  loglik        {:.6}", lrt.alt_fit.loglik);
    let _ = writeln!(out, "  mu_hat        {}", fmt_vec(lrt.alt_fit.params.mu()));
    let _ = writeln!(out, "  sigma_hat");
    out.push_str(&fmt_matrix(lrt.alt_fit.params.sigma(), "    "));
    let _ = writeln!(out, "null fit");
    let _ = writeln!(out, "  p_hat         {:.4}", lrt.null_fit.params.p());
    let _ = writeln!(out, "  loglik        {:.6}", lrt.null_fit.loglik);
    let _ = writeln!(out, "  mu_hat        {}", fmt_vec(lrt.null_fit.params.mu()));
    let _ = writeln!(out, "  sigma_hat");
    out.push_str(&fmt_matrix(lrt.null_fit.params.sigma(), "    "));
    out
}

pub fn kv_test(outcome: &TestOutcome) -> Vec<(String, String)> {
    let lrt = &outcome.lrt;
    let mut pairs = vec![
        kv("command", "test"),
        kv("statistic", lrt.statistic),
        kv("reference", reference_name(lrt)),
        kv("p_value", lrt.p_value),
        kv("alt.p_hat", lrt.alt_fit.params.p()),
        kv("alt.loglik", lrt.alt_fit.loglik),
        kv("null.p_hat", lrt.null_fit.params.p()),
        kv("null.loglik", lrt.null_fit.loglik),
    ];
    kv_vector(&mut pairs, "alt.mu", lrt.alt_fit.params.mu());
    kv_matrix(&mut pairs, "alt.sigma", lrt.alt_fit.params.sigma());
    kv_vector(&mut pairs, "null.mu", lrt.null_fit.params.mu());
    kv_matrix(&mut pairs, "null.sigma", lrt.null_fit.params.sigma());
    pairs
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

pub struct MomentsOutcome {
    pub params: MgsnParams,
    pub summary: MomentSummary,
    pub relation_gap: f64,
    pub manifest: RunManifest,
}

pub fn run_moments(params: &MgsnParams) -> CliResult<MomentsOutcome> {
    let start = Instant::now();
    let summary = mgsn_moments(params)?;
    let relation = moment_relation(params);
    let mut gap = 0.0_f64;
    for i in 0..params.dim() {
        gap = gap.max((summary.mean[i] - relation.mean[i]).abs());
        for j in 0..params.dim() {
            gap = gap.max((summary.covariance.get(i, j) - relation.dispersion.get(i, j)).abs());
        }
    }
    let mut manifest = RunManifest::new("moments");
    let sctl = SeriesControl::default();
    manifest.series_k_max = sctl.k_max;
    manifest.series_rel_tol = sctl.rel_tol;
    manifest.flag("p", params.p()).flag("d", params.dim());
    manifest.wall_clock = start.elapsed();
    Ok(MomentsOutcome { params: params.clone(), summary, relation_gap: gap, manifest })
}

pub fn render_moments(outcome: &MomentsOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "moment report");
    let _ = writeln!(out, "  p             {:.4}", outcome.params.p());
    let _ = writeln!(out, "  mean          {}", fmt_vec(&outcome.summary.mean));
    let _ = writeln!(out, "  covariance");
    out.push_str(&fmt_matrix(&outcome.summary.covariance, "    "));
    let _ = writeln!(out, "  correlation");
    out.push_str(&fmt_matrix(&outcome.summary.correlation, "    "));
    let _ = writeln!(out, "  mardia_beta1  {:.6}", outcome.summary.mardia_beta1);
    let _ = writeln!(
        out,
        "  relation check  max |moments - relation| = {:.3e}",
        outcome.relation_gap
    );
    out
}

pub fn kv_moments(outcome: &MomentsOutcome) -> Vec<(String, String)> {
    let mut pairs = vec![
        kv("command", "moments"),
        kv("p", outcome.params.p()),
        kv("mardia_beta1", outcome.summary.mardia_beta1),
        kv("relation_gap", outcome.relation_gap),
    ];
    kv_vector(&mut pairs, "mean", &outcome.summary.mean);
    kv_matrix(&mut pairs, "covariance", &outcome.summary.covariance);
    kv_matrix(&mut pairs, "correlation", &outcome.summary.correlation);
    pairs
}

// ---------------------------------------------------------------------------
// pdf-grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PdfGridArgs {
    pub params: MgsnParams,
    /// `[x0, x1, y0, y1]`; computed from the moments when absent.
    pub range: Option<[f64; 4]>,
    pub steps: usize,
    pub paper_mode: bool,
}

pub struct PdfGridOutcome {
    pub csv: String,
    pub manifest: RunManifest,
}

pub fn run_pdf_grid(args: &PdfGridArgs) -> CliResult<PdfGridOutcome> {
    let start = Instant::now();
    if args.params.dim() != 2 {
        return Err(CliError::Input(format!(
            "pdf-grid needs a bivariate parameter set, got d = {}",
            args.params.dim()
        )));
    }
    if args.steps < 2 {
        return Err(CliError::Input("--steps must be >= 2".into()));
    }
    let range = match args.range {
        Some(r) => {
            if !(r[0] < r[1] && r[2] < r[3]) {
                return Err(CliError::Input("range must satisfy x0 < x1 and y0 < y1".into()));
            }
            r
        }
        None => {
            let m = mgsn_moments(&args.params)?;
            let hx = 8.0 * m.covariance.get(0, 0).sqrt();
            let hy = 8.0 * m.covariance.get(1, 1).sqrt();
            [m.mean[0] - hx, m.mean[0] + hx, m.mean[1] - hy, m.mean[1] + hy]
        }
    };
    let sctl = if args.paper_mode { SeriesControl::paper() } else { SeriesControl::default() };
    let hx = (range[1] - range[0]) / (args.steps - 1) as f64;
    let hy = (range[3] - range[2]) / (args.steps - 1) as f64;
    let mut csv = String::from("x,y,pdf\n");
    for i in 0..args.steps {
        let x = range[0] + i as f64 * hx;
        for j in 0..args.steps {
            let y = range[2] + j as f64 * hy;
            let pdf = mgsn_logpdf(&[x, y], &args.params, &sctl)?.exp();
            let _ = writeln!(csv, "{x},{y},{pdf}");
        }
    }
    let mut manifest = RunManifest::new("pdf-grid");
    manifest.series_k_max = sctl.k_max;
    manifest.series_rel_tol = sctl.rel_tol;
    manifest.paper_mode = args.paper_mode;
    manifest
        .flag("p", args.params.p())
        .flag("steps", args.steps)
        .flag("range", format!("{}:{}:{}:{}", range[0], range[1], range[2], range[3]));
    manifest.wall_clock = start.elapsed();
    Ok(PdfGridOutcome { csv, manifest })
}

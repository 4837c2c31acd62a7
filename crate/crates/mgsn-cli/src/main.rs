use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mgsn::{MgsnParams, SymMatrix};
use mgsn_cli::bench::{kv_bench, render_bench, run_bench, BenchArgs};
use mgsn_cli::commands::{
    kv_fit, kv_moments, kv_test, render_fit, render_moments, render_test, run_fit, run_moments,
    run_pdf_grid, run_simulate, run_test, ConstraintArg, FitArgs, InputSource, PdfGridArgs,
    SimulateArgs, TestArgs, WhichTest,
};
use mgsn_cli::error::{CliError, CliResult};
use mgsn_cli::io::{kv, parse_grid, parse_matrix, parse_vector, read_matrix_file, render_kv};
use mgsn_cli::manifest::RunManifest;

/// Multivariate geometric skew-normal toolkit: simulation, fitting,
/// hypothesis tests, moment summaries and density grids.
#[derive(Parser)]
#[command(name = "mgsn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples and write them as CSV.
    Simulate(SimulateCli),
    /// Fit by profile likelihood over p with EM inner loops.
    Fit(FitCli),
    /// Run a likelihood-ratio test.
    Test(TestCli),
    /// Print mean, covariance, correlation and skewness summaries.
    Moments(MomentsCli),
    /// Evaluate the density on a regular bivariate grid.
    PdfGrid(PdfGridCli),
    /// Re-run the simulation-study tables and compare against the
    /// published values.
    BenchTables(BenchCli),
}

#[derive(Args)]
struct ParamFlags {
    /// Geometric parameter in (0, 1].
    #[arg(long)]
    p: f64,
    /// Location increment, comma-separated (e.g. 0,0,1,1).
    #[arg(long, allow_hyphen_values = true)]
    mu: String,
    /// Dispersion increment, rows separated by ';' (e.g. 1,0;0,1).
    #[arg(long, conflicts_with = "sigma_file", allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Dispersion increment from a text file, one row per line.
    #[arg(long)]
    sigma_file: Option<PathBuf>,
}

impl ParamFlags {
    fn build(&self) -> CliResult<MgsnParams> {
        let mu = parse_vector(&self.mu)?;
        let sigma: SymMatrix = match (&self.sigma, &self.sigma_file) {
            (Some(s), _) => parse_matrix(s)?,
            (None, Some(path)) => read_matrix_file(path)?,
            (None, None) => return Err(CliError::Input("need --sigma or --sigma-file".into())),
        };
        MgsnParams::new(self.p, mu, sigma).map_err(CliError::from)
    }
}

#[derive(Args)]
struct InputFlags {
    /// Input observations as CSV with a header row.
    #[arg(long, conflicts_with = "stiffness")]
    input: Option<PathBuf>,
    /// Use the embedded board-stiffness dataset.
    #[arg(long)]
    stiffness: bool,
    /// With --stiffness: keep raw units instead of dividing by 100.
    #[arg(long, requires = "stiffness")]
    raw: bool,
}

impl InputFlags {
    fn source(&self) -> CliResult<InputSource> {
        match (&self.input, self.stiffness) {
            (Some(path), false) => Ok(InputSource::Csv(path.clone())),
            (None, true) => Ok(InputSource::Stiffness { raw: self.raw }),
            (None, false) => Err(CliError::Input("need --input or --stiffness".into())),
            (Some(_), true) => unreachable!("clap conflict"),
        }
    }
}

#[derive(Args)]
struct SimulateCli {
    #[command(flatten)]
    params: ParamFlags,
    /// Number of draws.
    #[arg(long)]
    n: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ConstraintCli {
    None,
    Mu0,
    Diag,
    Normal,
}

#[derive(Args)]
struct FitCli {
    #[command(flatten)]
    input: InputFlags,
    /// Parameter restriction for the fit.
    #[arg(long, value_enum, default_value_t = ConstraintCli::None)]
    constraint: ConstraintCli,
    /// Profile grid as start:step:end within (0, 1].
    #[arg(long, default_value = "0.02:0.02:1.0")]
    grid: String,
    /// Fixed-depth evaluation: 50 series terms, 20 EM iterations,
    /// fresh initial guesses per grid point, no refinement.
    #[arg(long)]
    paper_mode: bool,
    /// Write a key = value report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum WhichCli {
    Normality,
    Symmetry,
    Diagonal,
}

#[derive(Args)]
struct TestCli {
    #[command(flatten)]
    input: InputFlags,
    /// Which null hypothesis to test.
    #[arg(long, value_enum)]
    which: WhichCli,
    /// Profile grid as start:step:end within (0, 1].
    #[arg(long, default_value = "0.02:0.02:1.0")]
    grid: String,
    /// Fixed-depth evaluation (see `fit`).
    #[arg(long)]
    paper_mode: bool,
    /// Write a key = value report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MomentsCli {
    #[command(flatten)]
    params: ParamFlags,
    /// Write a key = value report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PdfGridCli {
    /// Geometric parameter in (0, 1].
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    p: Option<f64>,
    /// Location increment (two entries).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset", allow_hyphen_values = true)]
    mu: Option<String>,
    /// Dispersion increment, rows separated by ';'.
    #[arg(long, conflicts_with = "preset", allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Dispersion increment from a file.
    #[arg(long, conflicts_with_all = ["preset", "sigma"])]
    sigma_file: Option<PathBuf>,
    /// Built-in bivariate parameter set: a, b, c or d.
    #[arg(long)]
    preset: Option<char>,
    /// Evaluation window as x0:x1:y0:y1 (moment-based when omitted).
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Fixed 50-term series evaluation.
    #[arg(long)]
    paper_mode: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchCli {
    /// Reference table to regenerate: 1, 2, 3 or 4.
    #[arg(long)]
    table: u8,
    /// Replications (the published study used 1000).
    #[arg(long, default_value_t = 100)]
    replications: usize,
    /// RNG seed; replication r uses stream id r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 4)]
    threads: usize,
    /// Write a key = value report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(CliError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit_kv_file(
    path: &Option<PathBuf>,
    mut pairs: Vec<(String, String)>,
    manifest: &RunManifest,
) -> CliResult<()> {
    if let Some(p) = path {
        pairs.extend(manifest.kv_lines());
        std::fs::write(p, render_kv(&pairs))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => {
            let params = args.params.build()?;
            let outcome = run_simulate(&SimulateArgs {
                params,
                n: args.n,
                seed: args.seed,
                out: args.out.clone(),
            })?;
            write_or_print(&args.out, &outcome.csv)?;
            eprint!("{}", outcome.manifest.render());
            Ok(())
        }
        Command::Fit(args) => {
            let outcome = run_fit(&FitArgs {
                input: args.input.source()?,
                constraint: match args.constraint {
                    ConstraintCli::None => ConstraintArg::None,
                    ConstraintCli::Mu0 => ConstraintArg::MuZero,
                    ConstraintCli::Diag => ConstraintArg::Diag,
                    ConstraintCli::Normal => ConstraintArg::Normal,
                },
                grid: parse_grid(&args.grid)?,
                paper_mode: args.paper_mode,
            })?;
            print!("{}", render_fit(&outcome));
            emit_kv_file(&args.out, kv_fit(&outcome), &outcome.manifest)?;
            eprint!("{}", outcome.manifest.render());
            Ok(())
        }
        Command::Test(args) => {
            let outcome = run_test(&TestArgs {
                input: args.input.source()?,
                which: match args.which {
                    WhichCli::Normality => WhichTest::Normality,
                    WhichCli::Symmetry => WhichTest::Symmetry,
                    WhichCli::Diagonal => WhichTest::Diagonal,
                },
                grid: parse_grid(&args.grid)?,
                paper_mode: args.paper_mode,
            })?;
            print!("{}", render_test(&outcome));
            emit_kv_file(&args.out, kv_test(&outcome), &outcome.manifest)?;
            eprint!("{}", outcome.manifest.render());
            Ok(())
        }
        Command::Moments(args) => {
            let params = args.params.build()?;
            let outcome = run_moments(&params)?;
            print!("{}", render_moments(&outcome));
            emit_kv_file(&args.out, kv_moments(&outcome), &outcome.manifest)?;
            eprint!("{}", outcome.manifest.render());
            Ok(())
        }
        Command::PdfGrid(args) => {
            let params = match args.preset {
                Some(tag) => mgsn::bivariate_preset(tag)
                    .ok_or_else(|| CliError::Input(format!("unknown preset {tag:?}")))?,
                None => {
                    let mu = parse_vector(args.mu.as_deref().unwrap_or_default())?;
                    let sigma = match (&args.sigma, &args.sigma_file) {
                        (Some(s), _) => parse_matrix(s)?,
                        (None, Some(f)) => read_matrix_file(f)?,
                        (None, None) => {
                            return Err(CliError::Input("need --sigma or --sigma-file".into()))
                        }
                    };
                    MgsnParams::new(args.p.unwrap_or_default(), mu, sigma)?
                }
            };
            let range = match &args.range {
                Some(spec) => {
                    let parts: Vec<&str> = spec.split(':').collect();
                    if parts.len() != 4 {
                        return Err(CliError::Input(format!(
                            "range must be x0:x1:y0:y1, got {spec:?}"
                        )));
                    }
                    let mut vals = [0.0; 4];
                    for (slot, part) in vals.iter_mut().zip(&parts) {
                        *slot = part.trim().parse().map_err(|_| {
                            CliError::Input(format!("bad range number {part:?}"))
                        })?;
                    }
                    Some(vals)
                }
                None => None,
            };
            let outcome = run_pdf_grid(&PdfGridArgs {
                params,
                range,
                steps: args.steps,
                paper_mode: args.paper_mode,
            })?;
            write_or_print(&args.out, &outcome.csv)?;
            eprint!("{}", outcome.manifest.render());
            Ok(())
        }
        Command::BenchTables(args) => {
            let outcome = run_bench(&BenchArgs {
                table: args.table,
                replications: args.replications,
                seed: args.seed,
                threads: args.threads,
            })?;
            print!("{}", render_bench(&outcome));
            let mut pairs = kv_bench(&outcome);
            pairs.push(kv("seed", args.seed));
            emit_kv_file(&args.out, pairs, &outcome.manifest)?;
            eprint!("{}", outcome.manifest.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

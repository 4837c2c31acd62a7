//! The simulation-study benchmark: regenerates the four reference-table
//! configurations (n = 100, d = 4, p in {0.5, 0.75}, known or profiled
//! p), runs the full pipeline per replication on its own random stream,
//! and reports average estimates and mean squared errors side by side
//! with the published values.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use mgsn::{
    em_fit_fixed_p, profile_fit, sample_mgsn, EmControl, MgsnParams, RngStream, SeriesControl,
    SymMatrix,
};

use crate::error::{CliError, CliResult};
use crate::io::kv;
use crate::manifest::RunManifest;

/// Study configuration shared by all four tables.
pub fn study_params(p: f64) -> MgsnParams {
    let sigma = SymMatrix::from_rows(&[
        vec![2.0, 2.0, 1.0, 0.0],
        vec![2.0, 3.0, 2.0, 1.0],
        vec![1.0, 2.0, 3.0, 2.0],
        vec![0.0, 1.0, 2.0, 2.0],
    ])
    .expect("study dispersion is symmetric");
    MgsnParams::new(p, vec![0.0, 0.0, 1.0, 1.0], sigma).expect("study dispersion is PD")
}

pub const STUDY_N: usize = 100;

/// Published reference row: average estimate and mean squared error.
#[derive(Debug, Clone, Copy)]
pub struct RefStat {
    pub avg: f64,
    pub mse: f64,
}

/// Published reference values for one table.
pub struct RefTable {
    pub p: f64,
    pub p_known: bool,
    pub mu: [RefStat; 4],
    pub sigma: [[RefStat; 4]; 4],
    pub p_hat: Option<RefStat>,
}

const fn rs(avg: f64, mse: f64) -> RefStat {
    RefStat { avg, mse }
}

pub fn reference_table(table: u8) -> Option<RefTable> {
    match table {
        1 => Some(RefTable {
            p: 0.5,
            p_known: true,
            mu: [rs(0.0053, 0.0984), rs(0.0047, 0.1213), rs(1.0097, 0.1430), rs(1.0055, 0.1237)],
            sigma: [
                [rs(2.0024, 0.3299), rs(1.9984, 0.3602), rs(0.9942, 0.2879), rs(-0.0060, 0.2262)],
                [rs(1.9984, 0.3602), rs(2.9922, 0.4932), rs(1.9907, 0.4130), rs(0.9907, 0.3092)],
                [rs(0.9942, 0.2879), rs(1.9907, 0.4130), rs(2.9757, 0.5350), rs(1.9823, 0.4054)],
                [rs(-0.0060, 0.2262), rs(0.9907, 0.3092), rs(1.9823, 0.4054), rs(1.9859, 0.3675)],
            ],
            p_hat: None,
        }),
        2 => Some(RefTable {
            p: 0.5,
            p_known: false,
            mu: [
                rs(-0.0067, 0.1029),
                rs(-0.0079, 0.1255),
                rs(1.0094, 0.1553),
                rs(1.0122, 0.1390),
            ],
            sigma: [
                [rs(2.0105, 0.3579), rs(2.0103, 0.3964), rs(1.0055, 0.3165), rs(0.0011, 0.2377)],
                [rs(2.0103, 0.3964), rs(3.0194, 0.5420), rs(2.0095, 0.4443), rs(1.0091, 0.3233)],
                [rs(1.0055, 0.3165), rs(2.0095, 0.4443), rs(2.9987, 0.5577), rs(2.0006, 0.4161)],
                [rs(0.0011, 0.2377), rs(1.0091, 0.3233), rs(2.0006, 0.4161), rs(2.0058, 0.3827)],
            ],
            p_hat: Some(rs(0.5068, 0.0433)),
        }),
        3 => Some(RefTable {
            p: 0.75,
            p_known: true,
            mu: [rs(0.0057, 0.1205), rs(0.0046, 0.1481), rs(1.0118, 0.1605), rs(1.0068, 0.1350)],
            sigma: [
                [rs(2.0015, 0.3126), rs(1.9969, 0.3416), rs(0.9923, 0.2720), rs(-0.0065, 0.2099)],
                [rs(1.9969, 0.3416), rs(2.9906, 0.4645), rs(1.9887, 0.3875), rs(0.9898, 0.2907)],
                [rs(0.9923, 0.2720), rs(1.9897, 0.3875), rs(2.9778, 0.4848), rs(1.9864, 0.3864)],
                [rs(-0.0065, 0.2099), rs(0.9898, 0.2907), rs(1.9864, 0.3684), rs(1.9903, 0.3320)],
            ],
            p_hat: None,
        }),
        4 => Some(RefTable {
            p: 0.75,
            p_known: false,
            mu: [rs(0.0047, 0.1392), rs(0.0035, 0.1704), rs(1.0141, 0.1938), rs(1.0093, 0.1615)],
            sigma: [
                [rs(2.0183, 0.3793), rs(2.0258, 0.4260), rs(1.0263, 0.3453), rs(0.0121, 0.2620)],
                [rs(2.0258, 0.4260), rs(3.0351, 0.5807), rs(2.0272, 0.4842), rs(1.0088, 0.3448)],
                [rs(1.0263, 0.3453), rs(2.0272, 0.4842), rs(3.0120, 0.5897), rs(1.9961, 0.4256)],
                [rs(0.0121, 0.2620), rs(1.0088, 0.3448), rs(1.9961, 0.4256), rs(1.9892, 0.3726)],
            ],
            p_hat: Some(rs(0.7575, 0.0446)),
        }),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub table: u8,
    pub replications: usize,
    pub seed: u64,
    pub threads: usize,
}

/// One estimated quantity: the truth, our replication average and MSE,
/// and the published average and MSE.
pub struct BenchEntry {
    pub name: String,
    pub truth: f64,
    pub avg: f64,
    pub mse: f64,
    pub reference: RefStat,
}

pub struct BenchOutcome {
    pub table: u8,
    pub replications: usize,
    pub entries: Vec<BenchEntry>,
    pub failures: usize,
    pub manifest: RunManifest,
}

struct RepEstimate {
    mu: [f64; 4],
    sigma: [[f64; 4]; 4],
    p_hat: f64,
}

fn one_replication(
    rep: u64,
    seed: u64,
    truth: &MgsnParams,
    p_known: bool,
) -> mgsn::Result<RepEstimate> {
    let mut rng = RngStream::new(seed, rep);
    let data = sample_mgsn(&mut rng, truth, STUDY_N);
    let em = EmControl::default();
    let series = SeriesControl::default();
    let fit = if p_known {
        em_fit_fixed_p(&data, truth.p(), None, &em, &series)?
    } else {
        profile_fit(&data, &mgsn::default_p_grid(), &em, &series)?
    };
    let mut mu = [0.0; 4];
    let mut sigma = [[0.0; 4]; 4];
    for i in 0..4 {
        mu[i] = fit.params.mu()[i];
        for j in 0..4 {
            sigma[i][j] = fit.params.sigma().get(i, j);
        }
    }
    Ok(RepEstimate { mu, sigma, p_hat: fit.params.p() })
}

pub fn run_bench(args: &BenchArgs) -> CliResult<BenchOutcome> {
    let reference = reference_table(args.table)
        .ok_or_else(|| CliError::Input(format!("no reference table {}", args.table)))?;
    if args.replications < 10 {
        return Err(CliError::Input("--replications must be >= 10".into()));
    }
    let start = Instant::now();
    let truth = study_params(reference.p);
    let run_all = || -> Vec<mgsn::Result<RepEstimate>> {
        (0..args.replications as u64)
            .into_par_iter()
            .map(|rep| one_replication(rep, args.seed, &truth, reference.p_known))
            .collect()
    };
    let results = if args.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
        pool.install(run_all)
    } else {
        run_all()
    };
    let estimates: Vec<&RepEstimate> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = results.len() - estimates.len();
    if estimates.is_empty() {
        return Err(CliError::Numeric("every replication failed".into()));
    }
    let m = estimates.len() as f64;
    let mut entries = Vec::new();
    let mut push_entry = |name: String, truth_v: f64, values: Vec<f64>, reference: RefStat| {
        let avg = values.iter().sum::<f64>() / m;
        let mse = values.iter().map(|v| (v - truth_v) * (v - truth_v)).sum::<f64>() / m;
        entries.push(BenchEntry { name, truth: truth_v, avg, mse, reference });
    };
    for i in 0..4 {
        push_entry(
            format!("mu[{i}]"),
            truth.mu()[i],
            estimates.iter().map(|e| e.mu[i]).collect(),
            reference.mu[i],
        );
    }
    for i in 0..4 {
        for j in i..4 {
            push_entry(
                format!("sigma[{i}][{j}]"),
                truth.sigma().get(i, j),
                estimates.iter().map(|e| e.sigma[i][j]).collect(),
                reference.sigma[i][j],
            );
        }
    }
    if let Some(p_ref) = reference.p_hat {
        push_entry(
            "p".into(),
            reference.p,
            estimates.iter().map(|e| e.p_hat).collect(),
            p_ref,
        );
    }
    let mut manifest = RunManifest::new("bench-tables");
    manifest.seed = Some(args.seed);
    let sctl = SeriesControl::default();
    manifest.series_k_max = sctl.k_max;
    manifest.series_rel_tol = sctl.rel_tol;
    let em = EmControl::default();
    manifest.em_max_iter = Some(em.max_iter);
    manifest.em_rel_tol = Some(em.rel_tol);
    manifest
        .flag("table", args.table)
        .flag("replications", args.replications)
        .flag("threads", args.threads);
    manifest.wall_clock = start.elapsed();
    Ok(BenchOutcome {
        table: args.table,
        replications: args.replications,
        entries,
        failures,
        manifest,
    })
}

pub fn render_bench(outcome: &BenchOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "reference-table benchmark: table {}, {} replications ({} failed)",
        outcome.table, outcome.replications, outcome.failures
    );
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>10} {:>10} {:>12} {:>12}",
        "parameter", "truth", "avg", "mse", "ref avg", "ref mse"
    );
    for e in &outcome.entries {
        let _ = writeln!(
            out,
            "{:<14} {:>8.4} {:>10.4} {:>10.4} {:>12.4} {:>12.4}",
            e.name, e.truth, e.avg, e.mse, e.reference.avg, e.reference.mse
        );
    }
    out
}

pub fn kv_bench(outcome: &BenchOutcome) -> Vec<(String, String)> {
    let mut pairs = vec![
        kv("command", "bench-tables"),
        kv("table", outcome.table),
        kv("replications", outcome.replications),
        kv("failures", outcome.failures),
    ];
    for e in &outcome.entries {
        pairs.push(kv(format!("{}.truth", e.name), e.truth));
        pairs.push(kv(format!("{}.avg", e.name), e.avg));
        pairs.push(kv(format!("{}.mse", e.name), e.mse));
        pairs.push(kv(format!("{}.ref_avg", e.name), e.reference.avg));
        pairs.push(kv(format!("{}.ref_mse", e.name), e.reference.mse));
    }
    pairs
}

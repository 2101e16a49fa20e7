//! `splitboot`: run the bootstrap split test and its benchmark studies.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use splitboot::boot::bootstrap_test;
use splitboot::io::{load_dataset, write_dataset, DatasetSchema};
use splitboot::models::{
    downstream_logistic_test, fit_score_model, generate_score_data, rescale_score,
    ScoreDataConfig, ScoreInference,
};
use splitboot::sim::{
    emit_table, run_level, run_mb_level, run_power, run_var_curve, ExperimentSpec, ResultTable,
    TableFormat,
};
use splitboot::{
    BootConfig, BootstrapTestReport, ErrorDistribution, IndexInference, NullEngine, SolveOptions,
    TestSeeds, VarianceMode,
};

/// Environment variable consulted for the default master seed.
const SEED_ENV: &str = "SPLITBOOT_SEED";

fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(2019)
}

#[derive(Parser)]
#[command(
    name = "splitboot",
    about = "Finite-sample hypothesis tests for stacked estimating equations by repeated \
             sample splitting with bootstrap calibration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Master seed (also settable via SPLITBOOT_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results are identical for any value).
    #[arg(long, default_value_t = 0, value_name = "K")]
    threads: usize,
    /// Output file; when omitted the table is printed as text.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv, json or text (default inferred from --out).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Null rejection rate of the bootstrap test per error distribution.
    Level {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Comma-separated error laws (default: the eight of the level study).
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Comma-separated numbers of splits B.
        #[arg(long, default_value = "10,25,50,100")]
        splits: String,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 1000)]
        null_sims: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        pi: f64,
        /// Null engine: exact (known error law) or residual.
        #[arg(long, default_value = "exact")]
        engine: String,
        /// First-stage direction (normalized), comma-separated.
        #[arg(long, default_value = "1,1,1")]
        theta: String,
    },
    /// Power of the bootstrap test over a beta0 grid, with the F-test
    /// benchmark when the error law is known.
    Power {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Error law (default: the benchmark scale normal with variance 2.1).
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value = "10,25,50,100,250")]
        splits: String,
        /// Comma-separated beta0 grid.
        #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
        beta0: String,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 1000)]
        null_sims: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        pi: f64,
        #[arg(long, default_value = "exact")]
        engine: String,
        #[arg(long, default_value = "1,1,1")]
        theta: String,
    },
    /// Closed-form variance of the B-split aggregate, with an optional
    /// Monte Carlo overlay.
    VarCurve {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 200)]
        b_max: usize,
        /// Overlay replications (0 disables the overlay).
        #[arg(long, default_value_t = 0)]
        overlay_reps: usize,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Null rejection rate of the Meinshausen aggregated p-value.
    MbLevel {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long, default_value_t = 10000)]
        reps: usize,
        #[arg(long, default_value_t = 250)]
        splits: usize,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        gamma_min: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Run one bootstrap test on a CSV dataset.
    Test {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Input CSV (index schema: y,x1..xd; score schema: W,Y,activities,z..).
        #[arg(long)]
        data: PathBuf,
        /// Model family: index or score.
        #[arg(long, default_value = "index")]
        model: String,
        /// Null engine: exact, residual (index) or binary (score).
        #[arg(long, default_value = "residual")]
        engine: String,
        /// Error law for the exact engine, e.g. normal, t4, laplace2, normal(1.5).
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 50)]
        splits: usize,
        #[arg(long, default_value_t = 1000)]
        null_sims: usize,
        #[arg(long, default_value_t = 0.5)]
        pi: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Build an activity score on synthetic data and test it downstream.
    DemoScore {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim_z: usize,
        /// Strength of the built-in activity signal in Y (0 = null).
        #[arg(long, default_value_t = 0.0)]
        signal: f64,
        #[arg(long, default_value_t = 20)]
        splits: usize,
        #[arg(long, default_value_t = 200)]
        null_sims: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write the synthetic dataset to this CSV and exit.
        #[arg(long)]
        emit_data: Option<PathBuf>,
        /// Read a score-schema CSV instead of generating data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn parse_f64_list(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid {what} entry `{t}`"))
        })
        .collect()
}

fn parse_usize_list(text: &str, what: &str) -> anyhow::Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid {what} entry `{t}`"))
        })
        .collect()
}

fn parse_dists(text: Option<&str>) -> anyhow::Result<Vec<ErrorDistribution>> {
    match text {
        None => Ok(ErrorDistribution::level_study().to_vec()),
        Some(t) => t
            .split(',')
            .map(|name| ErrorDistribution::parse(name.trim()).map_err(anyhow::Error::from))
            .collect(),
    }
}

fn init_threads(threads: usize) -> anyhow::Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("could not size the worker pool")?;
    }
    Ok(())
}

fn output_format(common: &CommonRunArgs) -> anyhow::Result<TableFormat> {
    if let Some(f) = &common.format {
        return TableFormat::parse(f).map_err(Into::into);
    }
    Ok(match &common.out {
        Some(path) => match path.extension().and_then(|e| e.to_str()) {
            Some("json") => TableFormat::Json,
            Some("txt") => TableFormat::Text,
            _ => TableFormat::Csv,
        },
        None => TableFormat::Text,
    })
}

fn write_table(table: &ResultTable, common: &CommonRunArgs) -> anyhow::Result<()> {
    // echo the fully resolved configuration
    for line in table.spec.to_kv().lines() {
        println!("# {line}");
    }
    let format = output_format(common)?;
    match &common.out {
        Some(path) => {
            emit_table(table, format, path)?;
            println!("# wrote {}", path.display());
        }
        None => print!("{}", table.to_text()),
    }
    Ok(())
}

fn engine_from_args(
    engine: &str,
    dist: Option<&str>,
    fallback_exact: Option<ErrorDistribution>,
) -> anyhow::Result<NullEngine> {
    match engine {
        "residual" => Ok(NullEngine::ResidualResample),
        "binary" => Ok(NullEngine::BinaryParametric),
        "exact" => {
            let d = match dist {
                Some(name) => ErrorDistribution::parse(name)?,
                None => fallback_exact.ok_or_else(|| {
                    anyhow::anyhow!("--engine exact requires --dist (the known error law)")
                })?,
            };
            Ok(NullEngine::ExactParametric(d))
        }
        other => bail!("unknown engine `{other}` (exact, residual, binary)"),
    }
}

fn print_test_report(report: &BootstrapTestReport, alpha: f64) {
    let (lo, hi) = report
        .aggregate
        .p_b
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(*p), hi.max(*p))
        });
    println!("p*          = {:.4}", report.p_star);
    println!("beta0_hat   = {:.6}", report.aggregate.beta_bar);
    println!("p_H1        = {:.4} (mean of {} split p-values)", report.aggregate.p_h1, report.aggregate.p_b.len());
    println!("split p's   = [{lo:.4}, {hi:.4}]  (the p-value lottery)");
    println!("B           = {}", report.b);
    println!("null sims   = {}", report.n_null);
    println!("engine      = {}", report.engine);
    if !report.aggregate.failures.is_empty() {
        println!("failed splits = {}", report.aggregate.failures.len());
    }
    println!(
        "decision    = {} H0: beta0 = 0 at alpha = {alpha}",
        if report.rejects(alpha) { "REJECT" } else { "RETAIN" }
    );
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Level {
            common,
            dist,
            n,
            splits,
            reps,
            null_sims,
            alpha,
            pi,
            engine,
            theta,
        } => {
            init_threads(common.threads)?;
            let residual = match engine.as_str() {
                "exact" => false,
                "residual" => true,
                other => bail!("unknown engine `{other}` (exact, residual)"),
            };
            let mut spec = ExperimentSpec::level(residual);
            spec.dists = parse_dists(dist.as_deref())?;
            spec.n = n;
            spec.b_grid = parse_usize_list(&splits, "--splits")?;
            spec.reps = reps;
            spec.null_sims = null_sims;
            spec.alpha = alpha;
            spec.pi = pi;
            spec.theta = parse_f64_list(&theta, "--theta")?;
            spec.master_seed = common.seed.unwrap_or_else(default_seed);
            spec.validate()?;
            let table = run_level(&spec)?;
            write_table(&table, &common)
        }
        Command::Power {
            common,
            dist,
            n,
            splits,
            beta0,
            reps,
            null_sims,
            alpha,
            pi,
            engine,
            theta,
        } => {
            init_threads(common.threads)?;
            let residual = match engine.as_str() {
                "exact" => false,
                "residual" => true,
                other => bail!("unknown engine `{other}` (exact, residual)"),
            };
            let mut spec = ExperimentSpec::power(residual);
            if let Some(d) = dist.as_deref() {
                spec.dists = vec![ErrorDistribution::parse(d)?];
            }
            spec.n = n;
            spec.b_grid = parse_usize_list(&splits, "--splits")?;
            spec.beta0_grid = parse_f64_list(&beta0, "--beta0")?;
            spec.reps = reps;
            spec.null_sims = null_sims;
            spec.alpha = alpha;
            spec.pi = pi;
            spec.theta = parse_f64_list(&theta, "--theta")?;
            spec.master_seed = common.seed.unwrap_or_else(default_seed);
            spec.validate()?;
            let table = run_power(&spec)?;
            write_table(&table, &common)
        }
        Command::VarCurve {
            common,
            sigma,
            rho,
            b_max,
            overlay_reps,
            n,
        } => {
            init_threads(common.threads)?;
            let mut spec = ExperimentSpec::var_curve();
            spec.sigma = sigma;
            spec.rho = rho;
            spec.b_max = b_max;
            spec.overlay_reps = overlay_reps;
            spec.n = n;
            spec.master_seed = common.seed.unwrap_or_else(default_seed);
            spec.validate()?;
            let table = run_var_curve(&spec)?;
            write_table(&table, &common)
        }
        Command::MbLevel {
            common,
            reps,
            splits,
            n,
            gamma_min,
            alpha,
        } => {
            init_threads(common.threads)?;
            let mut spec = ExperimentSpec::mb_level();
            spec.reps = reps;
            spec.b_grid = vec![splits];
            spec.n = n;
            spec.gamma_min = gamma_min;
            spec.alpha = alpha;
            spec.master_seed = common.seed.unwrap_or_else(default_seed);
            spec.validate()?;
            let table = run_mb_level(&spec)?;
            write_table(&table, &common)
        }
        Command::Test {
            common,
            data,
            model,
            engine,
            dist,
            splits,
            null_sims,
            pi,
            alpha,
        } => {
            init_threads(common.threads)?;
            let seed = common.seed.unwrap_or_else(default_seed);
            let seeds = TestSeeds {
                split: seed,
                null: seed.wrapping_add(1),
            };
            let cfg = BootConfig {
                b: splits,
                n_null: null_sims,
                pi,
                seeds,
            };
            let schema = DatasetSchema::parse(&model)?;
            println!(
                "# config: data={} model={model} engine={engine} B={splits} null_sims={null_sims} pi={pi} alpha={alpha} seed={seed}",
                data.display()
            );
            let report = match schema {
                DatasetSchema::Index => {
                    let dataset = load_dataset(&data, schema)?;
                    let engine = engine_from_args(&engine, dist.as_deref(), None)?;
                    let mode = VarianceMode::for_engine(&engine)?;
                    let inf = IndexInference::from_dataset(&dataset, mode)?;
                    bootstrap_test(&inf, dataset.y().unwrap(), &engine, &cfg)?
                }
                DatasetSchema::Score => {
                    if engine != "binary" {
                        bail!("the score model requires --engine binary");
                    }
                    let dataset = load_dataset(&data, schema)?;
                    downstream_logistic_test(&dataset, &NullEngine::BinaryParametric, &cfg)?
                }
            };
            print_test_report(&report, alpha);
            if let Some(path) = &common.out {
                std::fs::write(path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("# wrote {}", path.display());
            }
            Ok(())
        }
        Command::DemoScore {
            common,
            n,
            dim_z,
            signal,
            splits,
            null_sims,
            alpha,
            emit_data,
            data,
        } => {
            init_threads(common.threads)?;
            let seed = common.seed.unwrap_or_else(default_seed);
            let dataset = match &data {
                Some(path) => load_dataset(path, DatasetSchema::Score)?,
                None => {
                    let cfg = ScoreDataConfig {
                        n,
                        dim_z,
                        y_activity_effect: signal,
                        seed,
                        ..ScoreDataConfig::new(n, seed)
                    };
                    generate_score_data(&cfg)?
                }
            };
            println!(
                "# config: n={} dim_z={} signal={signal} B={splits} null_sims={null_sims} alpha={alpha} seed={seed}",
                dataset.n(),
                dataset.dim_z()
            );
            if let Some(path) = &emit_data {
                write_dataset(&dataset, path)?;
                println!("# wrote {}", path.display());
                return Ok(());
            }

            // full-sample score for the contribution breakdown
            let opts = SolveOptions {
                tol: 1e-5,
                max_iter: 200,
                ..SolveOptions::default()
            };
            let model = fit_score_model(&dataset, &opts)?;
            let rescaled = rescale_score(&model, &dataset)?;
            println!("component        points  criteria for maximum");
            for c in &rescaled.contributions {
                if c.degenerate {
                    println!("{:<16} {:>6}  (degenerate: constant over the data)", c.name, "-");
                } else {
                    println!("{:<16} {:>6.1}", c.name, c.points);
                }
            }
            println!("{:<16} {:>6.1}", "total", 100.0);

            let cfg = BootConfig {
                b: splits,
                n_null: null_sims,
                pi: 0.5,
                seeds: TestSeeds {
                    split: seed.wrapping_add(2),
                    null: seed.wrapping_add(3),
                },
            };
            let report = downstream_logistic_test(&dataset, &NullEngine::BinaryParametric, &cfg)?;
            let _ = ScoreInference::new(&dataset)?; // shape re-validated
            print_test_report(&report, alpha);
            if let Some(path) = &common.out {
                std::fs::write(path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("# wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

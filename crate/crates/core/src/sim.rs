//! Monte Carlo experiment driver: level and power tables for the split
//! bootstrap test (with the F-test benchmark column), the split-count
//! variance curve, and the Meinshausen conservativeness study.
//!
//! Every replication derives its streams from
//! `(master_seed, experiment tag, row, replication, column)`, so tables are
//! bitwise reproducible for any thread count, and any single cell can be
//! re-derived in isolation.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{f_test, meinshausen_null_level, MeinshausenOptions};
use crate::boot::{bootstrap_pstar, BootConfig, NullEngine, SplitInference, TestSeeds, VarianceMode};
use crate::dist::{generate_level_power_data, ErrorDistribution};
use crate::error::{Error, Result};
use crate::rng::{derive_key, substream};
use crate::split::{make_split_plan, split_variance};
use crate::stats;
use crate::IndexInference;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    /// Level of the bootstrap test with the exact known-error engine.
    Level,
    /// Level with residual resampling.
    LevelResidual,
    /// Power against the F-test, known-error engine.
    Power,
    /// Power with residual resampling.
    PowerResidual,
    /// Analytic variance of the split aggregate, with a Monte Carlo overlay.
    VarCurve,
    /// Null level of the Meinshausen aggregated p-value.
    MbLevel,
}

impl Experiment {
    fn tag(self) -> u64 {
        match self {
            Experiment::Level => 1,
            Experiment::LevelResidual => 2,
            Experiment::Power => 3,
            Experiment::PowerResidual => 4,
            Experiment::VarCurve => 5,
            Experiment::MbLevel => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Level => "level",
            Experiment::LevelResidual => "level_residual",
            Experiment::Power => "power",
            Experiment::PowerResidual => "power_residual",
            Experiment::VarCurve => "var_curve",
            Experiment::MbLevel => "mb_level",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "level" => Experiment::Level,
            "level_residual" => Experiment::LevelResidual,
            "power" => Experiment::Power,
            "power_residual" => Experiment::PowerResidual,
            "var_curve" => Experiment::VarCurve,
            "mb_level" => Experiment::MbLevel,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown experiment `{other}`"
                )))
            }
        })
    }
}

/// Full configuration of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub n: usize,
    /// First-stage direction (normalized internally).
    pub theta: Vec<f64>,
    pub beta0_grid: Vec<f64>,
    pub b_grid: Vec<usize>,
    pub dists: Vec<ErrorDistribution>,
    pub reps: usize,
    pub null_sims: usize,
    pub alpha: f64,
    pub pi: f64,
    pub master_seed: u64,
    /// Variance-curve scale (per-split standard deviation).
    pub sigma: f64,
    /// Common correlation between split estimates.
    pub rho: f64,
    pub b_max: usize,
    /// Replications of the Monte Carlo overlay (0 disables it).
    pub overlay_reps: usize,
    pub gamma_min: f64,
}

impl ExperimentSpec {
    fn base(experiment: Experiment) -> Self {
        Self {
            experiment,
            n: 100,
            theta: vec![1.0, 1.0, 1.0],
            beta0_grid: vec![0.0],
            b_grid: vec![10, 25, 50, 100],
            dists: ErrorDistribution::level_study().to_vec(),
            reps: 1000,
            null_sims: 1000,
            alpha: 0.05,
            pi: 0.5,
            master_seed: 2019,
            sigma: 1.0,
            rho: 0.5,
            b_max: 200,
            overlay_reps: 0,
            gamma_min: 0.05,
        }
    }

    /// Level study over the eight error laws, B in {10, 25, 50, 100}.
    pub fn level(residual: bool) -> Self {
        Self::base(if residual {
            Experiment::LevelResidual
        } else {
            Experiment::Level
        })
    }

    /// Power study: beta0 in {0, 0.1, ..., 1}, B in {10, ..., 250},
    /// Gaussian errors with variance 2 (the benchmark scale).
    pub fn power(residual: bool) -> Self {
        let mut spec = Self::base(if residual {
            Experiment::PowerResidual
        } else {
            Experiment::Power
        });
        spec.beta0_grid = (0..=10).map(|k| k as f64 / 10.0).collect();
        spec.b_grid = vec![10, 25, 50, 100, 250];
        spec.dists = vec![ErrorDistribution::power_study()];
        spec
    }

    pub fn var_curve() -> Self {
        Self::base(Experiment::VarCurve)
    }

    pub fn mb_level() -> Self {
        let mut spec = Self::base(Experiment::MbLevel);
        spec.reps = 10_000;
        spec.b_grid = vec![250];
        spec
    }

    fn engine_for(&self, dist: &ErrorDistribution) -> NullEngine {
        match self.experiment {
            Experiment::LevelResidual | Experiment::PowerResidual => NullEngine::ResidualResample,
            _ => NullEngine::ExactParametric(*dist),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidArgument("reps must be >= 1".into()));
        }
        if self.b_grid.is_empty() || self.beta0_grid.is_empty() || self.dists.is_empty() {
            return Err(Error::InvalidArgument("grids must be nonempty".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must be in (0,1)".into()));
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::InvalidArgument("pi must be in (0,1)".into()));
        }
        if self.theta.is_empty() || self.theta.iter().all(|t| *t == 0.0) {
            return Err(Error::InvalidArgument("theta must be nonzero".into()));
        }
        Ok(())
    }

    /// Plain-text `key=value` serialization.
    pub fn to_kv(&self) -> String {
        let join_f = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let join_u = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let dists = self
            .dists
            .iter()
            .map(|d| d.name())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "experiment={}\nn={}\ntheta={}\nbeta0_grid={}\nb_grid={}\ndists={}\nreps={}\n\
             null_sims={}\nalpha={}\npi={}\nmaster_seed={}\nsigma={}\nrho={}\nb_max={}\n\
             overlay_reps={}\ngamma_min={}\n",
            self.experiment.name(),
            self.n,
            join_f(&self.theta),
            join_f(&self.beta0_grid),
            join_u(&self.b_grid),
            dists,
            self.reps,
            self.null_sims,
            self.alpha,
            self.pi,
            self.master_seed,
            self.sigma,
            self.rho,
            self.b_max,
            self.overlay_reps,
            self.gamma_min,
        )
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut spec = Self::base(Experiment::Level);
        let bad = |k: &str, v: &str| {
            Error::InvalidArgument(format!("config line `{k}={v}` could not be parsed"))
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line `{line}` has no `=`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "experiment" => spec.experiment = Experiment::parse(value)?,
                "n" => spec.n = value.parse().map_err(|_| bad(key, value))?,
                "theta" => {
                    spec.theta = value
                        .split(',')
                        .map(|t| t.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(key, value))?
                }
                "beta0_grid" => {
                    spec.beta0_grid = value
                        .split(',')
                        .map(|t| t.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(key, value))?
                }
                "b_grid" => {
                    spec.b_grid = value
                        .split(',')
                        .map(|t| t.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(key, value))?
                }
                "dists" => {
                    spec.dists = value
                        .split(',')
                        .map(ErrorDistribution::parse)
                        .collect::<Result<_>>()?
                }
                "reps" => spec.reps = value.parse().map_err(|_| bad(key, value))?,
                "null_sims" => spec.null_sims = value.parse().map_err(|_| bad(key, value))?,
                "alpha" => spec.alpha = value.parse().map_err(|_| bad(key, value))?,
                "pi" => spec.pi = value.parse().map_err(|_| bad(key, value))?,
                "master_seed" => spec.master_seed = value.parse().map_err(|_| bad(key, value))?,
                "sigma" => spec.sigma = value.parse().map_err(|_| bad(key, value))?,
                "rho" => spec.rho = value.parse().map_err(|_| bad(key, value))?,
                "b_max" => spec.b_max = value.parse().map_err(|_| bad(key, value))?,
                "overlay_reps" => spec.overlay_reps = value.parse().map_err(|_| bad(key, value))?,
                "gamma_min" => spec.gamma_min = value.parse().map_err(|_| bad(key, value))?,
                other => {
                    return Err(Error::InvalidArgument(format!("unknown config key `{other}`")))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// A labelled grid of Monte Carlo estimates with per-cell standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct ResultTable {
    pub title: String,
    pub row_label: String,
    pub col_label: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major cell estimates; NaN marks an empty cell.
    pub cells: Vec<f64>,
    pub ses: Vec<f64>,
    /// Replications per cell that failed and were excluded.
    pub failures: Vec<usize>,
    pub spec: ExperimentSpec,
    pub runtime_secs: f64,
}

impl ResultTable {
    fn new(
        title: &str,
        row_label: &str,
        col_label: &str,
        rows: Vec<String>,
        cols: Vec<String>,
        spec: ExperimentSpec,
    ) -> Self {
        let ncell = rows.len() * cols.len();
        Self {
            title: title.into(),
            row_label: row_label.into(),
            col_label: col_label.into(),
            rows,
            cols,
            cells: vec![f64::NAN; ncell],
            ses: vec![f64::NAN; ncell],
            failures: vec![0; ncell],
            spec,
            runtime_secs: 0.0,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols.len() + col]
    }

    pub fn se(&self, row: usize, col: usize) -> f64 {
        self.ses[row * self.cols.len() + col]
    }

    fn set(&mut self, row: usize, col: usize, value: f64, se: f64, failures: usize) {
        let idx = row * self.cols.len() + col;
        self.cells[idx] = value;
        self.ses[idx] = se;
        self.failures[idx] = failures;
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == name)
    }

    pub fn row(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r == name)
    }

    /// Paper-style plain-text grid.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.title));
        out.push_str(&format!("{}\\{}", self.row_label, self.col_label));
        for c in &self.cols {
            out.push_str(&format!("\t{c}"));
        }
        out.push('\n');
        for (ri, r) in self.rows.iter().enumerate() {
            out.push_str(r);
            for ci in 0..self.cols.len() {
                let v = self.get(ri, ci);
                if v.is_nan() {
                    out.push_str("\t-");
                } else {
                    out.push_str(&format!("\t{v:.3}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {}", self.title)?;
        for line in self.spec.to_kv().lines() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# runtime_secs={:.3}", self.runtime_secs)?;
        write!(w, "{}", self.row_label)?;
        for c in &self.cols {
            write!(w, ",{c},{c}_se")?;
        }
        writeln!(w)?;
        for (ri, r) in self.rows.iter().enumerate() {
            write!(w, "{r}")?;
            for ci in 0..self.cols.len() {
                let (v, s) = (self.get(ri, ci), self.se(ri, ci));
                if v.is_nan() {
                    write!(w, ",,")?;
                } else {
                    write!(w, ",{v},{s}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization cannot fail")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    Text,
}

impl TableFormat {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "csv" => TableFormat::Csv,
            "json" => TableFormat::Json,
            "text" | "table" => TableFormat::Text,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown output format `{other}` (csv, json, text)"
                )))
            }
        })
    }
}

/// Write a table to `path` in the requested format.
pub fn emit_table(table: &ResultTable, format: TableFormat, path: &std::path::Path) -> Result<()> {
    let render = |table: &ResultTable| -> Vec<u8> {
        match format {
            TableFormat::Csv => {
                let mut buf = Vec::new();
                table.to_csv(&mut buf).expect("in-memory write");
                buf
            }
            TableFormat::Json => table.to_json().into_bytes(),
            TableFormat::Text => table.to_text().into_bytes(),
        }
    };
    std::fs::write(path, render(table)).map_err(|e| Error::io(path, e))
}

/// Read back the numeric content of a CSV table (cells and standard errors).
pub fn read_table_csv(path: &std::path::Path) -> Result<(Vec<String>, Vec<String>, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut cols: Vec<String> = Vec::new();
    let mut cells = Vec::new();
    let mut ses = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if cols.is_empty() {
            // header: label, then alternating value/se column names
            cols = fields[1..]
                .chunks(2)
                .map(|pair| pair[0].to_string())
                .collect();
            continue;
        }
        rows.push(fields[0].to_string());
        for pair in fields[1..].chunks(2) {
            let parse = |s: &str| -> f64 {
                if s.is_empty() {
                    f64::NAN
                } else {
                    s.parse().unwrap_or(f64::NAN)
                }
            };
            cells.push(parse(pair[0]));
            ses.push(parse(pair.get(1).copied().unwrap_or("")));
        }
    }
    Ok((rows, cols, cells, ses))
}

fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Outcomes of one replication: per-B rejection flags plus the F-test's.
struct RepOutcome {
    reject: Vec<Option<bool>>,
    f_reject: Option<bool>,
}

/// Shared replication body for the level and power studies: one dataset,
/// one bootstrap test per B, and (for the known-error power study) the
/// F-test benchmark on the same data.
fn run_cells(
    spec: &ExperimentSpec,
    row_index: usize,
    dist: &ErrorDistribution,
    beta0: f64,
    with_f: bool,
) -> (Vec<(usize, usize)>, Option<(usize, usize)>) {
    let tag = spec.experiment.tag();
    let engine = spec.engine_for(dist);
    let mode = match engine {
        NullEngine::ResidualResample => VarianceMode::Estimated,
        _ => VarianceMode::Known(dist.variance()),
    };
    let outcomes: Vec<RepOutcome> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let data_seed = derive_key(spec.master_seed, &[tag, row_index as u64, rep as u64]);
            let data = generate_level_power_data(spec.n, &spec.theta, beta0, dist, data_seed)
                .expect("valid generation config");
            let y = data.y().unwrap();
            let inf = IndexInference::from_dataset(&data, mode).expect("valid design");
            let prepared = match inf.prepare_null(&engine, y) {
                Ok(p) => p,
                Err(_) => {
                    return RepOutcome {
                        reject: vec![None; spec.b_grid.len()],
                        f_reject: None,
                    }
                }
            };
            let reject = spec
                .b_grid
                .iter()
                .enumerate()
                .map(|(ci, &b)| {
                    let cfg = BootConfig {
                        b,
                        n_null: spec.null_sims,
                        pi: spec.pi,
                        seeds: TestSeeds {
                            split: derive_key(
                                spec.master_seed,
                                &[tag, row_index as u64, rep as u64, ci as u64, 1],
                            ),
                            null: derive_key(
                                spec.master_seed,
                                &[tag, row_index as u64, rep as u64, ci as u64, 2],
                            ),
                        },
                    };
                    bootstrap_pstar(&inf, y, &prepared, &cfg)
                        .ok()
                        .map(|s| s.p_star < spec.alpha)
                })
                .collect();
            let f_reject = if with_f {
                f_test(&data).ok().map(|p| p < spec.alpha)
            } else {
                None
            };
            RepOutcome { reject, f_reject }
        })
        .collect();

    let mut per_b = vec![(0usize, 0usize); spec.b_grid.len()]; // (rejections, valid)
    let mut f_counts = (0usize, 0usize);
    for o in &outcomes {
        for (ci, r) in o.reject.iter().enumerate() {
            if let Some(r) = r {
                per_b[ci].1 += 1;
                if *r {
                    per_b[ci].0 += 1;
                }
            }
        }
        if let Some(fr) = o.f_reject {
            f_counts.1 += 1;
            if fr {
                f_counts.0 += 1;
            }
        }
    }
    (per_b, if with_f { Some(f_counts) } else { None })
}

/// Level tables: rejection rate under the null (`beta0 = 0`) for each
/// error distribution and split count.
pub fn run_level(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    if !matches!(
        spec.experiment,
        Experiment::Level | Experiment::LevelResidual
    ) {
        return Err(Error::InvalidArgument(
            "run_level requires a level experiment".into(),
        ));
    }
    let start = Instant::now();
    let cols: Vec<String> = spec.b_grid.iter().map(|b| b.to_string()).collect();
    let rows: Vec<String> = spec.dists.iter().map(|d| d.name()).collect();
    let mut table = ResultTable::new(
        match spec.experiment {
            Experiment::Level => "Bootstrap test level, known error distribution",
            _ => "Bootstrap test level, residual resampling",
        },
        "distribution",
        "B",
        rows,
        cols,
        spec.clone(),
    );
    for (ri, dist) in spec.dists.iter().enumerate() {
        let (per_b, _) = run_cells(spec, ri, dist, 0.0, false);
        for (ci, (rejects, valid)) in per_b.into_iter().enumerate() {
            let p = rejects as f64 / valid.max(1) as f64;
            table.set(ri, ci, p, binomial_se(p, valid), spec.reps - valid);
        }
    }
    table.runtime_secs = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Power tables: rejection rate over the `beta0` grid for each split
/// count, with an F-test column when the error law is known.
pub fn run_power(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    if !matches!(
        spec.experiment,
        Experiment::Power | Experiment::PowerResidual
    ) {
        return Err(Error::InvalidArgument(
            "run_power requires a power experiment".into(),
        ));
    }
    let with_f = matches!(spec.experiment, Experiment::Power);
    let dist = spec.dists[0];
    let start = Instant::now();
    let mut cols: Vec<String> = spec.b_grid.iter().map(|b| b.to_string()).collect();
    if with_f {
        cols.push("F-test".into());
    }
    let rows: Vec<String> = spec.beta0_grid.iter().map(|b| b.to_string()).collect();
    let mut table = ResultTable::new(
        match spec.experiment {
            Experiment::Power => "Bootstrap test power vs the F-test, known error distribution",
            _ => "Bootstrap test power, residual resampling",
        },
        "beta0",
        "B",
        rows,
        cols,
        spec.clone(),
    );
    for (ri, &beta0) in spec.beta0_grid.iter().enumerate() {
        let (per_b, f_counts) = run_cells(spec, ri, &dist, beta0, with_f);
        for (ci, (rejects, valid)) in per_b.into_iter().enumerate() {
            let p = rejects as f64 / valid.max(1) as f64;
            table.set(ri, ci, p, binomial_se(p, valid), spec.reps - valid);
        }
        if let Some((rejects, valid)) = f_counts {
            let p = rejects as f64 / valid.max(1) as f64;
            let ci = spec.b_grid.len();
            table.set(ri, ci, p, binomial_se(p, valid), spec.reps - valid);
        }
    }
    table.runtime_secs = start.elapsed().as_secs_f64();
    Ok(table)
}

/// B values where the Monte Carlo overlay is evaluated.
fn overlay_points(b_max: usize) -> Vec<usize> {
    [1usize, 2, 5, 10, 25, 50, 100, 150, 200, 250, 500]
        .into_iter()
        .filter(|&b| b <= b_max)
        .collect()
}

/// The variance of the B-split aggregate in the pure mean model:
/// the closed-form curve, plus an empirical overlay estimated from
/// `overlay_reps` replications and rescaled to the curve's per-split
/// variance unit.
pub fn run_var_curve(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let start = Instant::now();
    let rows: Vec<String> = (1..=spec.b_max).map(|b| b.to_string()).collect();
    let cols = vec!["variance".to_string(), "mc_variance".into(), "mc_se".into()];
    let mut table = ResultTable::new(
        "Variance of the split aggregate vs number of splits",
        "B",
        "quantity",
        rows,
        cols,
        spec.clone(),
    );
    for b in 1..=spec.b_max {
        table.set(b - 1, 0, split_variance(spec.sigma, spec.rho, b), 0.0, 0);
    }

    if spec.overlay_reps > 0 {
        let tag = spec.experiment.tag();
        for &b in &overlay_points(spec.b_max) {
            // mean model Y = mu + eps on n records; each split estimates mu
            // by the D_in average, the aggregate is the mean over splits
            let draws: Vec<(f64, Vec<f64>)> = (0..spec.overlay_reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng =
                        substream(spec.master_seed, &[tag, b as u64, rep as u64]);
                    let mut y = vec![0.0; spec.n];
                    ErrorDistribution::Normal { sigma: 1.0 }.sample_into(&mut rng, &mut y);
                    let plan_seed =
                        derive_key(spec.master_seed, &[tag, b as u64, rep as u64, 1]);
                    let plan = make_split_plan(spec.n, b, spec.pi, plan_seed).unwrap();
                    let mut per_split = Vec::with_capacity(b);
                    for row in plan.rows() {
                        let (mut s, mut k) = (0.0, 0usize);
                        for i in 0..spec.n {
                            if row.is_in(i) {
                                s += y[i];
                                k += 1;
                            }
                        }
                        per_split.push(s / k as f64);
                    }
                    let agg = per_split.iter().sum::<f64>() / b as f64;
                    (agg, per_split)
                })
                .collect();
            let aggs: Vec<f64> = draws.iter().map(|(a, _)| *a).collect();
            let all_splits: Vec<f64> = draws.iter().flat_map(|(_, s)| s.iter().copied()).collect();
            let var_agg = stats::sample_variance(&aggs);
            let var_split = stats::sample_variance(&all_splits);
            // rescale to the curve's unit: the curve treats sigma^2 as the
            // variance of a single split estimate
            let scaled = spec.sigma * spec.sigma * var_agg / var_split;
            let se = scaled * (2.0 / (spec.overlay_reps as f64 - 1.0)).sqrt();
            table.set(b - 1, 1, scaled, se, 0);
        }
    }
    table.runtime_secs = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Null level of the Meinshausen aggregated p-value at `alpha`.
pub fn run_mb_level(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let start = Instant::now();
    let b = spec.b_grid[0];
    let opts = MeinshausenOptions::with_grid(spec.gamma_min, 512);
    let report = meinshausen_null_level(
        b,
        spec.n,
        spec.reps,
        spec.alpha,
        derive_key(spec.master_seed, &[spec.experiment.tag()]),
        &opts,
    )?;
    let mut table = ResultTable::new(
        "Meinshausen aggregated p-value: null rejection rate",
        "B",
        "quantity",
        vec![b.to_string()],
        vec!["level".into(), "rejections".into()],
        spec.clone(),
    );
    table.set(0, 0, report.level, binomial_se(report.level, spec.reps), 0);
    table.set(0, 1, report.rejections as f64, 0.0, 0);
    table.runtime_secs = start.elapsed().as_secs_f64();
    Ok(table)
}

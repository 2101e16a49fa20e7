//! The sample-splitting bootstrap hypothesis test.
//!
//! Five steps: (1) draw `B` Bernoulli splits; (2) per split, fit the first
//! stage on `D_in`, rescale the fitted direction to unit norm, fit the
//! second stage on `D_out` and compute the two-sided p-value `p_b` for
//! `beta_0 = 0`; (3) aggregate to `p_H1 = mean(p_b)`; (4) simulate `N`
//! draws of the same aggregate under the null (exact error law, resampled
//! residuals, or a parametric binary null) with fresh split plans;
//! (5) report `p* = #{p_tilde < p_H1} / N`, the empirical-CDF calibration.
//!
//! Per-split p-values use the normal reference when the error variance is
//! declared known and the t reference with the out-set residual variance
//! otherwise. Either way the calibration step absorbs any miscalibration
//! of the per-split test, so `p*` is exact whenever the null responses are
//! sampled from the true null law.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dist::ErrorDistribution;
use crate::error::{Error, Result, Stage};
use crate::linalg::{cholesky_solve_packed, MAX_KERNEL_DIM};
use crate::rng::substream;
use crate::split::{draw_plan_from_rng, make_split_plan_with_min, SplitPlan, SplitRow};
use crate::stats::{normal_two_sided, t_two_sided_int};

/// Whether the second-stage error variance is treated as known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VarianceMode {
    /// Known error variance: normal-reference per-split p-values.
    Known(f64),
    /// Variance estimated from the out-set residuals: t-reference p-values.
    Estimated,
}

impl VarianceMode {
    /// The mode a null engine implies: an exact parametric engine knows its
    /// error law, residual resampling does not.
    pub fn for_engine(engine: &NullEngine) -> Result<VarianceMode> {
        match engine {
            NullEngine::ExactParametric(d) => Ok(VarianceMode::Known(d.variance())),
            NullEngine::ResidualResample => Ok(VarianceMode::Estimated),
            NullEngine::BinaryParametric => Err(Error::InvalidArgument(
                "binary parametric engine does not apply to a linear index model".into(),
            )),
        }
    }
}

/// How null responses are synthesized in step 4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NullEngine {
    /// The error law is fully specified; `Y*` is drawn from it directly.
    ExactParametric(ErrorDistribution),
    /// `Y*` is drawn with replacement from centered, variance-inflated
    /// residuals of the full-sample first-stage fit.
    ResidualResample,
    /// For binary outcomes: `Y* ~ Bernoulli(H(z' gamma_hat))` with
    /// `gamma_hat` from the covariate-only null fit.
    BinaryParametric,
}

impl NullEngine {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NullEngine::ExactParametric(_) => "exact-parametric",
            NullEngine::ResidualResample => "residual-resample",
            NullEngine::BinaryParametric => "binary-parametric",
        }
    }
}

/// A model-specific null response sampler, resolved once per test.
#[derive(Clone, Debug)]
pub enum PreparedNull {
    Exact(ErrorDistribution),
    /// Centered and scaled residual pool, drawn with replacement.
    ResidualPool(Vec<f64>),
    /// Per-record success probabilities for a binary null.
    BernoulliProbs(Vec<f64>),
}

impl PreparedNull {
    pub fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            PreparedNull::Exact(dist) => dist.sample_into(rng, out),
            PreparedNull::ResidualPool(pool) => {
                for o in out.iter_mut() {
                    *o = pool[rng.random_range(0..pool.len())];
                }
            }
            PreparedNull::BernoulliProbs(probs) => {
                for (o, p) in out.iter_mut().zip(probs.iter()) {
                    *o = if rng.random::<f64>() < *p { 1.0 } else { 0.0 };
                }
            }
        }
    }
}

/// One split's second-stage estimate and p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPv {
    pub beta: f64,
    pub p: f64,
}

/// A model that can be fitted per split and calibrated against a null.
/// `Prep` caches whatever per-response work is shared across the `B` splits.
pub trait SplitInference: Sync {
    type Prep: Send + Sync;

    fn n(&self) -> usize;
    /// Minimum records required in `D_in` / `D_out` for a split to be fittable.
    fn min_in(&self) -> usize;
    fn min_out(&self) -> usize;

    fn prepare(&self, y: &[f64]) -> Self::Prep;
    fn split_pvalue(&self, y: &[f64], prep: &Self::Prep, row: SplitRow<'_>) -> Result<SplitPv>;
    fn prepare_null(&self, engine: &NullEngine, y_obs: &[f64]) -> Result<PreparedNull>;
}

/// Per-split p-values and their mean, plus the aggregated estimate.
#[derive(Clone, Debug, Serialize)]
pub struct PValueAggregate {
    /// p-values of the converged splits.
    pub p_b: Vec<f64>,
    /// `mean(p_b)`.
    pub p_h1: f64,
    /// Mean of the per-split second-stage estimates.
    pub beta_bar: f64,
    /// `(split index, message)` for failed splits.
    pub failures: Vec<(usize, String)>,
}

/// First stage fitted on `D_in` (direction normalized to unit length),
/// second stage on `D_out`; two-sided p-value for the second-stage
/// coefficient.
pub fn per_split_pvalue<I: SplitInference>(inf: &I, y: &[f64], row: SplitRow<'_>) -> Result<SplitPv> {
    let prep = inf.prepare(y);
    inf.split_pvalue(y, &prep, row)
}

/// Step 2 + 3: per-split p-values over the whole plan, averaged over the
/// splits that converged.
pub fn aggregate_pvalues<I: SplitInference>(
    inf: &I,
    y: &[f64],
    plan: &SplitPlan,
) -> Result<PValueAggregate> {
    let prep = inf.prepare(y);
    let mut p_b = Vec::with_capacity(plan.b());
    let mut beta_sum = 0.0;
    let mut failures = Vec::new();
    for (bi, row) in plan.rows().enumerate() {
        match inf.split_pvalue(y, &prep, row) {
            Ok(pv) => {
                p_b.push(pv.p);
                beta_sum += pv.beta;
            }
            Err(e) => failures.push((bi, e.to_string())),
        }
    }
    if p_b.is_empty() {
        return Err(Error::AllSplitsFailed {
            total: plan.b(),
            first: failures.first().map(|(_, m)| m.clone()).unwrap_or_default(),
        });
    }
    let p_h1 = p_b.iter().sum::<f64>() / p_b.len() as f64;
    let beta_bar = beta_sum / p_b.len() as f64;
    Ok(PValueAggregate {
        p_b,
        p_h1,
        beta_bar,
        failures,
    })
}

/// Mean-only aggregation over a scratch plan; `None` when every split failed.
fn aggregate_mean<I: SplitInference>(
    inf: &I,
    y: &[f64],
    prep: &I::Prep,
    bits: &[u64],
    b: usize,
    n: usize,
) -> Option<(f64, f64)> {
    let wpr = n.div_ceil(64);
    let mut p_sum = 0.0;
    let mut beta_sum = 0.0;
    let mut ok = 0usize;
    for bi in 0..b {
        let row = SplitRow::from_words(&bits[bi * wpr..(bi + 1) * wpr], n);
        if let Ok(pv) = inf.split_pvalue(y, prep, row) {
            p_sum += pv.p;
            beta_sum += pv.beta;
            ok += 1;
        }
    }
    if ok == 0 {
        None
    } else {
        Some((p_sum / ok as f64, beta_sum / ok as f64))
    }
}

/// Geometry of the fresh plans drawn inside the null loop.
#[derive(Clone, Copy, Debug)]
pub struct PlanShape {
    pub n: usize,
    pub b: usize,
    pub pi: f64,
    pub min_in: usize,
    pub min_out: usize,
}

const NULL_ATTEMPT_CAP: usize = 32;

struct NullScratch {
    y: Vec<f64>,
    bits: Vec<u64>,
}

impl NullScratch {
    fn new(n: usize) -> Self {
        Self {
            y: vec![0.0; n],
            bits: Vec::new(),
        }
    }
}

/// One null replicate: synthesize `Y*`, draw a fresh plan, aggregate.
/// Returns the aggregated null p-value and the number of extra attempts.
fn null_p_h1<I: SplitInference>(
    inf: &I,
    prepared: &PreparedNull,
    shape: &PlanShape,
    seed: u64,
    replicate: u64,
    scratch: &mut NullScratch,
) -> Result<(f64, usize)> {
    for attempt in 0..NULL_ATTEMPT_CAP {
        let mut rng = substream(seed, &[replicate, attempt as u64]);
        prepared.sample_into(&mut rng, &mut scratch.y);
        draw_plan_from_rng(
            &mut rng,
            shape.n,
            shape.b,
            shape.pi,
            shape.min_in,
            shape.min_out,
            &mut scratch.bits,
        )?;
        let prep = inf.prepare(&scratch.y);
        if let Some((p_h1, _)) = aggregate_mean(inf, &scratch.y, &prep, &scratch.bits, shape.b, shape.n)
        {
            return Ok((p_h1, attempt));
        }
    }
    Err(Error::NullSimulationFailed {
        failed: NULL_ATTEMPT_CAP,
        requested: 1,
        cap: NULL_ATTEMPT_CAP,
    })
}

/// Step 4: `N` draws from the null distribution of `p_H1`. Each replicate
/// pairs a synthetic null response with the observed covariates and a fresh
/// `B`-row split plan. Replicates where every split fails are redrawn; the
/// total number of redraws is capped at 10% of `N`.
pub fn simulate_null<I: SplitInference>(
    inf: &I,
    prepared: &PreparedNull,
    shape: &PlanShape,
    n_sims: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_sims < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 null simulations, got {n_sims}"
        )));
    }
    let results: Vec<Result<(f64, usize)>> = (0..n_sims as u64)
        .into_par_iter()
        .map_init(
            || NullScratch::new(inf.n()),
            |scratch, j| null_p_h1(inf, prepared, shape, seed, j, scratch),
        )
        .collect();
    let mut p_tilde = Vec::with_capacity(n_sims);
    let mut redraws = 0usize;
    for r in results {
        let (p, extra) = r?;
        p_tilde.push(p);
        redraws += extra;
    }
    if redraws > n_sims / 10 {
        return Err(Error::NullSimulationFailed {
            failed: redraws,
            requested: n_sims,
            cap: n_sims / 10,
        });
    }
    Ok(p_tilde)
}

/// Empirical-CDF calibration with strict inequality: ties between `p_H1`
/// and null draws break toward non-rejection.
pub fn p_star_from(null_p: &[f64], p_h1: f64) -> f64 {
    let below = null_p.iter().filter(|p| **p < p_h1).count();
    below as f64 / null_p.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSeeds {
    /// Seed for the observed split plan.
    pub split: u64,
    /// Seed for the null-simulation substreams.
    pub null: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BootConfig {
    /// Number of sample splits `B`.
    pub b: usize,
    /// Number of null simulations `N`.
    pub n_null: usize,
    /// Split inclusion probability.
    pub pi: f64,
    pub seeds: TestSeeds,
}

impl BootConfig {
    pub fn new(b: usize, n_null: usize, seeds: TestSeeds) -> Self {
        Self {
            b,
            n_null,
            pi: 0.5,
            seeds,
        }
    }
}

/// The full record of one bootstrap test.
#[derive(Clone, Debug, Serialize)]
pub struct BootstrapTestReport {
    pub aggregate: PValueAggregate,
    /// The `N` null-simulated aggregated p-values.
    pub null_p: Vec<f64>,
    /// `#{p_tilde < p_H1} / N`.
    pub p_star: f64,
    pub n_null: usize,
    pub b: usize,
    pub pi: f64,
    pub seeds: TestSeeds,
    pub engine: String,
    pub null_redraws: usize,
}

impl BootstrapTestReport {
    /// The rejection decision is derived, never stored.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_star < alpha
    }
}

/// Steps 1-5 for a model with observed response `y`.
pub fn bootstrap_test<I: SplitInference>(
    inf: &I,
    y: &[f64],
    engine: &NullEngine,
    cfg: &BootConfig,
) -> Result<BootstrapTestReport> {
    if y.len() != inf.n() {
        return Err(Error::InvalidArgument(format!(
            "response length {} != n {}",
            y.len(),
            inf.n()
        )));
    }
    let plan = make_split_plan_with_min(
        inf.n(),
        cfg.b,
        cfg.pi,
        inf.min_in(),
        inf.min_out(),
        cfg.seeds.split,
    )?;
    let aggregate = aggregate_pvalues(inf, y, &plan)?;
    let prepared = inf.prepare_null(engine, y)?;
    let shape = PlanShape {
        n: inf.n(),
        b: cfg.b,
        pi: cfg.pi,
        min_in: inf.min_in(),
        min_out: inf.min_out(),
    };
    let null_p = simulate_null(inf, &prepared, &shape, cfg.n_null, cfg.seeds.null)?;
    let p_star = p_star_from(&null_p, aggregate.p_h1);
    Ok(BootstrapTestReport {
        p_star,
        null_p,
        n_null: cfg.n_null,
        b: cfg.b,
        pi: cfg.pi,
        seeds: cfg.seeds,
        engine: engine.kind_name().to_string(),
        null_redraws: 0,
        aggregate,
    })
}

/// Lean summary used by the simulation harness (no per-split or null
/// vectors retained).
#[derive(Clone, Copy, Debug)]
pub struct PStarSummary {
    pub p_star: f64,
    pub p_h1: f64,
    pub beta_bar: f64,
    pub split_failures: usize,
    pub null_redraws: usize,
}

/// Sequential, allocation-light variant of [`bootstrap_test`] for the
/// Monte Carlo harness, which parallelizes over outer replications.
pub fn bootstrap_pstar<I: SplitInference>(
    inf: &I,
    y: &[f64],
    prepared: &PreparedNull,
    cfg: &BootConfig,
) -> Result<PStarSummary> {
    let plan = make_split_plan_with_min(
        inf.n(),
        cfg.b,
        cfg.pi,
        inf.min_in(),
        inf.min_out(),
        cfg.seeds.split,
    )?;
    let prep = inf.prepare(y);
    let mut p_sum = 0.0;
    let mut beta_sum = 0.0;
    let mut ok = 0usize;
    for row in plan.rows() {
        if let Ok(pv) = inf.split_pvalue(y, &prep, row) {
            p_sum += pv.p;
            beta_sum += pv.beta;
            ok += 1;
        }
    }
    if ok == 0 {
        return Err(Error::AllSplitsFailed {
            total: cfg.b,
            first: "all splits failed on observed data".into(),
        });
    }
    let p_h1 = p_sum / ok as f64;
    let beta_bar = beta_sum / ok as f64;

    let shape = PlanShape {
        n: inf.n(),
        b: cfg.b,
        pi: cfg.pi,
        min_in: inf.min_in(),
        min_out: inf.min_out(),
    };
    let mut scratch = NullScratch::new(inf.n());
    let mut below = 0usize;
    let mut redraws = 0usize;
    for j in 0..cfg.n_null as u64 {
        let (p_tilde, extra) = null_p_h1(inf, prepared, &shape, cfg.seeds.null, j, &mut scratch)?;
        if p_tilde < p_h1 {
            below += 1;
        }
        redraws += extra;
    }
    if redraws > cfg.n_null / 10 {
        return Err(Error::NullSimulationFailed {
            failed: redraws,
            requested: cfg.n_null,
            cap: cfg.n_null / 10,
        });
    }
    Ok(PStarSummary {
        p_star: below as f64 / cfg.n_null as f64,
        p_h1,
        beta_bar,
        split_failures: cfg.b - ok,
        null_redraws: redraws,
    })
}

// ---------------------------------------------------------------------------
// Index-model inference: closed-form least squares per split.
// ---------------------------------------------------------------------------

/// Two-stage linear index model `Y = X' theta + e` then
/// `Y = beta_0 (X' theta_hat / |theta_hat|) + e`, fitted by normal
/// equations. Stage one uses the in-set Gram matrix; stage two reuses the
/// full-sample moments so the out-set sums come from subtraction.
pub struct IndexInference {
    n: usize,
    d: usize,
    /// Column-major covariates: `x[j * n + i]`.
    x: Vec<f64>,
    /// Full-sample Gram matrix, packed lower triangle.
    sxx_full: Vec<f64>,
    mode: VarianceMode,
}

/// Per-response moments shared by the `B` splits.
#[derive(Clone, Debug)]
pub struct IndexPrep {
    sxy_full: [f64; MAX_KERNEL_DIM],
    syy_full: f64,
}

impl IndexInference {
    pub fn new(x_rows: &[f64], n: usize, d: usize, mode: VarianceMode) -> Result<Self> {
        if d == 0 || d > MAX_KERNEL_DIM {
            return Err(Error::InvalidArgument(format!(
                "index model supports 1..={MAX_KERNEL_DIM} covariates, got {d}"
            )));
        }
        if x_rows.len() != n * d {
            return Err(Error::InvalidArgument("X block shape mismatch".into()));
        }
        if let VarianceMode::Known(v) = mode {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "known error variance must be positive, got {v}"
                )));
            }
        }
        let mut x = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..d {
                x[j * n + i] = x_rows[i * d + j];
            }
        }
        let mut sxx_full = vec![0.0; d * (d + 1) / 2];
        for i in 0..n {
            for r in 0..d {
                let xr = x[r * n + i];
                for c in 0..=r {
                    sxx_full[r * (r + 1) / 2 + c] += xr * x[c * n + i];
                }
            }
        }
        Ok(Self {
            n,
            d,
            x,
            sxx_full,
            mode,
        })
    }

    /// Build from a dataset carrying `Y` and `X` blocks.
    pub fn from_dataset(data: &Dataset, mode: VarianceMode) -> Result<Self> {
        let x = data
            .x()
            .ok_or_else(|| Error::SchemaMismatch("index model needs an X block".into()))?;
        Self::new(x, data.n(), data.dim_x(), mode)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> VarianceMode {
        self.mode
    }

    /// Unnormalized full-sample first-stage fit (used for residual pools).
    fn full_sample_theta(&self, prep: &IndexPrep) -> Result<Vec<f64>> {
        let mut theta = vec![0.0; self.d];
        if !cholesky_solve_packed(
            &self.sxx_full,
            &prep.sxy_full[..self.d],
            self.d,
            &mut theta,
        ) {
            return Err(Error::RankDeficientDesign);
        }
        Ok(theta)
    }
}

impl SplitInference for IndexInference {
    type Prep = IndexPrep;

    fn n(&self) -> usize {
        self.n
    }

    fn min_in(&self) -> usize {
        self.d + 1
    }

    fn min_out(&self) -> usize {
        self.d + 1
    }

    fn prepare(&self, y: &[f64]) -> IndexPrep {
        debug_assert_eq!(y.len(), self.n);
        let mut sxy_full = [0.0; MAX_KERNEL_DIM];
        let mut syy_full = 0.0;
        for (j, col) in (0..self.d).map(|j| (j, &self.x[j * self.n..(j + 1) * self.n])) {
            let mut s = 0.0;
            for i in 0..self.n {
                s += col[i] * y[i];
            }
            sxy_full[j] = s;
        }
        for &yi in y.iter() {
            syy_full += yi * yi;
        }
        IndexPrep { sxy_full, syy_full }
    }

    fn split_pvalue(&self, y: &[f64], prep: &IndexPrep, row: SplitRow<'_>) -> Result<SplitPv> {
        debug_assert_eq!(row.n(), self.n);
        let d = self.d;
        let n = self.n;

        let mut s_in = [0.0f64; MAX_KERNEL_DIM * (MAX_KERNEL_DIM + 1) / 2];
        let mut v_in = [0.0f64; MAX_KERNEL_DIM];
        let mut yy_in = 0.0f64;
        let mut count_in = 0usize;

        if d == 3 {
            // dominant case in the simulation studies: keep the ten
            // accumulators in registers
            let x1 = &self.x[0..n];
            let x2 = &self.x[n..2 * n];
            let x3 = &self.x[2 * n..3 * n];
            let (mut s11, mut s21, mut s22, mut s31, mut s32, mut s33) =
                (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
            let (mut v1, mut v2, mut v3, mut yy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for (wi, &word) in row.words().iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let i = (wi << 6) + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    // SAFETY: fill_row masks all bits at positions >= n, so
                    // every set-bit index is < n = x1.len() = y.len().
                    let (a, b, c, yi) = unsafe {
                        (
                            *x1.get_unchecked(i),
                            *x2.get_unchecked(i),
                            *x3.get_unchecked(i),
                            *y.get_unchecked(i),
                        )
                    };
                    s11 += a * a;
                    s21 += b * a;
                    s22 += b * b;
                    s31 += c * a;
                    s32 += c * b;
                    s33 += c * c;
                    v1 += a * yi;
                    v2 += b * yi;
                    v3 += c * yi;
                    yy += yi * yi;
                    count_in += 1;
                }
            }
            s_in[..6].copy_from_slice(&[s11, s21, s22, s31, s32, s33]);
            v_in[..3].copy_from_slice(&[v1, v2, v3]);
            yy_in = yy;
        } else {
            for (wi, &word) in row.words().iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let i = (wi << 6) + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let yi = y[i];
                    for r in 0..d {
                        let xr = self.x[r * n + i];
                        for c in 0..=r {
                            s_in[r * (r + 1) / 2 + c] += xr * self.x[c * n + i];
                        }
                        v_in[r] += xr * yi;
                    }
                    yy_in += yi * yi;
                    count_in += 1;
                }
            }
        }

        let count_out = n - count_in;
        if count_in < self.min_in() {
            return Err(Error::InsufficientData {
                active: count_in,
                params: d,
            }
            .at_stage(Stage::First));
        }
        if count_out < self.min_out() {
            return Err(Error::InsufficientData {
                active: count_out,
                params: 1,
            }
            .at_stage(Stage::Second));
        }

        // stage 1: theta_hat from the in-set normal equations
        let mut theta = [0.0f64; MAX_KERNEL_DIM];
        if !cholesky_solve_packed(&s_in[..d * (d + 1) / 2], &v_in[..d], d, &mut theta[..d]) {
            return Err(Error::SingularJacobian.at_stage(Stage::First));
        }

        // rescale to unit norm, sign fixed by the leading nontrivial coordinate
        let norm = theta[..d].iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 1e-300) {
            return Err(Error::SingularJacobian.at_stage(Stage::First));
        }
        let lead = theta[..d]
            .iter()
            .copied()
            .find(|t| t.abs() > norm * 1e-12)
            .unwrap_or(1.0);
        let scale = if lead < 0.0 { -norm } else { norm };
        for t in theta[..d].iter_mut() {
            *t /= scale;
        }

        // stage 2 on D_out via full-minus-in moments
        let mut stt = 0.0;
        let mut sty = 0.0;
        for r in 0..d {
            let tr = theta[r];
            sty += tr * (prep.sxy_full[r] - v_in[r]);
            for c in 0..r {
                stt += 2.0 * tr * theta[c] * (self.sxx_full[r * (r + 1) / 2 + c] - s_in[r * (r + 1) / 2 + c]);
            }
            stt += tr * tr * (self.sxx_full[r * (r + 1) / 2 + r] - s_in[r * (r + 1) / 2 + r]);
        }
        if !(stt.is_finite() && stt > 1e-290) {
            return Err(Error::RankDeficientDesign.at_stage(Stage::Second));
        }
        let beta = sty / stt;

        let p = match self.mode {
            VarianceMode::Known(var) => {
                let z = beta * (stt / var).sqrt();
                normal_two_sided(z)
            }
            VarianceMode::Estimated => {
                let syy_out = prep.syy_full - yy_in;
                let rss = syy_out - sty * sty / stt;
                let df = count_out - 1;
                if rss <= 0.0 {
                    // perfect fit: infinite signal unless the slope is zero too
                    if beta == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let t = beta * (stt * df as f64 / rss).sqrt();
                    t_two_sided_int(t, df)
                }
            }
        };
        Ok(SplitPv { beta, p })
    }

    fn prepare_null(&self, engine: &NullEngine, y_obs: &[f64]) -> Result<PreparedNull> {
        match engine {
            NullEngine::ExactParametric(dist) => Ok(PreparedNull::Exact(*dist)),
            NullEngine::ResidualResample => {
                // residuals of the full-sample first-stage fit, centered and
                // scaled by sqrt(n / (n - p - 1)) with p the design column count
                let prep = self.prepare(y_obs);
                let theta = self.full_sample_theta(&prep)?;
                let n = self.n;
                if n <= self.d + 1 {
                    return Err(Error::InsufficientData {
                        active: n,
                        params: self.d + 1,
                    });
                }
                let mut resid = vec![0.0; n];
                for i in 0..n {
                    let mut fit = 0.0;
                    for j in 0..self.d {
                        fit += theta[j] * self.x[j * n + i];
                    }
                    resid[i] = y_obs[i] - fit;
                }
                let mean = resid.iter().sum::<f64>() / n as f64;
                let scale = (n as f64 / (n - self.d - 1) as f64).sqrt();
                for r in resid.iter_mut() {
                    *r = (*r - mean) * scale;
                }
                Ok(PreparedNull::ResidualPool(resid))
            }
            NullEngine::BinaryParametric => Err(Error::InvalidArgument(
                "binary parametric engine does not apply to a linear index model".into(),
            )),
        }
    }
}

//! Bernoulli sample splits and split-based stacked estimates.
//!
//! A split assigns each record to the training set `D_in` (indicator 1,
//! fits the first stage) or the test set `D_out` (indicator 0, fits the
//! second stage). A plan is `B` independent splits; estimates are combined
//! across splits with the sample mean.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::ee::{solve_stacked_weighted, SolveOptions, StackedFit, StackedModel};
use crate::error::{Error, Result};
use crate::rng::substream;

const REDRAW_ATTEMPTS: usize = 1000;

/// One split row, bit-packed (bit set = `D_in`).
#[derive(Clone, Copy, Debug)]
pub struct SplitRow<'a> {
    words: &'a [u64],
    n: usize,
}

impl<'a> SplitRow<'a> {
    #[inline]
    pub(crate) fn from_words(words: &'a [u64], n: usize) -> Self {
        debug_assert!(words.len() == n.div_ceil(64));
        Self { words, n }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_in(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    pub fn ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indicator weights for the first stage (`delta`).
    pub fn in_weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| if self.is_in(i) { 1.0 } else { 0.0 }).collect()
    }

    /// Indicator weights for the second stage (`1 - delta`).
    pub fn out_weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| if self.is_in(i) { 0.0 } else { 1.0 }).collect()
    }
}

/// `B` independent Bernoulli(pi) splits of `n` records.
#[derive(Clone, Debug)]
pub struct SplitPlan {
    n: usize,
    b: usize,
    pi: f64,
    seed: u64,
    min_in: usize,
    min_out: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl SplitPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Minimum admissible `D_in` / `D_out` sizes every row satisfies.
    pub fn min_counts(&self) -> (usize, usize) {
        (self.min_in, self.min_out)
    }

    pub fn row(&self, b: usize) -> SplitRow<'_> {
        assert!(b < self.b);
        SplitRow {
            words: &self.bits[b * self.words_per_row..(b + 1) * self.words_per_row],
            n: self.n,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SplitRow<'_>> {
        (0..self.b).map(move |b| self.row(b))
    }

    pub fn indicator(&self, b: usize, i: usize) -> bool {
        self.row(b).is_in(i)
    }
}

#[inline]
fn fill_row(rng: &mut ChaCha8Rng, pi: f64, n: usize, words: &mut [u64]) {
    if pi == 0.5 {
        // one uniform word yields 64 fair Bernoulli draws
        for w in words.iter_mut() {
            *w = rng.random::<u64>();
        }
    } else {
        for w in words.iter_mut() {
            *w = 0;
        }
        for i in 0..n {
            if rng.random::<f64>() < pi {
                words[i >> 6] |= 1 << (i & 63);
            }
        }
    }
    // mask tail bits past n so popcounts are exact
    let tail = n & 63;
    if tail != 0 {
        *words.last_mut().unwrap() &= (1u64 << tail) - 1;
    }
}

/// Draw one admissible split row into `words`: at least `min_in` records on
/// each side, redrawing from fresh substreams up to the attempt cap.
pub(crate) fn draw_row(
    seed: u64,
    row_index: u64,
    n: usize,
    pi: f64,
    min_in: usize,
    min_out: usize,
    words: &mut [u64],
) -> Result<()> {
    for attempt in 0..REDRAW_ATTEMPTS {
        let mut rng = substream(seed, &[row_index, attempt as u64]);
        fill_row(&mut rng, pi, n, words);
        let ones: usize = words.iter().map(|w| w.count_ones() as usize).sum();
        if ones >= min_in && n - ones >= min_out {
            return Ok(());
        }
    }
    Err(Error::DegenerateSplit {
        n,
        attempts: REDRAW_ATTEMPTS,
    })
}

/// Sequential variant drawing all rows from one already-positioned stream
/// (used inside null replicates, where the replicate owns the stream).
pub(crate) fn draw_plan_from_rng(
    rng: &mut ChaCha8Rng,
    n: usize,
    b: usize,
    pi: f64,
    min_in: usize,
    min_out: usize,
    bits: &mut Vec<u64>,
) -> Result<()> {
    let wpr = n.div_ceil(64);
    bits.clear();
    bits.resize(b * wpr, 0);
    for row in 0..b {
        let words = &mut bits[row * wpr..(row + 1) * wpr];
        let mut ok = false;
        for _ in 0..REDRAW_ATTEMPTS {
            fill_row(rng, pi, n, words);
            let ones: usize = words.iter().map(|w| w.count_ones() as usize).sum();
            if ones >= min_in && n - ones >= min_out {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::DegenerateSplit {
                n,
                attempts: REDRAW_ATTEMPTS,
            });
        }
    }
    Ok(())
}

/// Generate a `B x n` plan of i.i.d. Bernoulli(pi) indicators, redrawing any
/// row that would leave either side below the minimum count.
pub fn make_split_plan_with_min(
    n: usize,
    b: usize,
    pi: f64,
    min_in: usize,
    min_out: usize,
    seed: u64,
) -> Result<SplitPlan> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need n >= 4, got {n}")));
    }
    if b < 1 {
        return Err(Error::InvalidArgument("need B >= 1".into()));
    }
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidArgument(format!("pi must be in (0,1), got {pi}")));
    }
    if min_in + min_out > n {
        return Err(Error::InvalidArgument(format!(
            "minimum side counts {min_in}+{min_out} exceed n = {n}"
        )));
    }
    let words_per_row = n.div_ceil(64);
    let mut bits = vec![0u64; b * words_per_row];
    for row in 0..b {
        draw_row(
            seed,
            row as u64,
            n,
            pi,
            min_in.max(1),
            min_out.max(1),
            &mut bits[row * words_per_row..(row + 1) * words_per_row],
        )?;
    }
    Ok(SplitPlan {
        n,
        b,
        pi,
        seed,
        min_in: min_in.max(1),
        min_out: min_out.max(1),
        words_per_row,
        bits,
    })
}

/// Plan with the minimal non-degeneracy requirement (at least one record on
/// each side). Model-aware callers should ask for `dim + 1` per side via
/// [`make_split_plan_with_min`].
pub fn make_split_plan(n: usize, b: usize, pi: f64, seed: u64) -> Result<SplitPlan> {
    make_split_plan_with_min(n, b, pi, 1, 1, seed)
}

/// Stacked estimate from a single split: stage one on `D_in`, stage two on
/// `D_out` with the first-stage fit plugged in.
pub fn single_split_estimate(
    model: &StackedModel,
    data: &Dataset,
    row: SplitRow<'_>,
    opts: &SolveOptions,
) -> Result<StackedFit> {
    if row.n() != data.n() {
        return Err(Error::InvalidArgument(format!(
            "split row length {} != n {}",
            row.n(),
            data.n()
        )));
    }
    let ones = row.ones();
    if ones == 0 || ones == data.n() {
        return Err(Error::DegenerateSplit {
            n: data.n(),
            attempts: 0,
        });
    }
    solve_stacked_weighted(
        model,
        data,
        Some(&row.in_weights()),
        Some(&row.out_weights()),
        opts,
    )
}

/// Per-split estimates aggregated by the sample mean over converged splits.
#[derive(Debug)]
pub struct SplitEstimate {
    /// Per-split first-stage fits (only the converged ones).
    pub theta_b: Vec<Vec<f64>>,
    pub beta_b: Vec<Vec<f64>>,
    pub theta_bar: Vec<f64>,
    pub beta_bar: Vec<f64>,
    /// `(split index, error)` for splits whose solve failed.
    pub failures: Vec<(usize, Error)>,
}

/// Run [`single_split_estimate`] over every plan row and average.
pub fn multi_split_estimate(
    model: &StackedModel,
    data: &Dataset,
    plan: &SplitPlan,
    opts: &SolveOptions,
) -> Result<SplitEstimate> {
    if plan.n() != data.n() {
        return Err(Error::InvalidArgument(format!(
            "plan is for n = {}, data has n = {}",
            plan.n(),
            data.n()
        )));
    }
    let mut theta_b = Vec::with_capacity(plan.b());
    let mut beta_b = Vec::with_capacity(plan.b());
    let mut failures = Vec::new();
    for (bi, row) in plan.rows().enumerate() {
        match single_split_estimate(model, data, row, opts) {
            Ok(fit) => {
                theta_b.push(fit.theta.param);
                beta_b.push(fit.beta.param);
            }
            Err(e) => failures.push((bi, e)),
        }
    }
    if theta_b.is_empty() {
        let first = failures
            .first()
            .map(|(_, e)| e.to_string())
            .unwrap_or_default();
        return Err(Error::AllSplitsFailed {
            total: plan.b(),
            first,
        });
    }
    let mean_of = |rows: &[Vec<f64>]| -> Vec<f64> {
        let dim = rows[0].len();
        let mut out = vec![0.0; dim];
        for r in rows {
            for (o, v) in out.iter_mut().zip(r.iter()) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o /= rows.len() as f64;
        }
        out
    };
    Ok(SplitEstimate {
        theta_bar: mean_of(&theta_b),
        beta_bar: mean_of(&beta_b),
        theta_b,
        beta_b,
        failures,
    })
}

/// Variance of the B-split aggregate of identically distributed, equally
/// correlated per-split estimates: `sigma^2 / B * (1 + (B - 1) rho)`.
pub fn split_variance(sigma: f64, rho: f64, b: usize) -> f64 {
    assert!(b >= 1);
    let bf = b as f64;
    sigma * sigma / bf * (1.0 + (bf - 1.0) * rho)
}

/// The variance curve over a grid of split counts.
pub fn split_variance_curve(sigma: f64, rho: f64, b_values: &[usize]) -> Vec<(usize, f64)> {
    b_values
        .iter()
        .map(|&b| (b, split_variance(sigma, rho, b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RecordView;
    use crate::ee::{FnEquation, FnSecondStage};

    #[test]
    fn plans_are_deterministic_per_seed() {
        let a = make_split_plan(100, 50, 0.5, 7).unwrap();
        let b = make_split_plan(100, 50, 0.5, 7).unwrap();
        assert_eq!(a.bits, b.bits);
        let c = make_split_plan(100, 50, 0.5, 8).unwrap();
        assert_ne!(a.bits, c.bits);
    }

    #[test]
    fn rows_are_never_degenerate() {
        let plan = make_split_plan(100, 1, 0.5, 3).unwrap();
        let ones = plan.row(0).ones();
        assert!(ones >= 1 && ones <= 99);

        // tiny n with an extreme pi still yields admissible rows
        let plan = make_split_plan(5, 200, 0.9, 11).unwrap();
        for row in plan.rows() {
            assert!(row.ones() >= 1 && row.ones() <= 4);
        }
    }

    #[test]
    fn indicator_mean_matches_pi() {
        // law of large numbers at 3 sigma: B=10_000 rows, n=100
        let plan = make_split_plan(100, 10_000, 0.5, 42).unwrap();
        let total: usize = plan.rows().map(|r| r.ones()).sum();
        let frac = total as f64 / (100.0 * 10_000.0);
        let se = (0.25f64 / 1_000_000.0).sqrt();
        assert!(
            (frac - 0.5).abs() < 3.0 * se.max(0.01 / 3.0),
            "indicator mean {frac}"
        );
    }

    #[test]
    fn partition_complementarity() {
        let plan = make_split_plan(130, 20, 0.3, 9).unwrap();
        for row in plan.rows() {
            let ones = (0..130).filter(|&i| row.is_in(i)).count();
            let zeros = (0..130).filter(|&i| !row.is_in(i)).count();
            assert_eq!(ones + zeros, 130);
            assert_eq!(ones, row.ones());
        }
    }

    fn mean_model() -> StackedModel {
        let first = FnEquation::new(1, |rec: RecordView<'_>, p: &[f64], out: &mut [f64]| {
            out[0] = rec.y.unwrap() - p[0];
        });
        // second stage re-estimates the same mean on D_out; enough for the
        // aggregation arithmetic below
        let second = FnSecondStage::new(
            1,
            |rec: RecordView<'_>, _link: crate::ee::FirstStageLink<'_>, b: &[f64], out: &mut [f64]| {
                out[0] = rec.y.unwrap() - b[0];
            },
        );
        StackedModel::new(Box::new(first), Box::new(second), None)
    }

    fn plan_from_rows(n: usize, rows: &[&[bool]]) -> SplitPlan {
        let wpr = n.div_ceil(64);
        let mut bits = vec![0u64; rows.len() * wpr];
        for (r, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v {
                    bits[r * wpr + (i >> 6)] |= 1 << (i & 63);
                }
            }
        }
        SplitPlan {
            n,
            b: rows.len(),
            pi: 0.5,
            seed: 0,
            min_in: 1,
            min_out: 1,
            words_per_row: wpr,
            bits,
        }
    }

    #[test]
    fn single_split_mean_of_first_half() {
        let data = Dataset::from_parts(None, Some(vec![1.0, 2.0, 3.0, 4.0]), None, None).unwrap();
        let model = mean_model();
        let plan = plan_from_rows(4, &[&[true, true, false, false]]);
        let fit = single_split_estimate(&model, &data, plan.row(0), &SolveOptions::default()).unwrap();
        assert!((fit.theta.param[0] - 1.5).abs() < 1e-10); // mean of {1,2}
        assert!((fit.beta.param[0] - 3.5).abs() < 1e-10); // mean of {3,4}
    }

    #[test]
    fn all_ones_row_is_rejected() {
        let data = Dataset::from_parts(None, Some(vec![1.0, 2.0, 3.0, 4.0]), None, None).unwrap();
        let model = mean_model();
        let plan = plan_from_rows(4, &[&[true, true, true, true]]);
        let err = single_split_estimate(&model, &data, plan.row(0), &SolveOptions::default());
        assert!(matches!(err, Err(Error::DegenerateSplit { .. })));
    }

    #[test]
    fn complementary_rows_average_half_means() {
        let data = Dataset::from_parts(None, Some(vec![1.0, 2.0, 3.0, 4.0]), None, None).unwrap();
        let model = mean_model();
        let plan = plan_from_rows(
            4,
            &[&[true, true, false, false], &[false, false, true, true]],
        );
        let est = multi_split_estimate(&model, &data, &plan, &SolveOptions::default()).unwrap();
        // theta_bar = (mean{1,2} + mean{3,4})/2 = (1.5 + 3.5)/2
        assert!((est.theta_bar[0] - 2.5).abs() < 1e-10);
        assert!((est.beta_bar[0] - 2.5).abs() < 1e-10);
        assert!(est.failures.is_empty());
    }

    #[test]
    fn b_equals_one_is_the_single_split() {
        let data =
            Dataset::from_parts(None, Some(vec![1.0, 5.0, 2.0, 8.0, 3.0]), None, None).unwrap();
        let model = mean_model();
        let plan = plan_from_rows(5, &[&[true, false, true, false, true]]);
        let single =
            single_split_estimate(&model, &data, plan.row(0), &SolveOptions::default()).unwrap();
        let multi = multi_split_estimate(&model, &data, &plan, &SolveOptions::default()).unwrap();
        assert_eq!(multi.theta_bar, single.theta.param);
        assert_eq!(multi.beta_bar, single.beta.param);
    }

    #[test]
    fn variance_curve_values() {
        // closed form: sigma=1, rho=0.5 gives 0.510 at B=50 and sigma^2 at B=1
        assert!((split_variance(1.0, 0.5, 50) - 0.510).abs() < 1e-12);
        assert_eq!(split_variance(1.0, 0.5, 1), 1.0);
        // large-B limit is rho * sigma^2
        assert!((split_variance(1.0, 0.5, 5_000_000) - 0.5).abs() < 1e-6);
        let curve = split_variance_curve(2.0, 0.25, &[1, 2, 10]);
        assert_eq!(curve.len(), 3);
        assert_eq!(curve[0], (1, 4.0));
    }

    #[test]
    fn variance_curve_is_monotone_in_b() {
        for &rho in &[0.0, 0.3, 0.5, 0.9, 1.0] {
            let mut prev = f64::INFINITY;
            for b in 1..200 {
                let v = split_variance(1.3, rho, b);
                assert!(v <= prev + 1e-15, "rho={rho}, B={b}");
                prev = v;
            }
        }
    }
}

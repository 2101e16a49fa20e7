//! Reference tests the bootstrap procedure is compared against: the exact
//! F-test, the asymptotic Wald test from the stacked sandwich, and the
//! Meinshausen-Buhlmann quantile-aggregated p-value.

use serde::{Deserialize, Serialize};

use crate::boot::{IndexInference, SplitInference, VarianceMode};
use crate::data::Dataset;
use crate::dist::{generate_level_power_data, ErrorDistribution};
use crate::ee::{self, sandwich_covariance, solve_stacked, SolveOptions, StackedModel};
use crate::error::{Error, Result};
use crate::rng::derive_key;
use crate::split::make_split_plan_with_min;
use crate::stats::{f_tail, normal_two_sided, quantile_type1_sorted};

/// Overall-regression F-test of `Y` on the `X` block (regression through
/// the origin): `H_0` is that every coefficient vanishes, the composite
/// null under which `Y` and `X` are independent in the index model.
pub fn f_test(data: &Dataset) -> Result<f64> {
    let y = data
        .y()
        .ok_or_else(|| Error::SchemaMismatch("F-test needs a Y block".into()))?;
    let x = data
        .x()
        .ok_or_else(|| Error::SchemaMismatch("F-test needs an X block".into()))?;
    let d = data.dim_x();
    let n = data.n();
    if n <= d {
        return Err(Error::InsufficientData {
            active: n,
            params: d + 1,
        });
    }
    let fit = ee::ols(x, d, y, None)?;
    let rss0 = fit.syy; // null model: all coefficients zero
    let rss1 = fit.rss;
    let df2 = (n - d) as f64;
    if rss1 <= 0.0 {
        return Ok(0.0); // exact fit: infinite F statistic
    }
    let f = ((rss0 - rss1) / d as f64) / (rss1 / df2);
    Ok(f_tail(f, d as f64, df2))
}

/// Two-sided normal-reference Wald p-value for one coefficient of the
/// full-sample stacked fit, with the sandwich variance. `coefficient_index`
/// addresses the concatenated `(theta, beta)` vector.
pub fn wald_test(model: &StackedModel, data: &Dataset, coefficient_index: usize) -> Result<f64> {
    let p = model.dim_theta + model.dim_beta;
    if coefficient_index >= p {
        return Err(Error::InvalidArgument(format!(
            "coefficient index {coefficient_index} out of range for {p} parameters"
        )));
    }
    let fit = solve_stacked(model, data, &SolveOptions::default())?;
    let cov = sandwich_covariance(model, data, &fit.theta.param, &fit.beta.param)?;
    let est = if coefficient_index < model.dim_theta {
        fit.theta.param[coefficient_index]
    } else {
        fit.beta.param[coefficient_index - model.dim_theta]
    };
    if est == 0.0 {
        return Ok(1.0);
    }
    let var = cov.get(coefficient_index, coefficient_index);
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::SingularJacobian);
    }
    Ok(normal_two_sided(est / var.sqrt()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeinshausenOptions {
    pub gamma_min: f64,
    /// Increasing grid strictly inside `(gamma_min, 1)`.
    pub gamma_grid: Vec<f64>,
}

impl Default for MeinshausenOptions {
    fn default() -> Self {
        Self::with_grid(0.05, 512)
    }
}

impl MeinshausenOptions {
    /// Log-spaced grid of `points` gammas strictly inside `(gamma_min, 1)`.
    pub fn with_grid(gamma_min: f64, points: usize) -> Self {
        assert!(gamma_min > 0.0 && gamma_min < 1.0);
        assert!(points >= 2);
        let lo = gamma_min.ln();
        let gamma_grid = (1..=points)
            .map(|k| {
                let t = k as f64 / (points as f64 + 1.0);
                (lo * (1.0 - t)).exp()
            })
            .collect();
        Self {
            gamma_min,
            gamma_grid,
        }
    }
}

/// Quantile-aggregated p-value over the splits:
/// `min(1, (1 - ln gamma_min) * min_gamma Q(gamma) / gamma)` with `Q` the
/// right-continuous empirical quantile of the per-split p-values, clipped
/// at one.
pub fn meinshausen_pvalue(p_b: &[f64], opts: &MeinshausenOptions) -> f64 {
    assert!(!p_b.is_empty());
    debug_assert!(p_b.iter().all(|p| (0.0..=1.0).contains(p)));
    let mut sorted = p_b.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = f64::INFINITY;
    for &gamma in &opts.gamma_grid {
        let q = quantile_type1_sorted(&sorted, gamma).min(1.0);
        best = best.min(q / gamma);
    }
    ((1.0 - opts.gamma_min.ln()) * best).min(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct MbLevelReport {
    pub reps: usize,
    pub rejections: usize,
    pub level: f64,
    pub alpha: f64,
    pub b: usize,
    pub n: usize,
    pub seed: u64,
}

/// Monte Carlo level of the Meinshausen test at `alpha` under the strong
/// null of the index model (known-variance per-split p-values, the same
/// ones fed to the bootstrap test).
pub fn meinshausen_null_level(
    b: usize,
    n: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
    opts: &MeinshausenOptions,
) -> Result<MbLevelReport> {
    let theta = [1.0, 1.0, 1.0];
    let mut rejections = 0usize;
    for rep in 0..reps {
        let data = generate_level_power_data(
            n,
            &theta,
            0.0,
            &ErrorDistribution::NORMAL,
            derive_key(seed, &[rep as u64]),
        )?;
        let inf = IndexInference::from_dataset(&data, VarianceMode::Known(1.0))?;
        let plan = make_split_plan_with_min(
            n,
            b,
            0.5,
            inf.min_in(),
            inf.min_out(),
            derive_key(seed, &[rep as u64, 1]),
        )?;
        let y = data.y().unwrap();
        let prep = inf.prepare(y);
        let mut p_b = Vec::with_capacity(b);
        for row in plan.rows() {
            if let Ok(pv) = inf.split_pvalue(y, &prep, row) {
                p_b.push(pv.p);
            }
        }
        if p_b.is_empty() {
            continue;
        }
        if meinshausen_pvalue(&p_b, opts) <= alpha {
            rejections += 1;
        }
    }
    Ok(MbLevelReport {
        reps,
        rejections,
        level: rejections as f64 / reps as f64,
        alpha,
        b,
        n,
        seed,
    })
}

// shared with the acceptance and unit tests
#[doc(hidden)]
pub fn index_inference_for_tests(data: &Dataset, mode: VarianceMode) -> IndexInference {
    IndexInference::from_dataset(data, mode).unwrap()
}

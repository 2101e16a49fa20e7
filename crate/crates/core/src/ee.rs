//! Estimating equations and their solvers.
//!
//! An M-estimator is the root of a sample-average score equation
//! `0 = n^-1 sum_i psi(record_i; theta)`. A stacked system pairs a first-stage
//! equation for `theta` with a second-stage equation for `beta` that consumes
//! either `theta` itself or a scalar index `f(x; theta)`. Stacked systems are
//! solved sequentially: the first stage determines `theta_hat`, which is then
//! held fixed while the second stage is solved.

use crate::data::{Dataset, RecordView};
use crate::error::{Error, Result, Stage};
use crate::linalg::{self, Matrix};

/// A vector-valued per-observation score function.
pub trait EstimatingEquation: Sync {
    fn dim_param(&self) -> usize;
    /// Evaluate the score at one record; `out` has length `dim_param`.
    fn evaluate(&self, rec: RecordView<'_>, param: &[f64], out: &mut [f64]);
}

/// What the second stage sees from the first: the raw parameter vector, or
/// the scalar index `f(x; theta)` when an index function is declared.
#[derive(Clone, Copy, Debug)]
pub enum FirstStageLink<'a> {
    Theta(&'a [f64]),
    Index(f64),
}

impl<'a> FirstStageLink<'a> {
    pub fn index(&self) -> f64 {
        match self {
            FirstStageLink::Index(v) => *v,
            FirstStageLink::Theta(_) => panic!("second stage expected an index value"),
        }
    }

    pub fn theta(&self) -> &'a [f64] {
        match self {
            FirstStageLink::Theta(t) => t,
            FirstStageLink::Index(_) => panic!("second stage expected the raw parameter"),
        }
    }
}

/// Second-stage score for `beta`, given the first-stage link.
pub trait SecondStage: Sync {
    fn dim_param(&self) -> usize;
    fn evaluate(&self, rec: RecordView<'_>, link: FirstStageLink<'_>, beta: &[f64], out: &mut [f64]);
}

/// Equation backed by a closure; handy for small models and tests.
pub struct FnEquation<F> {
    dim: usize,
    f: F,
}

impl<F> FnEquation<F>
where
    F: Fn(RecordView<'_>, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> EstimatingEquation for FnEquation<F>
where
    F: Fn(RecordView<'_>, &[f64], &mut [f64]) + Sync,
{
    fn dim_param(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, rec: RecordView<'_>, param: &[f64], out: &mut [f64]) {
        (self.f)(rec, param, out)
    }
}

/// Second stage backed by a closure.
pub struct FnSecondStage<F> {
    dim: usize,
    f: F,
}

impl<F> FnSecondStage<F>
where
    F: Fn(RecordView<'_>, FirstStageLink<'_>, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> SecondStage for FnSecondStage<F>
where
    F: Fn(RecordView<'_>, FirstStageLink<'_>, &[f64], &mut [f64]) + Sync,
{
    fn dim_param(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, rec: RecordView<'_>, link: FirstStageLink<'_>, beta: &[f64], out: &mut [f64]) {
        (self.f)(rec, link, beta, out)
    }
}

type IndexFn = dyn Fn(&[f64], &[f64]) -> f64 + Sync + Send;

/// A two-stage system of estimating equations.
pub struct StackedModel {
    pub dim_theta: usize,
    pub dim_beta: usize,
    first: Box<dyn EstimatingEquation + Send>,
    second: Box<dyn SecondStage + Send>,
    index_fn: Option<Box<IndexFn>>,
}

impl StackedModel {
    pub fn new(
        first: Box<dyn EstimatingEquation + Send>,
        second: Box<dyn SecondStage + Send>,
        index_fn: Option<Box<IndexFn>>,
    ) -> Self {
        Self {
            dim_theta: first.dim_param(),
            dim_beta: second.dim_param(),
            first,
            second,
            index_fn,
        }
    }

    pub fn first(&self) -> &(dyn EstimatingEquation + Send) {
        self.first.as_ref()
    }

    /// The link the second stage consumes at this record.
    pub fn link<'t>(&self, rec: RecordView<'_>, theta: &'t [f64]) -> FirstStageLink<'t> {
        match &self.index_fn {
            Some(f) => {
                let x = rec.x.expect("index function requires an X block");
                FirstStageLink::Index(f(x, theta))
            }
            None => FirstStageLink::Theta(theta),
        }
    }

    pub fn second_score(&self, rec: RecordView<'_>, theta: &[f64], beta: &[f64], out: &mut [f64]) {
        let link = self.link(rec, theta);
        self.second.evaluate(rec, link, beta, out);
    }

    /// Concatenated score `[psi(theta); kappa(theta, beta)]`.
    pub fn stacked_score(&self, rec: RecordView<'_>, theta: &[f64], beta: &[f64], out: &mut [f64]) {
        let (head, tail) = out.split_at_mut(self.dim_theta);
        self.first.evaluate(rec, theta, head);
        self.second_score(rec, theta, beta, tail);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Sup-norm bound on the mean equation at convergence.
    pub tol: f64,
    /// Backtracking shrink factor in (0, 1]; 1 disables the line search.
    pub damping: f64,
    /// Relative forward-difference step for the numerical Jacobian.
    pub jacobian_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
            damping: 0.5,
            jacobian_step: 1e-6,
        }
    }
}

/// A converged solve: the root, how we got there, and the certificate.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub param: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of the mean equation at `param`.
    pub residual: f64,
    /// Initialization the iteration started from.
    pub init: Vec<f64>,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct MeanEquation<'a, E: ?Sized> {
    eq: &'a E,
    data: &'a Dataset,
    weights: Option<&'a [f64]>,
    weight_sum: f64,
}

impl<'a, E: EstimatingEquation + ?Sized> MeanEquation<'a, E> {
    fn new(eq: &'a E, data: &'a Dataset, weights: Option<&'a [f64]>) -> Result<Self> {
        let dim = eq.dim_param();
        if let Some(w) = weights {
            if w.len() != data.n() {
                return Err(Error::InvalidArgument(format!(
                    "weights length {} != n {}",
                    w.len(),
                    data.n()
                )));
            }
        }
        let active = match weights {
            Some(w) => w.iter().filter(|v| **v != 0.0).count(),
            None => data.n(),
        };
        if active < dim {
            return Err(Error::InsufficientData {
                active,
                params: dim,
            });
        }
        let weight_sum = match weights {
            Some(w) => w.iter().sum(),
            None => data.n() as f64,
        };
        Ok(Self {
            eq,
            data,
            weights,
            weight_sum,
        })
    }

    /// Weighted mean score at `param`.
    fn eval(&self, param: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.data.n() {
            let w = self.weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            self.eq.evaluate(self.data.record(i), param, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += w * *s;
            }
        }
        for o in out.iter_mut() {
            *o /= self.weight_sum;
        }
    }
}

/// Solve `0 = mean_i w_i psi(record_i; theta)` by damped Newton iteration
/// with a forward-difference Jacobian. On a stalled line search the
/// iteration restarts once from the zero vector before giving up.
pub fn solve_equation(
    eq: &(dyn EstimatingEquation + Send),
    data: &Dataset,
    weights: Option<&[f64]>,
    init: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let dim = eq.dim_param();
    if init.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "init has length {}, equation has {dim} parameters",
            init.len()
        )));
    }
    let mean = MeanEquation::new(eq, data, weights)?;

    let mut theta = init.to_vec();
    let mut resid = vec![0.0; dim];
    let mut trial_resid = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut jac = vec![0.0; dim * dim];
    let mut step = vec![0.0; dim];

    mean.eval(&theta, &mut resid, &mut scratch);
    let mut norm = sup_norm(&resid);
    let mut best = (theta.clone(), norm);
    let mut restarted = false;

    for iter in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok(SolveReport {
                param: theta,
                iterations: iter,
                residual: norm,
                init: init.to_vec(),
            });
        }

        // forward-difference Jacobian of the mean equation
        for j in 0..dim {
            let h = opts.jacobian_step * theta[j].abs().max(1.0);
            let saved = theta[j];
            theta[j] = saved + h;
            mean.eval(&theta, &mut trial_resid, &mut scratch);
            theta[j] = saved;
            for k in 0..dim {
                jac[k * dim + j] = (trial_resid[k] - resid[k]) / h;
            }
        }

        step.copy_from_slice(&resid);
        for s in step.iter_mut() {
            *s = -*s;
        }
        let mut jac_copy = jac.clone();
        if linalg::solve_in_place(&mut jac_copy, &mut step, dim).is_err() {
            return Err(Error::SingularJacobian);
        }

        // backtracking line search on the residual sup-norm
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-10 {
            let trial: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t + lambda * s)
                .collect();
            mean.eval(&trial, &mut trial_resid, &mut scratch);
            let trial_norm = sup_norm(&trial_resid);
            if trial_norm.is_finite() && trial_norm < norm * (1.0 - 1e-4 * lambda) {
                theta = trial;
                resid.copy_from_slice(&trial_resid);
                norm = trial_norm;
                accepted = true;
                break;
            }
            if opts.damping >= 1.0 {
                break;
            }
            lambda *= opts.damping;
        }
        if norm < best.1 {
            best = (theta.clone(), norm);
        }
        if !accepted {
            if !restarted {
                // restart once from the origin
                restarted = true;
                theta.iter_mut().for_each(|t| *t = 0.0);
                mean.eval(&theta, &mut resid, &mut scratch);
                norm = sup_norm(&resid);
            } else {
                break;
            }
        }
    }

    if norm <= opts.tol {
        return Ok(SolveReport {
            param: theta,
            iterations: opts.max_iter,
            residual: norm,
            init: init.to_vec(),
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: best.1,
        best: best.0,
    })
}

/// Joint fit of a stacked system.
#[derive(Clone, Debug)]
pub struct StackedFit {
    pub theta: SolveReport,
    pub beta: SolveReport,
}

struct SecondAsEquation<'a> {
    model: &'a StackedModel,
    theta: &'a [f64],
}

impl EstimatingEquation for SecondAsEquation<'_> {
    fn dim_param(&self) -> usize {
        self.model.dim_beta
    }

    fn evaluate(&self, rec: RecordView<'_>, beta: &[f64], out: &mut [f64]) {
        self.model.second_score(rec, self.theta, beta, out)
    }
}

/// Solve the two stages sequentially with per-stage record weights
/// (the sample-splitting entry point: stage one sees `delta`, stage two
/// sees `1 - delta`).
pub fn solve_stacked_weighted(
    model: &StackedModel,
    data: &Dataset,
    first_weights: Option<&[f64]>,
    second_weights: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<StackedFit> {
    let theta = solve_equation(
        model.first.as_ref(),
        data,
        first_weights,
        &vec![0.0; model.dim_theta],
        opts,
    )
    .map_err(|e| e.at_stage(Stage::First))?;
    let second = SecondAsEquation {
        model,
        theta: &theta.param,
    };
    let beta = solve_equation(
        &second,
        data,
        second_weights,
        &vec![0.0; model.dim_beta],
        opts,
    )
    .map_err(|e| e.at_stage(Stage::Second))?;
    Ok(StackedFit { theta, beta })
}

/// Full-sample stacked estimator: both stages on all records.
pub fn solve_stacked(model: &StackedModel, data: &Dataset, opts: &SolveOptions) -> Result<StackedFit> {
    solve_stacked_weighted(model, data, None, None, opts)
}

/// Stacked M-estimation sandwich `A^-1 B A^-T / n`, where `A` is the mean
/// Jacobian of the stacked score and `B` its mean outer product, both
/// evaluated at the fit.
pub fn sandwich_covariance(
    model: &StackedModel,
    data: &Dataset,
    theta_hat: &[f64],
    beta_hat: &[f64],
) -> Result<Matrix> {
    let dt = model.dim_theta;
    let p = dt + model.dim_beta;
    let n = data.n() as f64;

    let mut param = Vec::with_capacity(p);
    param.extend_from_slice(theta_hat);
    param.extend_from_slice(beta_hat);

    let mean_score = |param: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        let mut scratch = vec![0.0; p];
        for i in 0..data.n() {
            model.stacked_score(data.record(i), &param[..dt], &param[dt..], &mut scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += *s;
            }
        }
        for o in out.iter_mut() {
            *o /= n;
        }
    };

    // B: mean outer product of per-record scores
    let mut b = Matrix::zeros(p, p);
    let mut scratch = vec![0.0; p];
    for i in 0..data.n() {
        model.stacked_score(data.record(i), theta_hat, beta_hat, &mut scratch);
        for r in 0..p {
            for c in 0..p {
                b.set(r, c, b.get(r, c) + scratch[r] * scratch[c] / n);
            }
        }
    }

    // A: forward-difference Jacobian of the mean score
    let mut base = vec![0.0; p];
    mean_score(&param, &mut base);
    let mut a = Matrix::zeros(p, p);
    let step = 1e-6;
    let mut bumped = vec![0.0; p];
    for j in 0..p {
        let h = step * param[j].abs().max(1.0);
        let saved = param[j];
        param[j] = saved + h;
        mean_score(&param, &mut bumped);
        param[j] = saved;
        for k in 0..p {
            a.set(k, j, (bumped[k] - base[k]) / h);
        }
    }

    let a_inv = linalg::invert(&a)?;
    let cov = a_inv.matmul(&b).matmul(&a_inv.transpose());
    // symmetrize away finite-difference noise
    let mut out = Matrix::zeros(p, p);
    for r in 0..p {
        for c in 0..p {
            out.set(r, c, 0.5 * (cov.get(r, c) + cov.get(c, r)) / n);
        }
    }
    Ok(out)
}

/// Rescale to unit norm with the sign fixed so the first coordinate of
/// nontrivial magnitude is positive. Returns the signed scale `s` with
/// `theta_new = theta_old / s`.
pub fn normalize_direction(theta: &mut [f64]) -> Result<f64> {
    let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm < 1e-300 || !norm.is_finite() {
        return Err(Error::InvalidArgument(
            "cannot normalize a zero-length direction".into(),
        ));
    }
    let lead = theta
        .iter()
        .find(|t| t.abs() > norm * 1e-12)
        .copied()
        .unwrap_or(1.0);
    let s = if lead < 0.0 { -norm } else { norm };
    for t in theta.iter_mut() {
        *t /= s;
    }
    Ok(s)
}

/// Weighted ordinary least squares by normal equations (no intercept; put a
/// constant column in the design if one is wanted).
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    /// Residual sum of squares over the active records.
    pub rss: f64,
    /// Total sum of squares of the response (no centering).
    pub syy: f64,
    pub n_active: usize,
}

pub fn ols(x: &[f64], dim: usize, y: &[f64], weights: Option<&[f64]>) -> Result<OlsFit> {
    assert!(dim >= 1 && dim <= linalg::MAX_KERNEL_DIM);
    let n = y.len();
    assert_eq!(x.len(), n * dim);
    if let Some(w) = weights {
        assert_eq!(w.len(), n);
    }

    let mut sxx = vec![0.0; dim * (dim + 1) / 2];
    let mut sxy = vec![0.0; dim];
    let mut syy = 0.0;
    let mut n_active = 0usize;
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            continue;
        }
        n_active += 1;
        let xi = &x[i * dim..(i + 1) * dim];
        let yi = y[i];
        for r in 0..dim {
            for c in 0..=r {
                sxx[r * (r + 1) / 2 + c] += w * xi[r] * xi[c];
            }
            sxy[r] += w * xi[r] * yi;
        }
        syy += w * yi * yi;
    }
    if n_active < dim {
        return Err(Error::InsufficientData {
            active: n_active,
            params: dim,
        });
    }
    let mut coef = vec![0.0; dim];
    if !linalg::cholesky_solve_packed(&sxx, &sxy, dim, &mut coef) {
        return Err(Error::RankDeficientDesign);
    }
    let explained: f64 = coef.iter().zip(sxy.iter()).map(|(c, s)| c * s).sum();
    let rss = (syy - explained).max(0.0);
    Ok(OlsFit {
        coef,
        rss,
        syy,
        n_active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_equation() -> FnEquation<impl Fn(RecordView<'_>, &[f64], &mut [f64]) + Sync> {
        FnEquation::new(1, |rec: RecordView<'_>, p: &[f64], out: &mut [f64]| {
            out[0] = rec.w.unwrap() - p[0];
        })
    }

    #[test]
    fn mean_model_root_is_sample_mean() {
        let data = Dataset::from_w(vec![1.0, 2.0, 3.0]).unwrap();
        let eq = mean_equation();
        let fit = solve_equation(&eq, &data, None, &[0.0], &SolveOptions::default()).unwrap();
        assert!((fit.param[0] - 2.0).abs() < 1e-10);
        assert!(fit.residual <= 1e-10);
    }

    #[test]
    fn single_active_point_identity() {
        // one active record pins the mean-model root to that record
        let data = Dataset::from_w(vec![5.0, 999.0]).unwrap();
        let eq = mean_equation();
        let w = [1.0, 0.0];
        let fit = solve_equation(&eq, &data, Some(&w), &[0.0], &SolveOptions::default()).unwrap();
        assert!((fit.param[0] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn least_squares_score_matches_normal_equations() {
        // psi((y,x); theta) = x (y - x'theta) on a fixed 6x2 design
        let x = vec![
            1.0, 0.5, //
            1.0, -1.0, //
            1.0, 2.0, //
            1.0, 0.0, //
            1.0, 1.5, //
            1.0, -0.5,
        ];
        let y = vec![2.0, -1.0, 5.5, 1.0, 4.0, 0.2];
        let data = Dataset::from_y_x(y.clone(), x.clone(), 2).unwrap();
        let eq = FnEquation::new(2, |rec: RecordView<'_>, p: &[f64], out: &mut [f64]| {
            let xi = rec.x.unwrap();
            let r = rec.y.unwrap() - xi[0] * p[0] - xi[1] * p[1];
            out[0] = xi[0] * r;
            out[1] = xi[1] * r;
        });
        let fit = solve_equation(&eq, &data, None, &[0.0, 0.0], &SolveOptions::default()).unwrap();

        // oracle: solve the 2x2 normal equations by direct inversion
        let (mut sxx, mut sxy, mut sx2, mut sy, mut sx) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..6 {
            let (x1, x2, yi) = (x[2 * i], x[2 * i + 1], y[i]);
            sx += x1 * x1;
            sxx += x1 * x2;
            sx2 += x2 * x2;
            sy += x1 * yi;
            sxy += x2 * yi;
        }
        let det = sx * sx2 - sxx * sxx;
        let oracle = [(sx2 * sy - sxx * sxy) / det, (sx * sxy - sxx * sy) / det];
        assert!((fit.param[0] - oracle[0]).abs() < 1e-8);
        assert!((fit.param[1] - oracle[1]).abs() < 1e-8);

        // same answer through the closed-form path
        let ols_fit = ols(&x, 2, &y, None).unwrap();
        assert!((ols_fit.coef[0] - oracle[0]).abs() < 1e-10);
        assert!((ols_fit.coef[1] - oracle[1]).abs() < 1e-10);
    }

    #[test]
    fn insufficient_active_records() {
        let data = Dataset::from_w(vec![1.0, 2.0, 3.0]).unwrap();
        let eq = mean_equation();
        let w = [0.0, 0.0, 0.0];
        let err = solve_equation(&eq, &data, Some(&w), &[0.0], &SolveOptions::default());
        assert!(matches!(err, Err(Error::InsufficientData { .. })));
    }

    fn w_mean_then_linear() -> StackedModel {
        let first = FnEquation::new(1, |rec: RecordView<'_>, p: &[f64], out: &mut [f64]| {
            out[0] = rec.w.unwrap() - p[0];
        });
        let second = FnSecondStage::new(
            1,
            |rec: RecordView<'_>, link: FirstStageLink<'_>, b: &[f64], out: &mut [f64]| {
                out[0] = rec.y.unwrap() - b[0] * link.theta()[0];
            },
        );
        StackedModel::new(Box::new(first), Box::new(second), None)
    }

    #[test]
    fn stacked_exact_linear_relation() {
        // Y = 2 W exactly: theta = mean(W), beta = 2
        let w = vec![1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let data = Dataset::from_parts(Some(w), Some(y), None, None).unwrap();
        let model = w_mean_then_linear();
        let fit = solve_stacked(&model, &data, &SolveOptions::default()).unwrap();
        assert!((fit.theta.param[0] - 2.5).abs() < 1e-9);
        assert!((fit.beta.param[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn stacked_zero_second_stage_information() {
        let w = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![2.0, 4.0, 6.0, 8.0];
        let data = Dataset::from_parts(Some(w), Some(y), None, None).unwrap();
        let model = w_mean_then_linear();
        let none_active = [0.0, 0.0, 0.0, 0.0];
        let err = solve_stacked_weighted(
            &model,
            &data,
            None,
            Some(&none_active),
            &SolveOptions::default(),
        );
        match err {
            Err(Error::StageFailed { stage, source }) => {
                assert_eq!(stage, Stage::Second);
                assert!(matches!(*source, Error::InsufficientData { .. }));
            }
            other => panic!("expected second-stage failure, got {other:?}"),
        }
    }

    #[test]
    fn sandwich_mean_model_equals_sample_variance() {
        let w = vec![1.0, 4.0, 2.0, 8.0, 5.0, 3.0];
        let n = w.len() as f64;
        // population-style variance (1/n), since B is a mean of outer products
        let m = w.iter().sum::<f64>() / n;
        let var_n = w.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let data = Dataset::from_parts(Some(w.clone()), Some(w.clone()), None, None).unwrap();
        let model = w_mean_then_linear();
        let fit = solve_stacked(&model, &data, &SolveOptions::default()).unwrap();
        let cov = sandwich_covariance(&model, &data, &fit.theta.param, &fit.beta.param).unwrap();
        // A for the mean equation is -1, so var(theta_hat) = var_n / n
        assert!((cov.get(0, 0) - var_n / n).abs() < 1e-6 * var_n);
    }

    #[test]
    fn sandwich_is_permutation_invariant() {
        let w = vec![1.0, 4.0, 2.0, 8.0, 5.0, 3.0];
        let y: Vec<f64> = w.iter().map(|v| 2.0 * v + 0.5).collect();
        let model = w_mean_then_linear();
        let data = Dataset::from_parts(Some(w.clone()), Some(y.clone()), None, None).unwrap();
        let fit = solve_stacked(&model, &data, &SolveOptions::default()).unwrap();
        let cov = sandwich_covariance(&model, &data, &fit.theta.param, &fit.beta.param).unwrap();

        let perm = [3usize, 0, 5, 1, 4, 2];
        let wp: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let datap = Dataset::from_parts(Some(wp), Some(yp), None, None).unwrap();
        let fitp = solve_stacked(&model, &datap, &SolveOptions::default()).unwrap();
        let covp = sandwich_covariance(&model, &datap, &fitp.theta.param, &fitp.beta.param).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((cov.get(r, c) - covp.get(r, c)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn normalize_direction_sign_and_scale() {
        let mut t = vec![-3.0, 4.0];
        let s = normalize_direction(&mut t).unwrap();
        assert!((s + 5.0).abs() < 1e-12); // negative leading coordinate flips the sign
        assert!((t[0] - 0.6).abs() < 1e-12);
        assert!((t[1] + 0.8).abs() < 1e-12);
        assert!(normalize_direction(&mut [0.0, 0.0]).is_err());
    }

    #[test]
    fn mean_equation_is_affinely_equivariant() {
        let base = vec![1.0, 2.5, -0.5, 7.0];
        for c in [0.5, 2.0, -3.0] {
            let scaled: Vec<f64> = base.iter().map(|v| c * v).collect();
            let eq = mean_equation();
            let d1 = Dataset::from_w(base.clone()).unwrap();
            let d2 = Dataset::from_w(scaled).unwrap();
            let f1 = solve_equation(&eq, &d1, None, &[0.0], &SolveOptions::default()).unwrap();
            let f2 = solve_equation(&eq, &d2, None, &[0.0], &SolveOptions::default()).unwrap();
            assert!((f2.param[0] - c * f1.param[0]).abs() < 1e-8);
        }
    }
}

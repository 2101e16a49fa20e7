//! Concrete model families: the unit-norm linear index model used by the
//! level/power studies, and the constrained logistic activity-score family.

pub mod score;

use crate::data::{Dataset, RecordView};
use crate::dist::{generate_level_power_data, ErrorDistribution};
use crate::ee::{FnEquation, FnSecondStage, StackedModel};
use crate::error::{Error, Result};

pub use score::{
    downstream_logistic_test, fit_score_model, generate_score_data, rescale_score, LogisticTerm,
    RescaledScore, ScoreDataConfig, ScoreInference, ScoreModel, ACTIVITY_COLUMNS,
};

/// `Y = beta0 (X' theta) + eps` with `theta` on the unit sphere so `beta0`
/// is identified.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexModel {
    pub dim_x: usize,
    /// Unit-norm direction.
    pub theta: Vec<f64>,
    pub beta0: f64,
}

impl IndexModel {
    pub fn new(theta: Vec<f64>, beta0: f64) -> Result<Self> {
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("theta must be nonzero".into()));
        }
        let theta: Vec<f64> = theta.iter().map(|t| t / norm).collect();
        Ok(Self {
            dim_x: theta.len(),
            theta,
            beta0,
        })
    }

    /// The benchmark direction `(1, 1, 1)/sqrt(3)`.
    pub fn benchmark(beta0: f64) -> Self {
        Self::new(vec![1.0, 1.0, 1.0], beta0).unwrap()
    }

    pub fn generate(&self, n: usize, dist: &ErrorDistribution, seed: u64) -> Result<Dataset> {
        generate_level_power_data(n, &self.theta, self.beta0, dist, seed)
    }

    /// Stacked estimating-equation representation. The first stage is the
    /// least-squares score for `theta`; the second stage regresses the
    /// response on the normalized index `f(x; theta) = x' theta / |theta|`
    /// (sign fixed by the leading coordinate), so the full-sample stacked
    /// estimator is well defined.
    pub fn stacked(&self) -> StackedModel {
        let d = self.dim_x;
        let first = FnEquation::new(d, move |rec: RecordView<'_>, theta: &[f64], out: &mut [f64]| {
            let x = rec.x.expect("index model needs X");
            let r = rec.y.expect("index model needs Y")
                - x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>();
            for (o, xi) in out.iter_mut().zip(x) {
                *o = xi * r;
            }
        });
        let second = FnSecondStage::new(
            1,
            |rec: RecordView<'_>, link: crate::ee::FirstStageLink<'_>, beta: &[f64], out: &mut [f64]| {
                let f = link.index();
                out[0] = f * (rec.y.expect("index model needs Y") - beta[0] * f);
            },
        );
        let index_fn = move |x: &[f64], theta: &[f64]| -> f64 {
            let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let lead = theta
                .iter()
                .copied()
                .find(|t| t.abs() > norm * 1e-12)
                .unwrap_or(1.0);
            let s = if lead < 0.0 { -norm } else { norm };
            x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() / s
        };
        StackedModel::new(Box::new(first), Box::new(second), Some(Box::new(index_fn)))
    }
}

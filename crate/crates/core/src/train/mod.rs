//! Fitting network weights to labeled pairs.
//!
//! The network score is used directly as the match probability for binary
//! cross-entropy. Three fitters share the same loss and accuracy: full-batch
//! steepest descent with an analytic gradient, exhaustive grid search, and a
//! seeded (1+λ) evolution strategy.

mod dataset;
mod es;
mod grid;
mod job;
mod report;
mod sgd;

use std::collections::{BTreeMap, BTreeSet};

pub(crate) use dataset::{de_label, ser_label};
pub use dataset::{Dataset, Example, LabeledPair};
pub use es::{es_fit, EsParams};
pub use grid::{grid_search, GridSpec, Metric};
pub use job::{run_job, TrainJob};
pub use report::{EvaluatedConfig, TrainMode, TrainReport, TrajectoryPoint};
pub use sgd::{sgd_fit, SgdParams};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::simnet::{classify, Param, WeightConfig};

/// Probability clip used by [`bce`].
pub const BCE_EPS: f64 = 1e-7;

fn clip<F: Scalar>(p: F) -> F {
    let eps = F::lit(BCE_EPS);
    p.max(eps).min(F::one() - eps)
}

/// `-[y ln p + (1 - y) ln(1 - p)]` with `p` clipped to `[eps, 1 - eps]`.
pub fn bce<F: Scalar>(label: bool, p: F) -> F {
    let p = clip(p);
    if label {
        -p.ln()
    } else {
        -(F::one() - p).ln()
    }
}

/// `d bce / d p`; zero where the clip is active.
fn bce_derivative<F: Scalar>(label: bool, p: F) -> F {
    let eps = F::lit(BCE_EPS);
    if p <= eps || p >= F::one() - eps {
        return F::zero();
    }
    if label {
        -F::one() / p
    } else {
        F::one() / (F::one() - p)
    }
}

/// Mean BCE of the network score over the dataset.
pub fn dataset_loss<F: Scalar>(ds: &Dataset<F>, cfg: &WeightConfig<F>) -> Result<F> {
    let scores = ds.scores(cfg)?;
    Ok(mean_loss(ds, &scores))
}

fn mean_loss<F: Scalar>(ds: &Dataset<F>, scores: &[F]) -> F {
    let total = ds
        .labels()
        .zip(scores)
        .fold(F::zero(), |acc, (y, &p)| acc + bce(y, p));
    total / F::from_count(scores.len())
}

fn percent_correct<F: Scalar>(ds: &Dataset<F>, scores: &[F], threshold: F) -> F {
    let hits = ds
        .labels()
        .zip(scores)
        .filter(|&(y, &p)| classify(p, threshold).matched == y)
        .count();
    F::lit(100.0) * F::from_count(hits) / F::from_count(scores.len())
}

/// Percentage of examples where the thresholded score agrees with the label.
pub fn accuracy<F: Scalar>(ds: &Dataset<F>, cfg: &WeightConfig<F>) -> Result<F> {
    let scores = ds.scores(cfg)?;
    Ok(percent_correct(ds, &scores, cfg.threshold))
}

/// Loss and accuracy in one pass over the dataset.
pub fn evaluate<F: Scalar>(ds: &Dataset<F>, cfg: &WeightConfig<F>) -> Result<(F, F)> {
    let scores = ds.scores(cfg)?;
    Ok((
        mean_loss(ds, &scores),
        percent_correct(ds, &scores, cfg.threshold),
    ))
}

/// Candidate thresholds for [`fit_threshold`]: 0.01, 0.02, ..., 0.99.
pub fn threshold_grid<F: Scalar>() -> Vec<F> {
    (1..100).map(|i| F::from_count(i) / F::lit(100.0)).collect()
}

/// Threshold from the 0.01-step sweep with the highest accuracy. Among
/// equally accurate thresholds the middle one (lower median) is chosen.
pub fn fit_threshold<F: Scalar>(ds: &Dataset<F>, cfg: &WeightConfig<F>) -> Result<F> {
    let scores = ds.scores(cfg)?;
    Ok(best_threshold(ds, &scores).0)
}

pub(crate) fn best_threshold<F: Scalar>(ds: &Dataset<F>, scores: &[F]) -> (F, F) {
    let grid = threshold_grid::<F>();
    let accs: Vec<F> = grid
        .iter()
        .map(|&t| percent_correct(ds, scores, t))
        .collect();
    let best = accs.iter().copied().fold(F::neg_infinity(), F::max);
    let ties: Vec<usize> = (0..grid.len()).filter(|&i| accs[i] == best).collect();
    let pick = ties[(ties.len() - 1) / 2];
    (grid[pick], best)
}

/// Gradient of [`dataset_loss`] with respect to every input and output
/// weight, laid out as [`WeightConfig::weight_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<F: Scalar> {
    pub params: Vec<Param>,
    pub values: Vec<F>,
    /// Coordinates evaluated at a non-differentiable point; their value is
    /// the subgradient 0.
    pub flagged: BTreeSet<Param>,
}

impl<F: Scalar> Gradient<F> {
    pub fn get(&self, p: Param) -> F {
        self.params
            .iter()
            .position(|&q| q == p)
            .map_or_else(F::zero, |i| self.values[i])
    }

    /// Keyed by weight key text (`"title>title"`, `"out:title"`).
    pub fn by_key(&self, cfg: &WeightConfig<F>) -> BTreeMap<String, F> {
        self.params
            .iter()
            .zip(&self.values)
            .map(|(&p, &g)| (cfg.key(p).to_string(), g))
            .collect()
    }

    pub fn is_flagged(&self, p: Param) -> bool {
        self.flagged.contains(&p)
    }
}

/// Analytic gradient by the chain rule through combination, cosine,
/// normalized sum and BCE.
pub fn gradient<F: Scalar>(ds: &Dataset<F>, cfg: &WeightConfig<F>) -> Result<Gradient<F>> {
    ds.check(cfg)?;
    let params = cfg.weight_params();
    let mut values = vec![F::zero(); params.len()];
    let mut flagged = BTreeSet::new();
    let count = F::from_count(ds.len());
    for ex in ds.examples() {
        let label = ex.label;
        let upstream = move |p: F| bce_derivative(label, p) / count;
        ex.pass(cfg, Some((&mut values, &mut flagged, &upstream)));
    }
    Ok(Gradient {
        params,
        values,
        flagged,
    })
}

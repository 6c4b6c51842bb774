use serde_json::Value;

use super::{
    es_fit, evaluate, fit_threshold, grid_search, sgd_fit, Dataset, EsParams, GridSpec,
    LabeledPair, Metric,
};
use super::{SgdParams, TrainMode, TrainReport};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simnet::{Matcher, WeightConfig};
use rand_distr::{Distribution, StandardNormal};

/// A fully specified training run.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainJob<F: Scalar> {
    Grid { grid: GridSpec<F>, metric: Metric },
    Sgd(SgdParams<F>),
    Es(EsParams<F>),
}

impl<F: Scalar> TrainJob<F> {
    /// Builds a job from a mode and its JSON parameters.
    ///
    /// Grid parameters are a grid object, optionally with a `"metric"` key;
    /// SGD and ES parameters are their respective parameter objects, with
    /// missing fields defaulted. `Null` stands for an empty object.
    pub fn from_params(mode: TrainMode, params: Value) -> Result<Self> {
        let params = match params {
            Value::Null => Value::Object(Default::default()),
            v => v,
        };
        match mode {
            TrainMode::Grid => {
                let Value::Object(mut obj) = params else {
                    return Err(Error::Config("grid parameters must be an object".into()));
                };
                let metric = match obj.remove("metric") {
                    Some(m) => serde_json::from_value(m)
                        .map_err(|e| Error::Config(format!("`metric`: {e}")))?,
                    None => Metric::Accuracy,
                };
                if obj.is_empty() {
                    return Err(Error::Config("grid mode needs a grid".into()));
                }
                let grid = GridSpec::from_json(&Value::Object(obj).to_string())?;
                Ok(TrainJob::Grid { grid, metric })
            }
            TrainMode::Sgd => Ok(TrainJob::Sgd(
                serde_json::from_value(params)
                    .map_err(|e| Error::Config(format!("sgd parameters: {e}")))?,
            )),
            TrainMode::Es => Ok(TrainJob::Es(
                serde_json::from_value(params)
                    .map_err(|e| Error::Config(format!("es parameters: {e}")))?,
            )),
        }
    }

    pub fn mode(&self) -> TrainMode {
        match self {
            TrainJob::Grid { .. } => TrainMode::Grid,
            TrainJob::Sgd(_) => TrainMode::Sgd,
            TrainJob::Es(_) => TrainMode::Es,
        }
    }
}

/// Runs `job` on `pairs` starting from `init`.
///
/// Grid search starts from the grid's own component lists when it has them.
/// SGD and ES do not move the threshold, so it is refitted on the final
/// weights and the reported loss and accuracy describe that final config.
pub fn run_job<F: Scalar>(
    matcher: &Matcher<'_, F>,
    pairs: &[LabeledPair],
    init: &WeightConfig<F>,
    job: &TrainJob<F>,
) -> Result<TrainReport<F>>
where
    StandardNormal: Distribution<F>,
{
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match job {
        TrainJob::Grid { grid, metric } => {
            let base = grid.base_config(init)?;
            let ds = Dataset::build(matcher, pairs, &base)?;
            grid_search(&ds, &base, grid, *metric)
        }
        TrainJob::Sgd(params) => {
            let ds = Dataset::build(matcher, pairs, init)?;
            refit_threshold(&ds, sgd_fit(&ds, init, *params)?)
        }
        TrainJob::Es(params) => {
            let ds = Dataset::build(matcher, pairs, init)?;
            refit_threshold(&ds, es_fit(&ds, init, params)?)
        }
    }
}

fn refit_threshold<F: Scalar>(
    ds: &Dataset<F>,
    mut report: TrainReport<F>,
) -> Result<TrainReport<F>> {
    report.best.threshold = fit_threshold(ds, &report.best)?;
    let (loss, acc) = evaluate(ds, &report.best)?;
    report.best_loss = loss;
    report.best_accuracy = acc;
    if let Some(last) = report.evaluated.last_mut() {
        last.config = report.best.clone();
        last.loss = loss;
        last.accuracy = acc;
    }
    Ok(report)
}

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    evaluate, gradient, Dataset, EvaluatedConfig, TrainMode, TrainReport, TrajectoryPoint,
};
use crate::error::{Error, Result};
use crate::scalar::{relu, Scalar};
use crate::simnet::{Param, WeightConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(default)]
pub struct SgdParams<F: Scalar> {
    pub lr: F,
    pub iters: usize,
}

impl<F: Scalar> Default for SgdParams<F> {
    fn default() -> Self {
        SgdParams {
            lr: F::lit(0.1),
            iters: 200,
        }
    }
}

/// Full-batch steepest descent on every input and output weight.
///
/// Output weights are projected onto `v >= 0` after each step, input weights
/// onto `w >= 0` when the weight clamp is on. The threshold is left alone.
pub fn sgd_fit<F: Scalar>(
    ds: &Dataset<F>,
    init: &WeightConfig<F>,
    params: SgdParams<F>,
) -> Result<TrainReport<F>> {
    if params.iters == 0 {
        return Err(Error::Config("iters must be at least 1".into()));
    }
    if !params.lr.is_finite() || params.lr < F::zero() {
        return Err(Error::Config(format!(
            "invalid learning rate {}",
            params.lr
        )));
    }
    let started = Instant::now();
    let mut cfg = init.clone();
    let mut trajectory = Vec::with_capacity(params.iters + 1);
    let mut flagged = std::collections::BTreeSet::new();
    for iteration in 0..=params.iters {
        let (loss, accuracy) = evaluate(ds, &cfg)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                iteration,
                detail: format!("loss = {loss}"),
            });
        }
        trajectory.push(TrajectoryPoint { loss, accuracy });
        if iteration == params.iters {
            break;
        }
        let grad = gradient(ds, &cfg)?;
        for (&p, &g) in grad.params.iter().zip(&grad.values) {
            let mut next = cfg.get(p) - params.lr * g;
            match p {
                Param::Output { .. } => next = relu(next),
                Param::Input { .. } if cfg.clamp.weights => next = relu(next),
                _ => {}
            }
            cfg.set(p, next);
        }
        if cfg.output_sum() <= F::zero() {
            return Err(Error::Config(format!(
                "output weights collapsed to zero at iteration {}",
                iteration + 1
            )));
        }
        flagged.extend(grad.flagged.iter().map(|&p| cfg.key(p).to_string()));
    }
    let last = *trajectory.last().expect("at least one point");
    let first = trajectory[0];
    log::info!(
        "sgd: loss {:.6} -> {:.6} over {} iterations",
        first.loss,
        last.loss,
        params.iters
    );
    Ok(TrainReport {
        mode: TrainMode::Sgd,
        evaluated: vec![
            EvaluatedConfig {
                label: "init".into(),
                config: init.clone(),
                loss: first.loss,
                accuracy: first.accuracy,
            },
            EvaluatedConfig {
                label: "fit".into(),
                config: cfg.clone(),
                loss: last.loss,
                accuracy: last.accuracy,
            },
        ],
        best: cfg,
        best_loss: last.loss,
        best_accuracy: last.accuracy,
        trajectory,
        iterations: params.iters,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        flagged: flagged.into_iter().collect(),
    })
}

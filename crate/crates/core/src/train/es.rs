use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, Dataset, EvaluatedConfig, TrainMode, TrainReport, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::scalar::{relu, Scalar};
use crate::simnet::{Param, WeightConfig, WeightKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(default)]
pub struct EsParams<F: Scalar> {
    /// Offspring per generation (λ).
    pub population: usize,
    pub sigma: F,
    pub generations: usize,
    pub seed: u64,
    /// Parameters to perturb; all input and output weights when `None`.
    pub trainable: Option<Vec<WeightKey>>,
}

impl<F: Scalar> Default for EsParams<F> {
    fn default() -> Self {
        EsParams {
            population: 16,
            sigma: F::lit(0.5),
            generations: 50,
            seed: 0,
            trainable: None,
        }
    }
}

#[derive(Clone, Copy)]
struct Fitness<F> {
    accuracy: F,
    loss: F,
}

impl<F: Scalar> Fitness<F> {
    fn worst() -> Self {
        Fitness {
            accuracy: F::neg_infinity(),
            loss: F::infinity(),
        }
    }

    /// Higher accuracy wins; equal accuracy falls back to lower loss.
    fn beats(&self, other: &Fitness<F>) -> bool {
        self.accuracy > other.accuracy
            || (self.accuracy == other.accuracy && self.loss < other.loss)
    }
}

fn project<F: Scalar>(cfg: &mut WeightConfig<F>, p: Param) {
    let x = cfg.get(p);
    let y = match p {
        Param::Output { .. } => relu(x),
        Param::Input { .. } if cfg.clamp.weights => relu(x),
        Param::Input { .. } => x,
        Param::Threshold => x.max(F::zero()).min(F::one()),
    };
    cfg.set(p, y);
}

fn fitness<F: Scalar>(ds: &Dataset<F>, cfg: &WeightConfig<F>) -> Result<Fitness<F>> {
    if cfg.output_sum() <= F::zero() {
        return Ok(Fitness::worst());
    }
    let (loss, accuracy) = evaluate(ds, cfg)?;
    Ok(Fitness { accuracy, loss })
}

/// (1+λ) elitist evolution strategy with isotropic Gaussian mutations.
///
/// Each generation draws `population` offspring around the parent; the best
/// offspring replaces the parent only if it is strictly fitter (accuracy,
/// then loss). All random draws happen sequentially from one seeded stream
/// before the parallel evaluation, so runs are reproducible.
pub fn es_fit<F: Scalar>(
    ds: &Dataset<F>,
    init: &WeightConfig<F>,
    params: &EsParams<F>,
) -> Result<TrainReport<F>>
where
    StandardNormal: Distribution<F>,
{
    ds.check(init)?;
    if params.population < 2 {
        return Err(Error::Config("population must be at least 2".into()));
    }
    if !params.sigma.is_finite() || params.sigma < F::zero() {
        return Err(Error::Config(format!("invalid sigma {}", params.sigma)));
    }
    let trainable: Vec<Param> = match &params.trainable {
        Some(keys) => keys.iter().map(|k| init.param(k)).collect::<Result<_>>()?,
        None => init.weight_params(),
    };
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut parent = init.clone();
    let mut parent_fit = fitness(ds, &parent)?;
    let initial = parent_fit;
    let mut trajectory = vec![TrajectoryPoint {
        loss: parent_fit.loss,
        accuracy: parent_fit.accuracy,
    }];
    for generation in 0..params.generations {
        let offspring: Vec<WeightConfig<F>> = (0..params.population)
            .map(|_| {
                let mut child = parent.clone();
                for &p in &trainable {
                    let z: F = StandardNormal.sample(&mut rng);
                    child.set(p, parent.get(p) + params.sigma * z);
                    project(&mut child, p);
                }
                child
            })
            .collect();
        let fits: Vec<Fitness<F>> = offspring
            .par_iter()
            .map(|c| fitness(ds, c))
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (i, f) in fits.iter().enumerate() {
            if f.beats(&fits[best]) {
                best = i;
            }
        }
        if fits[best].beats(&parent_fit) {
            parent = offspring[best].clone();
            parent_fit = fits[best];
            log::debug!(
                "es: generation {} improved to {:.2}% / {:.6}",
                generation + 1,
                parent_fit.accuracy,
                parent_fit.loss
            );
        }
        trajectory.push(TrajectoryPoint {
            loss: parent_fit.loss,
            accuracy: parent_fit.accuracy,
        });
    }
    Ok(TrainReport {
        mode: TrainMode::Es,
        evaluated: vec![
            EvaluatedConfig {
                label: "init".into(),
                config: init.clone(),
                loss: initial.loss,
                accuracy: initial.accuracy,
            },
            EvaluatedConfig {
                label: "best".into(),
                config: parent.clone(),
                loss: parent_fit.loss,
                accuracy: parent_fit.accuracy,
            },
        ],
        best: parent,
        best_loss: parent_fit.loss,
        best_accuracy: parent_fit.accuracy,
        trajectory,
        iterations: params.generations,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        flagged: Vec::new(),
    })
}

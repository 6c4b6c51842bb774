use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    best_threshold, mean_loss, percent_correct, Dataset, EvaluatedConfig, TrainMode, TrainReport,
    TrajectoryPoint,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simnet::{Param, WeightConfig, WeightKey};

const MAX_GRID: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Loss,
}

/// Candidate values per weight.
///
/// File format (JSON object):
///
/// ```json
/// {
///   "title>title": [3, 0, 3, 6, 9],
///   "title>summary": [2, 0, 4, 6],
///   "*": [2],
///   "output_weights": [{"title": 1.0, "summary": 1.0}],
///   "threshold": [0.5],
///   "a_components": ["title", "summary", "content"],
///   "b_components": ["title", "summary", "credits"]
/// }
/// ```
///
/// `"*"` sets every input weight without its own key. Without a
/// `"threshold"` list the threshold is fitted per grid point. Grid points
/// are enumerated with the first dimension varying slowest; dimensions are
/// ordered: input-weight keys (ascending key text), `"*"`, output weights,
/// threshold. Ties are broken towards the smallest value tuple in that same
/// order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridSpec<F: Scalar> {
    pub input: BTreeMap<String, Vec<F>>,
    pub others: Option<Vec<F>>,
    pub output_weights: Option<Vec<BTreeMap<String, F>>>,
    pub thresholds: Option<Vec<F>>,
    pub a_components: Option<Vec<String>>,
    pub b_components: Option<Vec<String>>,
}

fn reals<F: Scalar>(key: &str, v: &Value) -> Result<Vec<F>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Config(format!("grid entry `{key}` must be a list")))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .map(F::lit)
                .ok_or_else(|| Error::Config(format!("grid entry `{key}` holds a non-number")))
        })
        .collect()
}

fn names(key: &str, v: &Value) -> Result<Vec<String>> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("`{key}`: {e}")))
}

impl<F: Scalar> GridSpec<F> {
    pub fn from_json(text: &str) -> Result<Self> {
        let obj: Map<String, Value> = serde_json::from_str(text)?;
        let mut spec = GridSpec::default();
        for (key, value) in &obj {
            match key.as_str() {
                "*" => spec.others = Some(reals(key, value)?),
                "threshold" => spec.thresholds = Some(reals(key, value)?),
                "a_components" => spec.a_components = Some(names(key, value)?),
                "b_components" => spec.b_components = Some(names(key, value)?),
                "output_weights" => {
                    let list: Vec<BTreeMap<String, f64>> = serde_json::from_value(value.clone())
                        .map_err(|e| Error::Config(format!("`output_weights`: {e}")))?;
                    spec.output_weights = Some(
                        list.into_iter()
                            .map(|m| m.into_iter().map(|(k, v)| (k, F::lit(v))).collect())
                            .collect(),
                    );
                }
                other => match other.parse::<WeightKey>()? {
                    WeightKey::Input { .. } => {
                        spec.input.insert(other.to_string(), reals(key, value)?);
                    }
                    _ => return Err(Error::Config(format!("unexpected grid key `{other}`"))),
                },
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Value {
        let num = |x: F| serde_json::json!(x.as_f64());
        let mut obj = Map::new();
        for (k, vs) in &self.input {
            obj.insert(k.clone(), vs.iter().map(|&x| num(x)).collect());
        }
        if let Some(o) = &self.others {
            obj.insert("*".into(), o.iter().map(|&x| num(x)).collect());
        }
        if let Some(ws) = &self.output_weights {
            let list: Vec<Value> = ws
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|(k, &v)| (k.clone(), num(v)))
                        .collect::<Map<_, _>>()
                        .into()
                })
                .collect();
            obj.insert("output_weights".into(), list.into());
        }
        if let Some(t) = &self.thresholds {
            obj.insert("threshold".into(), t.iter().map(|&x| num(x)).collect());
        }
        if let Some(a) = &self.a_components {
            obj.insert("a_components".into(), serde_json::json!(a));
        }
        if let Some(b) = &self.b_components {
            obj.insert("b_components".into(), serde_json::json!(b));
        }
        Value::Object(obj)
    }

    fn validate(&self) -> Result<()> {
        let empty = self.input.values().any(Vec::is_empty)
            || self.others.as_ref().is_some_and(Vec::is_empty)
            || self.output_weights.as_ref().is_some_and(Vec::is_empty)
            || self.thresholds.as_ref().is_some_and(Vec::is_empty);
        if empty {
            return Err(Error::Config("every grid list must be non-empty".into()));
        }
        Ok(())
    }

    fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.input.values().map(Vec::len).collect();
        dims.extend(self.others.as_ref().map(Vec::len));
        dims.extend(self.output_weights.as_ref().map(Vec::len));
        dims.extend(self.thresholds.as_ref().map(Vec::len));
        dims
    }

    /// Number of grid points.
    pub fn size(&self) -> usize {
        self.dims().iter().product()
    }

    /// Base config carrying this grid's component lists, falling back to
    /// `fallback` for anything the grid leaves out.
    pub fn base_config(&self, fallback: &WeightConfig<F>) -> Result<WeightConfig<F>> {
        match (&self.a_components, &self.b_components) {
            (None, None) => Ok(fallback.clone()),
            (a, b) => {
                let mut cfg = WeightConfig::new(
                    a.clone()
                        .unwrap_or_else(|| fallback.a_components().to_vec()),
                    b.clone()
                        .unwrap_or_else(|| fallback.b_components().to_vec()),
                )?;
                cfg.threshold = fallback.threshold;
                cfg.clamp = fallback.clamp;
                Ok(cfg)
            }
        }
    }

    /// Materializes every grid point on top of `base`, in enumeration order,
    /// with the value tuple used for tie-breaking.
    fn points(&self, base: &WeightConfig<F>) -> Result<Vec<(WeightConfig<F>, Vec<F>)>> {
        self.validate()?;
        let keyed: Vec<(Param, &Vec<F>)> = self
            .input
            .iter()
            .map(|(k, vs)| Ok((base.param(&k.parse::<WeightKey>()?)?, vs)))
            .collect::<Result<_>>()?;
        if let Some(ws) = &self.output_weights {
            for name in ws.iter().flat_map(|m| m.keys()) {
                base.b_index(name).ok_or_else(|| {
                    Error::Config(format!("output weight for unknown component `{name}`"))
                })?;
            }
        }
        let dims = self.dims();
        let size = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let size = match size {
            Some(s) if s <= MAX_GRID => s,
            _ => return Err(Error::Config(format!("grid larger than {MAX_GRID} points"))),
        };
        let mut points = Vec::with_capacity(size);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..size {
            let mut cfg = base.clone();
            let mut tuple = Vec::new();
            let mut d = 0;
            let mut explicit = std::collections::BTreeSet::new();
            for (p, vs) in &keyed {
                cfg.set(*p, vs[idx[d]]);
                explicit.insert(*p);
                tuple.push(vs[idx[d]]);
                d += 1;
            }
            if let Some(vs) = &self.others {
                let v = vs[idx[d]];
                for p in base.weight_params() {
                    if matches!(p, Param::Input { .. }) && !explicit.contains(&p) {
                        cfg.set(p, v);
                    }
                }
                tuple.push(v);
                d += 1;
            }
            if let Some(ws) = &self.output_weights {
                for (name, &v) in &ws[idx[d]] {
                    cfg.set(
                        Param::Output {
                            b: base.b_index(name).expect("checked"),
                        },
                        v,
                    );
                }
                tuple.extend((0..cfg.m()).map(|b| cfg.output_weight(b)));
                d += 1;
            }
            if let Some(ts) = &self.thresholds {
                cfg.threshold = ts[idx[d]];
                tuple.push(ts[idx[d]]);
            }
            points.push((cfg, tuple));
            // advance the mixed-radix counter, last dimension fastest
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(points)
    }
}

fn lex_cmp<F: Scalar>(x: &[F], y: &[F]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.partial_cmp(b) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    x.len().cmp(&y.len())
}

struct Scored<F: Scalar> {
    cfg: WeightConfig<F>,
    tuple: Vec<F>,
    loss: F,
    accuracy: F,
}

/// `Less` when `x` should be preferred over `y`.
fn preference<F: Scalar>(metric: Metric, x: &Scored<F>, y: &Scored<F>) -> Ordering {
    let by_acc = y
        .accuracy
        .partial_cmp(&x.accuracy)
        .unwrap_or(Ordering::Equal);
    let by_loss = x.loss.partial_cmp(&y.loss).unwrap_or(Ordering::Equal);
    let primary = match metric {
        Metric::Accuracy => by_acc.then(by_loss),
        Metric::Loss => by_loss.then(by_acc),
    };
    primary.then_with(|| lex_cmp(&x.tuple, &y.tuple))
}

/// Evaluates every grid point and keeps the best by `metric` (accuracy:
/// highest accuracy, then lowest loss; loss: the reverse), then by the
/// smallest value tuple.
pub fn grid_search<F: Scalar>(
    ds: &Dataset<F>,
    base: &WeightConfig<F>,
    grid: &GridSpec<F>,
    metric: Metric,
) -> Result<TrainReport<F>> {
    ds.check(base)?;
    let started = Instant::now();
    let points = grid.points(base)?;
    let fit_threshold = grid.thresholds.is_none();
    let scored: Vec<Scored<F>> = points
        .into_par_iter()
        .map(|(mut cfg, tuple)| {
            let scores = ds.scores(&cfg)?;
            let loss = mean_loss(ds, &scores);
            let accuracy = if fit_threshold {
                let (t, acc) = best_threshold(ds, &scores);
                cfg.threshold = t;
                acc
            } else {
                percent_correct(ds, &scores, cfg.threshold)
            };
            Ok(Scored {
                cfg,
                tuple,
                loss,
                accuracy,
            })
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    let mut trajectory = Vec::with_capacity(scored.len());
    for (i, s) in scored.iter().enumerate() {
        if preference(metric, s, &scored[best]) == Ordering::Less {
            best = i;
        }
        trajectory.push(TrajectoryPoint {
            loss: scored[best].loss,
            accuracy: scored[best].accuracy,
        });
    }
    let evaluated: Vec<EvaluatedConfig<F>> = scored
        .iter()
        .enumerate()
        .map(|(i, s)| EvaluatedConfig {
            label: (i + 1).to_string(),
            config: s.cfg.clone(),
            loss: s.loss,
            accuracy: s.accuracy,
        })
        .collect();
    let winner = &scored[best];
    log::info!(
        "grid: {} points, best #{} accuracy {:.2}% loss {:.6}",
        scored.len(),
        best + 1,
        winner.accuracy,
        winner.loss
    );
    Ok(TrainReport {
        mode: TrainMode::Grid,
        best: winner.cfg.clone(),
        best_loss: winner.loss,
        best_accuracy: winner.accuracy,
        iterations: scored.len() - 1,
        trajectory,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        evaluated,
        flagged: Vec::new(),
    })
}

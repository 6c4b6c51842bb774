use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::index::IdfClamp;
use crate::scalar::{relu, Scalar};
use crate::simnet::{ClampMode, Matcher, PairVectors, Param, WeightConfig};

/// A ground-truth (A-document, B-document, match?) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a_id: String,
    pub b_id: String,
    #[serde(serialize_with = "ser_label", deserialize_with = "de_label")]
    pub label: bool,
}

impl LabeledPair {
    pub fn new(a_id: impl Into<String>, b_id: impl Into<String>, label: bool) -> Self {
        LabeledPair {
            a_id: a_id.into(),
            b_id: b_id.into(),
            label,
        }
    }
}

pub(crate) fn ser_label<S: Serializer>(label: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*label))
}

pub(crate) fn de_label<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(serde::de::Error::custom(format!(
            "label must be 0 or 1, got {other}"
        ))),
    }
}

/// One labeled pair with its component vectors laid out densely over the
/// pair's own vocabulary (the union of all its lexemes).
#[derive(Debug, Clone)]
pub struct Example<F: Scalar> {
    pub a_id: String,
    pub b_id: String,
    pub label: bool,
    width: usize,
    /// `n x width`, raw (unclamped) values.
    a: Vec<F>,
    /// `m x width`, raw values.
    b: Vec<F>,
}

/// Per-coordinate kink tolerance for the subgradient convention.
const KINK_EPS: f64 = 1e-9;

/// Output of one forward (and optionally backward) pass over an example.
/// Gradient accumulator, kink set and upstream derivative of the loss.
pub(crate) type GradSink<'a, F> = (&'a mut [F], &'a mut BTreeSet<Param>, &'a dyn Fn(F) -> F);

pub(crate) struct Pass<F> {
    pub score: F,
}

impl<F: Scalar> Example<F> {
    pub fn from_vectors(a_id: &str, b_id: &str, label: bool, pair: &PairVectors<F>) -> Self {
        let vocab: BTreeSet<&str> = pair
            .a
            .iter()
            .chain(&pair.b)
            .flat_map(|v| v.lexemes())
            .collect();
        let slot: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let width = slot.len();
        let dense = |vs: &[crate::textpipe::TermVector<F>]| {
            let mut out = vec![F::zero(); vs.len() * width];
            for (r, v) in vs.iter().enumerate() {
                for (t, w) in v.iter() {
                    out[r * width + slot[t]] = w;
                }
            }
            out
        };
        Example {
            a_id: a_id.to_string(),
            b_id: b_id.to_string(),
            label,
            width,
            a: dense(&pair.a),
            b: dense(&pair.b),
        }
    }

    fn n(&self) -> usize {
        self.a.len().checked_div(self.width).unwrap_or(0)
    }

    /// Score of the pair, and when `grad` is given, accumulates
    /// `upstream * d(score)/d(param)` into it (laid out as
    /// `cfg.weight_params()`), recording kinks in `flags`.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn pass(&self, cfg: &WeightConfig<F>, mut grad: Option<GradSink<'_, F>>) -> Pass<F> {
        let (n, m, width) = (cfg.n(), cfg.m(), self.width);
        let clamp = cfg.clamp;
        let total_v = cfg.output_sum();
        let eps = F::lit(KINK_EPS);
        let a_in = |i: usize, t: usize| {
            let x = self.a[i * width + t];
            if clamp.vectors {
                relu(x)
            } else {
                x
            }
        };
        let mut sims = vec![F::zero(); m];
        // per column: (d sim / d w_ij for each i, kink flags per i)
        let mut dsim_dw: Vec<Vec<F>> = Vec::new();
        let mut column_kinks: Vec<Vec<bool>> = Vec::new();
        let want_grad = grad.is_some();
        let mut c = vec![F::zero(); width];
        let mut pre = vec![F::zero(); width];
        for j in 0..m {
            let w: Vec<F> = cfg.column(j);
            for t in 0..width {
                let mut acc = F::zero();
                for (i, &wi) in w.iter().enumerate() {
                    acc = acc + wi * a_in(i, t);
                }
                pre[t] = acc;
                c[t] = if clamp.vectors { relu(acc) } else { acc };
            }
            let bj: Vec<F> = (0..width)
                .map(|t| {
                    let x = self.b[j * width + t];
                    if clamp.vectors {
                        relu(x)
                    } else {
                        x
                    }
                })
                .collect();
            let cn = c.iter().fold(F::zero(), |s, &x| s + x * x).sqrt();
            let bn = bj.iter().fold(F::zero(), |s, &x| s + x * x).sqrt();
            let dot = c.iter().zip(&bj).fold(F::zero(), |s, (&x, &y)| s + x * y);
            let raw = if cn == F::zero() || bn == F::zero() {
                F::zero()
            } else {
                dot / (cn * bn)
            };
            sims[j] = if clamp.sims { relu(raw) } else { raw };
            if !want_grad {
                continue;
            }
            let mut g = vec![F::zero(); n];
            let mut kinks = vec![false; n];
            if bn == F::zero() || self.width == 0 {
                // sim is identically zero in w
            } else if cn == F::zero() {
                kinks.iter_mut().for_each(|k| *k = true);
            } else {
                let dsim_dc: Vec<F> = (0..width)
                    .map(|t| bj[t] / (cn * bn) - raw * c[t] / (cn * cn))
                    .collect();
                for i in 0..n.min(self.n()) {
                    let mut acc = F::zero();
                    for t in 0..width {
                        let ait = a_in(i, t);
                        if ait == F::zero() {
                            continue;
                        }
                        if clamp.vectors {
                            if pre[t].abs() < eps {
                                kinks[i] = true;
                                continue;
                            }
                            if pre[t] < F::zero() {
                                continue;
                            }
                        }
                        acc = acc + dsim_dc[t] * ait;
                    }
                    let wij = cfg.input_weight(i, j);
                    if clamp.weights {
                        if wij.abs() < eps {
                            kinks[i] = true;
                        } else if wij < F::zero() {
                            acc = F::zero();
                        }
                    }
                    g[i] = acc;
                }
                if clamp.sims {
                    if raw.abs() < eps && g.iter().any(|&x| x != F::zero()) {
                        kinks.iter_mut().for_each(|k| *k = true);
                    } else if raw < F::zero() {
                        g.iter_mut().for_each(|x| *x = F::zero());
                    }
                }
            }
            for (gi, &k) in g.iter_mut().zip(&kinks) {
                if k {
                    *gi = F::zero();
                }
            }
            dsim_dw.push(g);
            column_kinks.push(kinks);
        }
        let weighted = (0..m).fold(F::zero(), |s, j| s + cfg.output_weight(j) * sims[j]);
        let score = weighted / total_v;
        if let Some((grad, flags, upstream)) = grad.as_mut() {
            let up = upstream(score);
            for j in 0..m {
                let ds = cfg.output_weight(j) / total_v;
                for i in 0..n {
                    grad[i * m + j] = grad[i * m + j] + up * ds * dsim_dw[j][i];
                    if column_kinks[j][i] {
                        flags.insert(Param::Input { a: i, b: j });
                    }
                }
                grad[n * m + j] = grad[n * m + j] + up * (sims[j] - score) / total_v;
            }
        }
        Pass { score }
    }

    pub fn score(&self, cfg: &WeightConfig<F>) -> F {
        self.pass(cfg, None).score
    }
}

/// Labeled pairs with their vectors pulled from the indexes once, so that
/// training loops only ever touch weights.
#[derive(Debug, Clone)]
pub struct Dataset<F: Scalar> {
    a_components: Vec<String>,
    b_components: Vec<String>,
    examples: Vec<Example<F>>,
}

impl<F: Scalar> Dataset<F> {
    /// Builds examples for the components named by `cfg`. Vectors are
    /// stored unclamped; each pass applies the config's clamps.
    pub fn build(
        matcher: &Matcher<'_, F>,
        pairs: &[LabeledPair],
        cfg: &WeightConfig<F>,
    ) -> Result<Self> {
        let mut raw = cfg.clone();
        raw.clamp = ClampMode::NONE;
        debug_assert_eq!(Matcher::<F>::idf_clamp(&raw), IdfClamp::Raw);
        let examples = pairs
            .iter()
            .map(|p| {
                let vectors = matcher.pair_vectors(&p.a_id, &p.b_id, &raw)?;
                Ok(Example::from_vectors(&p.a_id, &p.b_id, p.label, &vectors))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            a_components: cfg.a_components().to_vec(),
            b_components: cfg.b_components().to_vec(),
            examples,
        })
    }

    pub fn from_examples(
        a_components: Vec<String>,
        b_components: Vec<String>,
        examples: Vec<Example<F>>,
    ) -> Self {
        Dataset {
            a_components,
            b_components,
            examples,
        }
    }

    pub fn examples(&self) -> &[Example<F>] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub(crate) fn check(&self, cfg: &WeightConfig<F>) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if cfg.a_components() != self.a_components.as_slice()
            || cfg.b_components() != self.b_components.as_slice()
        {
            return Err(Error::Config(
                "config components differ from the dataset's".into(),
            ));
        }
        if cfg.output_sum() <= F::zero() {
            return Err(Error::Config("output weights sum to zero".into()));
        }
        Ok(())
    }

    /// Network score of every example, in dataset order.
    pub fn scores(&self, cfg: &WeightConfig<F>) -> Result<Vec<F>> {
        self.check(cfg)?;
        Ok(self.examples.iter().map(|e| e.score(cfg)).collect())
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.examples.iter().map(|e| e.label)
    }
}

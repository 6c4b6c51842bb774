//! The weighted cosine network.
//!
//! For every B-component `j` (in config order) the A-side component vectors
//! are mixed with column `j` of the input weights, the mix is compared to the
//! B-side vector of component `j` by cosine similarity, and the per-component
//! similarities are averaged with the output weights:
//!
//! ```text
//! combined_j = sum_i w_ij * a_i
//! sim_j      = cos(combined_j, b_j)
//! score      = sum_j v_j * sim_j / sum_j v_j
//! ```
//!
//! A match is declared when `score >= threshold`.

mod config;
mod matcher;

use std::borrow::Cow;
use std::collections::BTreeSet;

use serde::Serialize;

pub use config::{ClampMode, Param, WeightConfig, WeightKey};
pub use matcher::Matcher;

use crate::error::{Error, Result};
use crate::index::{Index, VectorMode};
pub use crate::scalar::relu;
use crate::scalar::Scalar;
use crate::textpipe::TermVector;

/// Sparse linear combination `sum_i weights[i] * vectors[i]`.
pub fn combine<F: Scalar>(vectors: &[TermVector<F>], weights: &[F]) -> Result<TermVector<F>> {
    if vectors.len() != weights.len() {
        return Err(Error::Dimension {
            expected: vectors.len(),
            got: weights.len(),
        });
    }
    let mut out = TermVector::new();
    for (v, &w) in vectors.iter().zip(weights) {
        out.add_scaled(v, w);
    }
    Ok(out)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine<F: Scalar>(u: &TermVector<F>, v: &TermVector<F>) -> F {
    cosine_with_norms(u, u.norm(), v, v.norm())
}

fn cosine_with_norms<F: Scalar>(u: &TermVector<F>, nu: F, v: &TermVector<F>, nv: F) -> F {
    if nu == F::zero() || nv == F::zero() {
        return F::zero();
    }
    u.dot(v) / (nu * nv)
}

/// Component vectors of one (A-document, B-document) pair, aligned with a
/// config's `a_components` and `b_components`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairVectors<F: Scalar> {
    pub a: Vec<TermVector<F>>,
    pub b: Vec<TermVector<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ComponentSim<F: Scalar> {
    pub b_component: String,
    pub combined_norm: F,
    /// Cosine before the similarity clamp.
    pub raw_sim: F,
    /// Value entering the final score.
    pub sim: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SimilarityBreakdown<F: Scalar> {
    pub components: Vec<ComponentSim<F>>,
    pub score: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct MatchDecision<F: Scalar> {
    pub matched: bool,
    pub score: F,
}

/// Binary step: a match iff `score >= threshold`.
pub fn classify<F: Scalar>(score: F, threshold: F) -> MatchDecision<F> {
    MatchDecision {
        matched: score >= threshold,
        score,
    }
}

fn clamped<'a, F: Scalar>(v: &'a TermVector<F>, clamp: bool) -> Cow<'a, TermVector<F>> {
    if clamp && !v.is_nonnegative() {
        Cow::Owned(v.relu())
    } else {
        Cow::Borrowed(v)
    }
}

/// `combined_j` for every B-component, clamped when vector clamping is on.
pub fn combined_columns<F: Scalar>(
    a: &[TermVector<F>],
    cfg: &WeightConfig<F>,
) -> Result<Vec<TermVector<F>>> {
    if a.len() != cfg.n() {
        return Err(Error::Dimension {
            expected: cfg.n(),
            got: a.len(),
        });
    }
    let a: Vec<Cow<'_, TermVector<F>>> = a.iter().map(|v| clamped(v, cfg.clamp.vectors)).collect();
    Ok((0..cfg.m())
        .map(|j| {
            let mut c = TermVector::new();
            for (v, w) in a.iter().zip(cfg.column(j)) {
                c.add_scaled(v, w);
            }
            if cfg.clamp.vectors {
                c.relu()
            } else {
                c
            }
        })
        .collect())
}

fn check_output(cfg: &WeightConfig<impl Scalar>) -> Result<()> {
    if cfg.output_sum() <= num_traits::Zero::zero() {
        return Err(Error::Config("output weights sum to zero".into()));
    }
    Ok(())
}

fn score_columns<F: Scalar>(
    combined: &[TermVector<F>],
    norms: &[F],
    b: &[TermVector<F>],
    cfg: &WeightConfig<F>,
    order: impl Iterator<Item = usize>,
) -> Result<SimilarityBreakdown<F>> {
    if b.len() != cfg.m() {
        return Err(Error::Dimension {
            expected: cfg.m(),
            got: b.len(),
        });
    }
    let mut components = Vec::with_capacity(cfg.m());
    let mut weighted = F::zero();
    for j in order {
        let bj = clamped(&b[j], cfg.clamp.vectors);
        let raw_sim = cosine_with_norms(&combined[j], norms[j], &bj, bj.norm());
        let sim = if cfg.clamp.sims {
            relu(raw_sim)
        } else {
            raw_sim
        };
        weighted = weighted + cfg.output_weight(j) * sim;
        components.push(ComponentSim {
            b_component: cfg.b_components()[j].clone(),
            combined_norm: norms[j],
            raw_sim,
            sim,
        });
    }
    Ok(SimilarityBreakdown {
        components,
        score: weighted / cfg.output_sum(),
    })
}

/// Scores one pair, visiting B-components in config order.
pub fn score<F: Scalar>(
    pair: &PairVectors<F>,
    cfg: &WeightConfig<F>,
) -> Result<SimilarityBreakdown<F>> {
    score_in_order(pair, cfg, &(0..cfg.m()).collect::<Vec<_>>())
}

/// Scores one pair visiting B-components in the given order. `order` must
/// be a permutation of `0..m`; components appear in the breakdown in the
/// order they were visited.
pub fn score_in_order<F: Scalar>(
    pair: &PairVectors<F>,
    cfg: &WeightConfig<F>,
    order: &[usize],
) -> Result<SimilarityBreakdown<F>> {
    check_output(cfg)?;
    let mut seen: Vec<usize> = order.to_vec();
    seen.sort_unstable();
    if seen != (0..cfg.m()).collect::<Vec<_>>() {
        return Err(Error::Config(
            "component order must be a permutation".into(),
        ));
    }
    let combined = combined_columns(&pair.a, cfg)?;
    let norms: Vec<F> = combined.iter().map(TermVector::norm).collect();
    score_columns(&combined, &norms, &pair.b, cfg, order.iter().copied())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Ranked<F: Scalar> {
    pub b_id: String,
    pub score: F,
}

/// Top-`k` B-documents for the given A-side vectors, score descending with
/// ties broken by ascending id.
///
/// Only documents sharing a lexeme with some combined column are scored;
/// every other document has all similarities 0 and is ranked with score 0.
pub fn rank<F: Scalar>(
    a: &[TermVector<F>],
    b_index: &Index,
    b_mode: VectorMode,
    cfg: &WeightConfig<F>,
    k: usize,
) -> Result<Vec<Ranked<F>>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    check_output(cfg)?;
    let combined = combined_columns(a, cfg)?;
    let norms: Vec<F> = combined.iter().map(TermVector::norm).collect();
    let mut candidates = BTreeSet::new();
    for (j, column) in combined.iter().enumerate() {
        b_index.collect_candidates(column, &cfg.b_components()[j], &mut candidates);
    }
    let clamp = Matcher::<F>::idf_clamp(cfg);
    let mut ranked = Vec::with_capacity(b_index.len());
    for id in b_index.ids() {
        let score = if candidates.contains(id) {
            let b = cfg
                .b_components()
                .iter()
                .map(|field| b_index.component_vector(id, field, b_mode, clamp))
                .collect::<Result<Vec<_>>>()?;
            score_columns(&combined, &norms, &b, cfg, 0..cfg.m())?.score
        } else {
            F::zero()
        };
        ranked.push(Ranked {
            b_id: id.to_string(),
            score,
        });
    }
    sort_ranked(&mut ranked);
    ranked.truncate(k);
    Ok(ranked)
}

pub(crate) fn sort_ranked<F: Scalar>(ranked: &mut [Ranked<F>]) {
    ranked.sort_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.b_id.cmp(&y.b_id))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tv(entries: &[(&str, f64)]) -> TermVector<f64> {
        TermVector::from_weights(entries.iter().map(|&(t, w)| (t.to_string(), w)))
    }

    #[test]
    fn combine_examples() {
        let a = [tv(&[("x", 1.0)]), tv(&[("y", 1.0)])];
        assert_eq!(
            combine(&a, &[2.0, 1.0]).unwrap(),
            tv(&[("x", 2.0), ("y", 1.0)])
        );
        assert!(combine(&a, &[0.0, 0.0]).unwrap().is_empty());
        assert_eq!(combine(&a[..1], &[1.0]).unwrap(), a[0]);
        assert!(matches!(
            combine(&a, &[1.0]),
            Err(Error::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn cosine_examples() {
        let u = tv(&[("x", 1.0), ("y", 1.0)]);
        assert_abs_diff_eq!(cosine(&u, &u), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            cosine(&u, &tv(&[("x", 1.0)])),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_eq!(cosine(&TermVector::new(), &u), 0.0);
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(-0.3f64), 0.0);
        assert_eq!(relu(0.7f64), 0.7);
    }

    fn two_column_cfg(v: [f64; 2]) -> WeightConfig<f64> {
        let mut cfg = WeightConfig::new(["t"], ["t", "s"]).unwrap();
        cfg.set_input_weight(0, 0, 1.0);
        cfg.set_input_weight(0, 1, 1.0);
        cfg.set_output_weight(0, v[0]);
        cfg.set_output_weight(1, v[1]);
        cfg
    }

    #[test]
    fn score_aggregates_per_component_sims() {
        // a = {x:1, y:1, z:..}; b_t gives cos 0.5, b_s gives cos 1.0
        let a = tv(&[("x", 1.0), ("y", 3f64.sqrt())]);
        let pair = PairVectors {
            a: vec![a.clone()],
            b: vec![tv(&[("x", 1.0)]), a],
        };
        let s = score(&pair, &two_column_cfg([1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(s.components[0].sim, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.components[1].sim, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.score, 0.75, epsilon = 1e-12);

        let s = score(&pair, &two_column_cfg([2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(s.score, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn score_with_weighted_outputs() {
        // sims (0.3, 0.9) with v = (2, 0) -> 0.3
        let u = tv(&[("x", 0.3), ("y", (1.0f64 - 0.09).sqrt())]);
        let w = tv(&[("x", 0.9), ("y", (1.0f64 - 0.81).sqrt())]);
        let x = tv(&[("x", 1.0)]);
        let pair = PairVectors {
            a: vec![x],
            b: vec![u, w],
        };
        let s = score(&pair, &two_column_cfg([2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(s.components[1].sim, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(s.score, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn empty_b_components_score_zero() {
        let pair = PairVectors {
            a: vec![tv(&[("x", 1.0)])],
            b: vec![TermVector::new(), TermVector::new()],
        };
        assert_eq!(
            score(&pair, &two_column_cfg([1.0, 1.0])).unwrap().score,
            0.0
        );
    }

    #[test]
    fn zero_output_sum_is_config_error() {
        let pair = PairVectors {
            a: vec![tv(&[("x", 1.0)])],
            b: vec![TermVector::new(), TermVector::new()],
        };
        assert!(matches!(
            score(&pair, &two_column_cfg([0.0, 0.0])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sim_clamp_zeroes_negative_similarity() {
        let mut cfg = WeightConfig::new(["t"], ["t"]).unwrap();
        cfg.set_input_weight(0, 0, 1.0);
        cfg.clamp = ClampMode::NONE;
        let pair = PairVectors {
            a: vec![tv(&[("x", 1.0), ("y", 1.0)])],
            b: vec![tv(&[("x", -0.2), ("y", 0.1)])],
        };
        let raw = score(&pair, &cfg).unwrap();
        assert!(raw.score < 0.0);
        cfg.clamp.sims = true;
        let s = score(&pair, &cfg).unwrap();
        assert!(s.components[0].raw_sim < 0.0);
        assert_eq!(s.score, 0.0);
    }

    #[test]
    fn vector_clamp_drops_negative_entries() {
        let mut cfg = WeightConfig::new(["t", "s"], ["t"]).unwrap();
        cfg.set_input_weight(0, 0, 1.0);
        cfg.set_input_weight(1, 0, -1.0);
        let a = vec![tv(&[("x", 1.0)]), tv(&[("x", 2.0), ("y", 1.0)])];
        let clamped = combined_columns(&a, &cfg).unwrap();
        assert!(clamped[0].is_empty());
        cfg.clamp = ClampMode::NONE;
        let raw = combined_columns(&a, &cfg).unwrap();
        assert_eq!(raw[0], tv(&[("x", -1.0), ("y", -1.0)]));
    }

    #[test]
    fn classify_boundary() {
        assert!(classify(0.75, 0.5).matched);
        assert!(classify(0.5, 0.5).matched);
        assert!(!classify(0.2, 0.5).matched);
    }

    #[test]
    fn order_must_be_permutation() {
        let pair = PairVectors {
            a: vec![tv(&[("x", 1.0)])],
            b: vec![tv(&[("x", 1.0)]), tv(&[("x", 1.0)])],
        };
        let cfg = two_column_cfg([1.0, 1.0]);
        assert!(score_in_order(&pair, &cfg, &[1, 0]).is_ok());
        assert!(score_in_order(&pair, &cfg, &[0, 0]).is_err());
    }
}

//! Ground truth from judges, accuracy, and weight/accuracy tables.

mod labels;
mod synth;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use labels::{aggregate_labels, append_ratings, read_ratings, AggregatedLabel, JudgeRating};
pub use synth::{synth_corpus, SynthCorpus, SynthParams, A_COMPONENTS, B_COMPONENTS};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simnet::{Matcher, Param, WeightConfig};
use crate::train::{self, Dataset, GridSpec, LabeledPair};

/// Recommendations per article shown to judges, plus one random control.
pub const JUDGING_TOP_K: usize = 3;

fn dataset<F: Scalar>(
    matcher: &Matcher<'_, F>,
    labels: &[AggregatedLabel],
    cfg: &WeightConfig<F>,
) -> Result<Dataset<F>> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pairs: Vec<LabeledPair> = labels.iter().map(LabeledPair::from).collect();
    Dataset::build(matcher, &pairs, cfg)
}

/// Percentage of labeled pairs where the classified score agrees with the
/// label.
pub fn accuracy<F: Scalar>(
    matcher: &Matcher<'_, F>,
    labels: &[AggregatedLabel],
    cfg: &WeightConfig<F>,
) -> Result<F> {
    train::accuracy(&dataset(matcher, labels, cfg)?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvalColumn<F: Scalar> {
    pub name: String,
    pub config: WeightConfig<F>,
    pub accuracy: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvalReport<F: Scalar> {
    pub columns: Vec<EvalColumn<F>>,
    pub pair_count: usize,
}

impl<F: Scalar> EvalReport<F> {
    pub fn render(&self) -> String {
        let cols: Vec<TableColumn<'_, F>> = self
            .columns
            .iter()
            .map(|c| TableColumn {
                name: c.name.clone(),
                config: &c.config,
                accuracy: c.accuracy,
            })
            .collect();
        render_table(&cols)
    }
}

/// Accuracy of each named config over the same labels.
pub fn weight_table<F: Scalar>(
    matcher: &Matcher<'_, F>,
    labels: &[AggregatedLabel],
    configs: &[(String, WeightConfig<F>)],
) -> Result<EvalReport<F>> {
    if configs.is_empty() {
        return Err(Error::Config(
            "weight table needs at least one config".into(),
        ));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut columns = Vec::with_capacity(configs.len());
    let mut cache: Option<(Vec<String>, Vec<String>, Dataset<F>)> = None;
    for (name, cfg) in configs {
        let reuse =
            matches!(&cache, Some((a, b, _)) if a == cfg.a_components() && b == cfg.b_components());
        if !reuse {
            let ds = dataset(matcher, labels, cfg)?;
            cache = Some((cfg.a_components().to_vec(), cfg.b_components().to_vec(), ds));
        }
        let ds = &cache.as_ref().expect("filled above").2;
        columns.push(EvalColumn {
            name: name.clone(),
            config: cfg.clone(),
            accuracy: train::accuracy(ds, cfg)?,
        });
    }
    Ok(EvalReport {
        columns,
        pair_count: labels.len(),
    })
}

pub struct TableColumn<'a, F: Scalar> {
    pub name: String,
    pub config: &'a WeightConfig<F>,
    pub accuracy: F,
}

fn fmt_num<F: Scalar>(x: F) -> String {
    let s = format!("{:.4}", x.as_f64());
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Rows are weight keys (input weights in config order, then any output
/// weight differing from 1, then the threshold), columns are configs, and
/// the last row is accuracy in percent.
pub fn render_table<F: Scalar>(columns: &[TableColumn<'_, F>]) -> String {
    let mut keys = Vec::new();
    let mut seen = BTreeSet::new();
    for c in columns {
        for p in c.config.weight_params() {
            let include = match p {
                Param::Input { .. } => true,
                Param::Output { b } => columns.iter().any(|c2| {
                    c2.config
                        .b_index(&c.config.b_components()[b])
                        .is_some_and(|j| c2.config.output_weight(j) != F::one())
                }),
                Param::Threshold => false,
            };
            let key = c.config.key(p);
            if include && seen.insert(key.clone()) {
                keys.push(key);
            }
        }
    }
    let mut rows: Vec<(String, Vec<String>)> = keys
        .iter()
        .map(|k| {
            let cells = columns
                .iter()
                .map(|c| {
                    c.config
                        .get_by_key(k)
                        .map_or_else(|_| "-".to_string(), fmt_num)
                })
                .collect();
            (format!("w({k})"), cells)
        })
        .collect();
    rows.push((
        "threshold".to_string(),
        columns
            .iter()
            .map(|c| fmt_num(c.config.threshold))
            .collect(),
    ));
    rows.push((
        "Accuracy (%)".to_string(),
        columns
            .iter()
            .map(|c| format!("{:.1}", c.accuracy.as_f64()))
            .collect(),
    ));
    let header: Vec<String> = columns.iter().map(|c| c.name.clone()).collect();
    let label_w = rows
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max("Model".len());
    let widths: Vec<usize> = (0..columns.len())
        .map(|i| {
            rows.iter()
                .map(|(_, cells)| cells[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(1)
        })
        .collect();
    let mut out = String::new();
    let mut line = |label: &str, cells: &[String]| {
        let _ = write!(out, "{label:<label_w$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {cell:>w$}");
        }
        out.push('\n');
    };
    line("Model", &header);
    for (label, cells) in &rows {
        line(label, cells);
    }
    out
}

/// Five hand-set configurations that vary title and summary emphasis, with
/// every other weight at 2.
pub fn study_configs<F: Scalar>() -> Vec<(String, WeightConfig<F>)> {
    const MODELS: [(f64, f64, f64); 5] = [
        (3.0, 2.0, 0.0),
        (0.0, 0.0, 3.0),
        (3.0, 2.0, 3.0),
        (6.0, 4.0, 3.0),
        (9.0, 6.0, 3.0),
    ];
    MODELS
        .iter()
        .enumerate()
        .map(|(i, &(tt, ts, st))| {
            let mut cfg = WeightConfig::uniform(A_COMPONENTS, B_COMPONENTS, F::lit(2.0))
                .expect("static component lists");
            cfg.set_by_key(&"title>title".parse().expect("key"), F::lit(tt))
                .expect("key");
            cfg.set_by_key(&"title>summary".parse().expect("key"), F::lit(ts))
                .expect("key");
            cfg.set_by_key(&"summary>title".parse().expect("key"), F::lit(st))
                .expect("key");
            ((i + 1).to_string(), cfg)
        })
        .collect()
}

/// Grid over the hand-set values, every other weight fixed at 2.
pub fn study_grid<F: Scalar>() -> GridSpec<F> {
    let vals = |xs: &[f64]| xs.iter().map(|&x| F::lit(x)).collect::<Vec<F>>();
    let mut grid = GridSpec::default();
    grid.input
        .insert("title>title".into(), vals(&[0.0, 3.0, 6.0, 9.0]));
    grid.input
        .insert("title>summary".into(), vals(&[0.0, 2.0, 4.0, 6.0]));
    grid.input.insert("summary>title".into(), vals(&[0.0, 3.0]));
    grid.others = Some(vals(&[2.0]));
    grid.a_components = Some(A_COMPONENTS.iter().map(|s| s.to_string()).collect());
    grid.b_components = Some(B_COMPONENTS.iter().map(|s| s.to_string()).collect());
    grid
}

/// Pairs to put in front of judges: for each A document (ascending id) its
/// top-[`JUDGING_TOP_K`] B documents under `cfg`, then one random B document
/// outside that list as a control.
pub fn judging_pairs<F: Scalar>(
    matcher: &Matcher<'_, F>,
    cfg: &WeightConfig<F>,
    seed: u64,
) -> Result<Vec<(String, String)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let all_b: Vec<&str> = matcher.b_index.ids().collect();
    for a_id in matcher.a_index.ids() {
        let top = matcher.rank(a_id, cfg, JUDGING_TOP_K)?;
        let chosen: BTreeSet<&str> = top.iter().map(|r| r.b_id.as_str()).collect();
        out.extend(top.iter().map(|r| (a_id.to_string(), r.b_id.clone())));
        let rest: Vec<&str> = all_b
            .iter()
            .copied()
            .filter(|b| !chosen.contains(b))
            .collect();
        if let Some(control) = rest.choose(&mut rng) {
            out.push((a_id.to_string(), control.to_string()));
        }
    }
    Ok(out)
}

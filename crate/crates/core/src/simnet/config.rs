use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{relu, Scalar};

/// Which ReLU clamps are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClampMode {
    /// Component vectors and combined vectors are clamped to be non-negative.
    pub vectors: bool,
    /// Input weights are used as `max(0, w)`.
    pub weights: bool,
    /// Per-component similarities are used as `max(0, sim)`.
    pub sims: bool,
}

impl Default for ClampMode {
    fn default() -> Self {
        ClampMode {
            vectors: true,
            weights: false,
            sims: false,
        }
    }
}

impl ClampMode {
    pub const NONE: ClampMode = ClampMode {
        vectors: false,
        weights: false,
        sims: false,
    };

    fn to_flags(self) -> Vec<String> {
        let mut out = Vec::new();
        if self.vectors {
            out.push("clamp_vectors".to_string());
        }
        if self.weights {
            out.push("clamp_weights".to_string());
        }
        if self.sims {
            out.push("clamp_sims".to_string());
        }
        out
    }

    fn from_flags(flags: &[String]) -> Result<Self> {
        let mut mode = ClampMode::NONE;
        for flag in flags {
            match flag.as_str() {
                "clamp_vectors" => mode.vectors = true,
                "clamp_weights" => mode.weights = true,
                "clamp_sims" => mode.sims = true,
                other => return Err(Error::Config(format!("unknown clamp flag `{other}`"))),
            }
        }
        Ok(mode)
    }
}

/// One trainable real of a [`WeightConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    /// `w_ij`: weight of A-component `i` in the combination feeding B-component `j`.
    Input {
        a: usize,
        b: usize,
    },
    /// `v_j`: weight of B-component `j` in the final score.
    Output {
        b: usize,
    },
    Threshold,
}

/// Weight key in text form: `"title>summary"` for input weights,
/// `"out:title"` for output weights and `"threshold"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WeightKey {
    Input { a: String, b: String },
    Output { b: String },
    Threshold,
}

impl WeightKey {
    pub fn input(a: &str, b: &str) -> Self {
        WeightKey::Input {
            a: a.to_string(),
            b: b.to_string(),
        }
    }
}

impl fmt::Display for WeightKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKey::Input { a, b } => write!(f, "{a}>{b}"),
            WeightKey::Output { b } => write!(f, "out:{b}"),
            WeightKey::Threshold => f.write_str("threshold"),
        }
    }
}

impl FromStr for WeightKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "threshold" {
            return Ok(WeightKey::Threshold);
        }
        if let Some(b) = s.strip_prefix("out:") {
            if !b.is_empty() {
                return Ok(WeightKey::Output { b: b.to_string() });
            }
        }
        match s.split_once('>') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains('>') => {
                Ok(WeightKey::input(a, b))
            }
            _ => Err(Error::Config(format!("malformed weight key `{s}`"))),
        }
    }
}

impl From<WeightKey> for String {
    fn from(k: WeightKey) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for WeightKey {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Trainable state of the network: `w_ij` for every (A-component,
/// B-component) pair, `v_j` per B-component and the decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightConfigFile<F>", into = "WeightConfigFile<F>")]
#[serde(bound = "")]
pub struct WeightConfig<F: Scalar> {
    a_components: Vec<String>,
    b_components: Vec<String>,
    /// Row-major `n x m`.
    input: Vec<F>,
    output: Vec<F>,
    pub threshold: F,
    pub clamp: ClampMode,
}

impl<F: Scalar> WeightConfig<F> {
    /// All input weights 0, output weights 1, threshold 0.5, default clamps.
    pub fn new<A, B>(a_components: A, b_components: B) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        B: IntoIterator,
        B::Item: Into<String>,
    {
        let a: Vec<String> = a_components.into_iter().map(Into::into).collect();
        let b: Vec<String> = b_components.into_iter().map(Into::into).collect();
        check_names("a_components", &a)?;
        check_names("b_components", &b)?;
        Ok(WeightConfig {
            input: vec![F::zero(); a.len() * b.len()],
            output: vec![F::one(); b.len()],
            a_components: a,
            b_components: b,
            threshold: F::lit(0.5),
            clamp: ClampMode::default(),
        })
    }

    /// Every input weight set to `w`.
    pub fn uniform<A, B>(a_components: A, b_components: B, w: F) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        B: IntoIterator,
        B::Item: Into<String>,
    {
        let mut cfg = Self::new(a_components, b_components)?;
        cfg.input.iter_mut().for_each(|x| *x = w);
        Ok(cfg)
    }

    pub fn a_components(&self) -> &[String] {
        &self.a_components
    }

    pub fn b_components(&self) -> &[String] {
        &self.b_components
    }

    pub fn n(&self) -> usize {
        self.a_components.len()
    }

    pub fn m(&self) -> usize {
        self.b_components.len()
    }

    pub fn a_index(&self, name: &str) -> Option<usize> {
        self.a_components.iter().position(|c| c == name)
    }

    pub fn b_index(&self, name: &str) -> Option<usize> {
        self.b_components.iter().position(|c| c == name)
    }

    pub fn input_weight(&self, a: usize, b: usize) -> F {
        self.input[a * self.m() + b]
    }

    pub fn set_input_weight(&mut self, a: usize, b: usize, w: F) {
        let m = self.m();
        self.input[a * m + b] = w;
    }

    /// `w_ij` as the network uses it (after the weight clamp, if enabled).
    pub fn effective_input_weight(&self, a: usize, b: usize) -> F {
        let w = self.input_weight(a, b);
        if self.clamp.weights {
            relu(w)
        } else {
            w
        }
    }

    /// Column `j` of effective input weights.
    pub fn column(&self, b: usize) -> Vec<F> {
        (0..self.n())
            .map(|a| self.effective_input_weight(a, b))
            .collect()
    }

    pub fn output_weight(&self, b: usize) -> F {
        self.output[b]
    }

    pub fn set_output_weight(&mut self, b: usize, v: F) {
        self.output[b] = v;
    }

    pub fn output_sum(&self) -> F {
        self.output.iter().copied().fold(F::zero(), |a, b| a + b)
    }

    /// Input weights first (row-major), then output weights.
    pub fn weight_params(&self) -> Vec<Param> {
        let mut out = Vec::with_capacity(self.input.len() + self.output.len());
        for a in 0..self.n() {
            for b in 0..self.m() {
                out.push(Param::Input { a, b });
            }
        }
        out.extend((0..self.m()).map(|b| Param::Output { b }));
        out
    }

    pub fn get(&self, p: Param) -> F {
        match p {
            Param::Input { a, b } => self.input_weight(a, b),
            Param::Output { b } => self.output_weight(b),
            Param::Threshold => self.threshold,
        }
    }

    pub fn set(&mut self, p: Param, value: F) {
        match p {
            Param::Input { a, b } => self.set_input_weight(a, b, value),
            Param::Output { b } => self.set_output_weight(b, value),
            Param::Threshold => self.threshold = value,
        }
    }

    pub fn key(&self, p: Param) -> WeightKey {
        match p {
            Param::Input { a, b } => WeightKey::input(&self.a_components[a], &self.b_components[b]),
            Param::Output { b } => WeightKey::Output {
                b: self.b_components[b].clone(),
            },
            Param::Threshold => WeightKey::Threshold,
        }
    }

    pub fn param(&self, key: &WeightKey) -> Result<Param> {
        let missing =
            |what: &str, name: &str| Error::Config(format!("{what} `{name}` not in config"));
        match key {
            WeightKey::Input { a, b } => Ok(Param::Input {
                a: self.a_index(a).ok_or_else(|| missing("A-component", a))?,
                b: self.b_index(b).ok_or_else(|| missing("B-component", b))?,
            }),
            WeightKey::Output { b } => Ok(Param::Output {
                b: self.b_index(b).ok_or_else(|| missing("B-component", b))?,
            }),
            WeightKey::Threshold => Ok(Param::Threshold),
        }
    }

    pub fn set_by_key(&mut self, key: &WeightKey, value: F) -> Result<()> {
        let p = self.param(key)?;
        self.set(p, value);
        Ok(())
    }

    pub fn get_by_key(&self, key: &WeightKey) -> Result<F> {
        Ok(self.get(self.param(key)?))
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .input
            .iter()
            .chain(&self.output)
            .any(|x| !x.is_finite())
        {
            return Err(Error::Config("weights must be finite".into()));
        }
        if self.output.iter().any(|&v| v < F::zero()) {
            return Err(Error::Config("output weights must be non-negative".into()));
        }
        if self.output_sum() <= F::zero() {
            return Err(Error::Config("output weights must not sum to zero".into()));
        }
        if !(self.threshold >= F::zero() && self.threshold <= F::one()) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Converts every weight to another scalar type.
    pub fn cast<G: Scalar>(&self) -> WeightConfig<G> {
        let conv = |x: F| G::lit(x.as_f64());
        WeightConfig {
            a_components: self.a_components.clone(),
            b_components: self.b_components.clone(),
            input: self.input.iter().map(|&x| conv(x)).collect(),
            output: self.output.iter().map(|&x| conv(x)).collect(),
            threshold: conv(self.threshold),
            clamp: self.clamp,
        }
    }
}

fn check_names(what: &str, names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    let mut seen = HashSet::new();
    for name in names {
        if name.is_empty() || name.contains('>') || name.starts_with("out:") {
            return Err(Error::Config(format!(
                "invalid component name `{name}` in {what}"
            )));
        }
        if !seen.insert(name) {
            return Err(Error::Config(format!(
                "duplicate component `{name}` in {what}"
            )));
        }
    }
    Ok(())
}

/// JSON shape of a weight config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields)]
struct WeightConfigFile<F: Scalar> {
    a_components: Vec<String>,
    b_components: Vec<String>,
    #[serde(default)]
    input_weights: BTreeMap<String, F>,
    #[serde(default)]
    output_weights: BTreeMap<String, F>,
    threshold: F,
    #[serde(default = "default_flags")]
    clamp_mode: Vec<String>,
}

fn default_flags() -> Vec<String> {
    ClampMode::default().to_flags()
}

impl<F: Scalar> TryFrom<WeightConfigFile<F>> for WeightConfig<F> {
    type Error = Error;

    fn try_from(file: WeightConfigFile<F>) -> Result<Self> {
        let mut cfg = WeightConfig::new(file.a_components, file.b_components)?;
        for (key, w) in file.input_weights {
            // keys must name a single (a, b) pair exactly
            match key.parse::<WeightKey>()? {
                k @ WeightKey::Input { .. } => cfg.set_by_key(&k, w)?,
                _ => return Err(Error::Config(format!("`{key}` is not an input weight key"))),
            }
        }
        for (name, v) in file.output_weights {
            cfg.set_by_key(&WeightKey::Output { b: name }, v)?;
        }
        cfg.threshold = file.threshold;
        cfg.clamp = ClampMode::from_flags(&file.clamp_mode)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl<F: Scalar> From<WeightConfig<F>> for WeightConfigFile<F> {
    fn from(cfg: WeightConfig<F>) -> Self {
        let mut input_weights = BTreeMap::new();
        for a in 0..cfg.n() {
            for b in 0..cfg.m() {
                input_weights.insert(
                    cfg.key(Param::Input { a, b }).to_string(),
                    cfg.input_weight(a, b),
                );
            }
        }
        let output_weights = (0..cfg.m())
            .map(|b| (cfg.b_components[b].clone(), cfg.output_weight(b)))
            .collect();
        WeightConfigFile {
            clamp_mode: cfg.clamp.to_flags(),
            a_components: cfg.a_components,
            b_components: cfg.b_components,
            input_weights,
            output_weights,
            threshold: cfg.threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "a_components": ["title", "summary"],
        "b_components": ["title", "summary"],
        "input_weights": {"title>title": 6.0, "title>summary": 4.0, "summary>title": 3.0},
        "output_weights": {"title": 1.0},
        "threshold": 0.5,
        "clamp_mode": ["clamp_vectors"]
    }"#;

    #[test]
    fn parses_file_format() {
        let cfg: WeightConfig<f64> = serde_json::from_str(SAMPLE).unwrap();
        assert_eq!(cfg.input_weight(0, 0), 6.0);
        assert_eq!(cfg.input_weight(0, 1), 4.0);
        assert_eq!(cfg.input_weight(1, 0), 3.0);
        // unlisted pair defaults to zero, unlisted output weight to one
        assert_eq!(cfg.input_weight(1, 1), 0.0);
        assert_eq!(cfg.output_weight(1), 1.0);
        assert_eq!(cfg.clamp, ClampMode::default());

        let back: WeightConfig<f64> = serde_json::from_str(&cfg.to_json_pretty()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_files() {
        let bad = [
            SAMPLE.replace("title>title", "title>credits"),
            SAMPLE.replace("title>title", "title-title"),
            SAMPLE.replace("\"threshold\": 0.5", "\"threshold\": 1.5"),
            SAMPLE.replace("\"title\": 1.0", "\"title\": -1.0"),
            SAMPLE.replace("clamp_vectors", "clamp_everything"),
            SAMPLE.replace(
                "\"b_components\": [\"title\", \"summary\"]",
                "\"b_components\": [\"title\", \"title\"]",
            ),
        ];
        for text in bad {
            assert!(
                serde_json::from_str::<WeightConfig<f64>>(&text).is_err(),
                "{text}"
            );
        }
        let zero_out = r#"{"a_components":["t"],"b_components":["t"],"output_weights":{"t":0.0},"threshold":0.5}"#;
        assert!(serde_json::from_str::<WeightConfig<f64>>(zero_out).is_err());
    }

    #[test]
    fn weight_keys() {
        assert_eq!(
            "title>summary".parse::<WeightKey>().unwrap(),
            WeightKey::input("title", "summary")
        );
        assert_eq!(
            "out:title".parse::<WeightKey>().unwrap().to_string(),
            "out:title"
        );
        assert!("title".parse::<WeightKey>().is_err());
        assert!(">x".parse::<WeightKey>().is_err());
    }

    #[test]
    fn clamp_weights_affects_effective_weight() {
        let mut cfg = WeightConfig::<f64>::new(["t"], ["t"]).unwrap();
        cfg.set_input_weight(0, 0, -2.0);
        assert_eq!(cfg.effective_input_weight(0, 0), -2.0);
        cfg.clamp.weights = true;
        assert_eq!(cfg.effective_input_weight(0, 0), 0.0);
    }
}

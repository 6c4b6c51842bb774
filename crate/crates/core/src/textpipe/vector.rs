use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::{relu, Scalar};

/// Raw term frequencies of one component: lexeme -> count (>= 1).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermCounts(BTreeMap<String, u32>);

impl TermCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, lexeme: &str) {
        *self.0.entry(lexeme.to_string()).or_insert(0) += 1;
    }

    pub fn get(&self, lexeme: &str) -> u32 {
        self.0.get(lexeme).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn to_vector<F: Scalar>(&self) -> TermVector<F> {
        TermVector::from_weights(
            self.iter()
                .map(|(t, c)| (t.to_string(), F::from_count(c as usize))),
        )
    }
}

impl FromIterator<String> for TermCounts {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut counts = TermCounts::new();
        for lexeme in iter {
            *counts.0.entry(lexeme).or_insert(0) += 1;
        }
        counts
    }
}

/// Sparse lexeme -> weight map. Zero weights are never stored.
///
/// Keys are kept ordered so that every reduction over a vector visits
/// entries in the same order, which keeps results bit-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound = "")]
pub struct TermVector<F: Scalar>(BTreeMap<String, F>);

impl<F: Scalar> Default for TermVector<F> {
    fn default() -> Self {
        TermVector(BTreeMap::new())
    }
}

impl<F: Scalar> TermVector<F> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector, dropping zero entries and summing duplicates.
    pub fn from_weights<I>(weights: I) -> Self
    where
        I: IntoIterator<Item = (String, F)>,
    {
        let mut map: BTreeMap<String, F> = BTreeMap::new();
        for (lexeme, w) in weights {
            let entry = map.entry(lexeme).or_insert_with(F::zero);
            *entry = *entry + w;
        }
        map.retain(|_, w| *w != F::zero());
        TermVector(map)
    }

    pub fn get(&self, lexeme: &str) -> F {
        self.0.get(lexeme).copied().unwrap_or_else(F::zero)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, F)> + '_ {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn lexemes(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.keys().map(String::as_str)
    }

    pub fn dot(&self, other: &TermVector<F>) -> F {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .0
            .iter()
            .filter_map(|(t, &w)| large.0.get(t).map(|&u| w * u))
            .fold(F::zero(), |acc, x| acc + x)
    }

    pub fn norm_sq(&self) -> F {
        self.0.values().fold(F::zero(), |acc, &w| acc + w * w)
    }

    pub fn norm(&self) -> F {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, factor: F) -> TermVector<F> {
        TermVector::from_weights(self.iter().map(|(t, w)| (t.to_string(), w * factor)))
    }

    /// Adds `factor * other` into `self`, removing entries that cancel to zero.
    pub fn add_scaled(&mut self, other: &TermVector<F>, factor: F) {
        if factor == F::zero() {
            return;
        }
        for (t, &w) in &other.0 {
            let entry = self.0.entry(t.clone()).or_insert_with(F::zero);
            *entry = *entry + factor * w;
            if *entry == F::zero() {
                self.0.remove(t);
            }
        }
    }

    /// Elementwise `max(0, x)`; clamped entries are dropped.
    pub fn relu(&self) -> TermVector<F> {
        TermVector(
            self.0
                .iter()
                .filter(|(_, &w)| w > F::zero())
                .map(|(t, &w)| (t.clone(), relu(w)))
                .collect(),
        )
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.values().all(|&w| w >= F::zero())
    }
}

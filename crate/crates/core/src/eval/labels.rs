use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::parse_jsonl;
use crate::train::{de_label, ser_label, LabeledPair};

/// One judge's verdict on one pair, as stored in the labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeRating {
    pub a_id: String,
    pub b_id: String,
    #[serde(rename = "judge")]
    pub judge_id: String,
    #[serde(serialize_with = "ser_label", deserialize_with = "de_label")]
    pub rating: bool,
    #[serde(rename = "ts")]
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedLabel {
    pub a_id: String,
    pub b_id: String,
    #[serde(serialize_with = "ser_label", deserialize_with = "de_label")]
    pub label: bool,
    pub support: usize,
}

impl From<&AggregatedLabel> for LabeledPair {
    fn from(l: &AggregatedLabel) -> Self {
        LabeledPair::new(l.a_id.clone(), l.b_id.clone(), l.label)
    }
}

/// Majority vote per pair over each judge's latest rating. Pairs whose vote
/// is tied produce no label. Output is ordered by `(a_id, b_id)`.
///
/// When one judge has two ratings with the same timestamp, the positive one
/// is kept, so the result does not depend on input order.
pub fn aggregate_labels(ratings: &[JudgeRating]) -> Vec<AggregatedLabel> {
    // pair -> judge -> (timestamp, rating)
    type Latest<'a> = BTreeMap<(&'a str, &'a str), BTreeMap<&'a str, (i64, bool)>>;
    let mut latest: Latest<'_> = BTreeMap::new();
    for r in ratings {
        let judges = latest
            .entry((r.a_id.as_str(), r.b_id.as_str()))
            .or_default();
        let entry = judges
            .entry(r.judge_id.as_str())
            .or_insert((r.timestamp, r.rating));
        if (r.timestamp, r.rating) > *entry {
            *entry = (r.timestamp, r.rating);
        }
    }
    latest
        .into_iter()
        .filter_map(|((a, b), judges)| {
            let yes = judges.values().filter(|(_, r)| *r).count();
            let no = judges.len() - yes;
            (yes != no).then(|| AggregatedLabel {
                a_id: a.to_string(),
                b_id: b.to_string(),
                label: yes > no,
                support: judges.len(),
            })
        })
        .collect()
}

/// Reads a labels JSONL file; a missing file reads as empty.
pub fn read_ratings(path: &Path) -> Result<Vec<JudgeRating>> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_jsonl(text.as_bytes(), &path.display().to_string()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Appends ratings and fsyncs before returning.
pub fn append_ratings(path: &Path, ratings: &[JudgeRating]) -> Result<()> {
    let mut buf = Vec::new();
    for r in ratings {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    file.sync_data().map_err(|e| Error::io(path, e))
}

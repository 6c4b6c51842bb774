//! Planted-match corpora: small synthetic article/video sets where chosen
//! pairs share rare lexemes in one designated component pair and all other
//! text is Zipf-distributed noise from a shared vocabulary.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::index::{DocType, Document};
use crate::textpipe::porter_stem;
use crate::train::LabeledPair;

use super::JudgeRating;

pub const A_COMPONENTS: [&str; 3] = ["title", "summary", "content"];
pub const B_COMPONENTS: [&str; 3] = ["title", "summary", "credits"];

/// Noise words per component, in component order.
const A_LENGTHS: [usize; 3] = [4, 12, 40];
const B_LENGTHS: [usize; 3] = [4, 12, 8];

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br",
    "cl", "dr", "gr", "pl", "st", "tr",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_a: usize,
    pub n_b: usize,
    pub planted_pairs: usize,
    /// (A-component, B-component) carrying the planted signal.
    pub signal: (String, String),
    pub noise_vocab: usize,
    /// Rare lexemes shared by each planted pair.
    pub shared_lexemes: usize,
    /// Unmatched B documents labeled per A document.
    pub negatives_per_a: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 1,
            n_a: 100,
            n_b: 100,
            planted_pairs: 50,
            signal: ("title".into(), "title".into()),
            noise_vocab: 400,
            shared_lexemes: 5,
            negatives_per_a: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub articles: Vec<Document>,
    pub videos: Vec<Document>,
    /// Labels in generation order: per article, its partner (if planted)
    /// then its negatives.
    pub labels: Vec<LabeledPair>,
    /// Planted (article id, video id) pairs.
    pub planted: Vec<(String, String)>,
}

impl SynthCorpus {
    /// Labels as single-judge ratings, for writing a labels file.
    pub fn ratings(&self, judge: &str) -> Vec<JudgeRating> {
        self.labels
            .iter()
            .map(|l| JudgeRating {
                a_id: l.a_id.clone(),
                b_id: l.b_id.clone(),
                judge_id: judge.to_string(),
                rating: l.label,
                timestamp: 0,
            })
            .collect()
    }
}

/// Pseudo-words whose stems are pairwise distinct and absent from `taken`.
fn words(
    rng: &mut ChaCha8Rng,
    count: usize,
    syllables: usize,
    taken: &mut BTreeSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("non-empty"));
            w.push_str(NUCLEI.choose(rng).expect("non-empty"));
        }
        if rng.random_bool(0.5) {
            w.push_str(["n", "r", "s", "t", "k"].choose(rng).expect("non-empty"));
        }
        let stem = porter_stem(&w);
        if taken.insert(stem) {
            out.push(w);
        }
    }
    out
}

pub fn synth_corpus(p: &SynthParams) -> Result<SynthCorpus> {
    if p.planted_pairs > p.n_a.min(p.n_b) {
        return Err(Error::Config(format!(
            "planted_pairs {} exceeds min(n_a, n_b) = {}",
            p.planted_pairs,
            p.n_a.min(p.n_b)
        )));
    }
    if p.noise_vocab == 0 {
        return Err(Error::Config("noise_vocab must be positive".into()));
    }
    let a_slot = A_COMPONENTS
        .iter()
        .position(|c| *c == p.signal.0)
        .ok_or_else(|| Error::Config(format!("`{}` is not an article component", p.signal.0)))?;
    let b_slot = B_COMPONENTS
        .iter()
        .position(|c| *c == p.signal.1)
        .ok_or_else(|| Error::Config(format!("`{}` is not a video component", p.signal.1)))?;
    if p.negatives_per_a >= p.n_b && p.n_b > 0 {
        return Err(Error::Config("negatives_per_a must be below n_b".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut taken = BTreeSet::new();
    let noise = words(&mut rng, p.noise_vocab, 2, &mut taken);
    let zipf =
        WeightedIndex::new((1..=p.noise_vocab).map(|r| 1.0 / r as f64)).expect("positive weights");

    let mut a_order: Vec<usize> = (0..p.n_a).collect();
    let mut b_order: Vec<usize> = (0..p.n_b).collect();
    a_order.shuffle(&mut rng);
    b_order.shuffle(&mut rng);
    let mut partner_of_a = vec![None; p.n_a];
    for k in 0..p.planted_pairs {
        partner_of_a[a_order[k]] = Some(b_order[k]);
    }

    // rare lexemes: one set per planted pair, one per unplanted document of
    // either side so that lengths carry no signal
    let mut shared = vec![Vec::new(); p.n_a];
    for (i, partner) in partner_of_a.iter().enumerate() {
        if partner.is_some() {
            shared[i] = words(&mut rng, p.shared_lexemes, 3, &mut taken);
        }
    }
    let width_a = p.n_a.saturating_sub(1).to_string().len().max(3);
    let width_b = p.n_b.saturating_sub(1).to_string().len().max(3);
    let a_id = |i: usize| format!("a{i:0width_a$}");
    let b_id = |j: usize| format!("b{j:0width_b$}");

    let text = |rng: &mut ChaCha8Rng, len: usize, rare: &[String]| {
        let mut ws: Vec<String> = (0..len).map(|_| noise[zipf.sample(rng)].clone()).collect();
        ws.extend(rare.iter().cloned());
        ws.shuffle(rng);
        let mut s = ws.join(" ");
        if let Some(first) = s.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        s
    };

    let mut articles = Vec::with_capacity(p.n_a);
    for i in 0..p.n_a {
        let rare = if partner_of_a[i].is_some() {
            shared[i].clone()
        } else {
            words(&mut rng, p.shared_lexemes, 3, &mut taken)
        };
        let mut doc = Document::new(a_id(i), DocType::A);
        for (slot, (name, &len)) in A_COMPONENTS.iter().zip(&A_LENGTHS).enumerate() {
            let extra: &[String] = if slot == a_slot { &rare } else { &[] };
            doc.components
                .insert(name.to_string(), text(&mut rng, len, extra));
        }
        articles.push(doc);
    }
    let mut owner_of_b = vec![None; p.n_b];
    for (i, partner) in partner_of_a.iter().enumerate() {
        if let Some(j) = partner {
            owner_of_b[*j] = Some(i);
        }
    }
    let mut videos = Vec::with_capacity(p.n_b);
    for (j, owner) in owner_of_b.iter().enumerate() {
        let rare = match *owner {
            Some(i) => shared[i].clone(),
            None => words(&mut rng, p.shared_lexemes, 3, &mut taken),
        };
        let mut doc = Document::new(b_id(j), DocType::B);
        for (slot, (name, &len)) in B_COMPONENTS.iter().zip(&B_LENGTHS).enumerate() {
            let extra: &[String] = if slot == b_slot { &rare } else { &[] };
            doc.components
                .insert(name.to_string(), text(&mut rng, len, extra));
        }
        videos.push(doc);
    }

    let mut labels = Vec::new();
    let mut planted = Vec::new();
    for (i, &partner) in partner_of_a.iter().enumerate() {
        if let Some(j) = partner {
            labels.push(LabeledPair::new(a_id(i), b_id(j), true));
            planted.push((a_id(i), b_id(j)));
        }
        let mut pool: Vec<usize> = (0..p.n_b).filter(|&j| Some(j) != partner).collect();
        pool.shuffle(&mut rng);
        for &j in pool.iter().take(p.negatives_per_a) {
            labels.push(LabeledPair::new(a_id(i), b_id(j), false));
        }
    }
    Ok(SynthCorpus {
        articles,
        videos,
        labels,
        planted,
    })
}

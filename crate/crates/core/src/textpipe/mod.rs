//! Raw component text to sparse term vectors.
//!
//! The pipeline is `tokenize -> stem -> apply_stopwords -> expand_synonyms`,
//! followed by counting. Every stage is a pure function.

mod porter;
mod vector;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

pub use porter::porter_stem;
pub use vector::{TermCounts, TermVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub position: usize,
}

/// A normalized indexing unit, produced by [`stem`] or a [`SynonymMap`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lexeme(String);

impl Lexeme {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Lexeme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// Splits text into lowercase tokens: maximal runs of letters, digits and
/// apostrophes. Runs made only of apostrophes are discarded.
pub fn tokenize(text: &str) -> Vec<Token> {
    let normalized: String = text.nfc().flat_map(char::to_lowercase).collect();
    normalized
        .split(|c: char| !is_token_char(c))
        .filter(|run| run.chars().any(char::is_alphanumeric))
        .enumerate()
        .map(|(position, run)| Token {
            text: run
                .chars()
                .map(|c| if is_apostrophe(c) { '\'' } else { c })
                .collect(),
            position,
        })
        .collect()
}

/// Porter stem of the token with apostrophes removed. Tokens that are not
/// plain ASCII letters (digits, other scripts) are kept verbatim.
pub fn stem(token: &Token) -> Lexeme {
    let bare: String = token.text.chars().filter(|&c| !is_apostrophe(c)).collect();
    Lexeme(porter_stem(&bare))
}

/// Words removed before counting.
///
/// Each word is stored both as written and as its stem, so a list written in
/// plain English ("was", "does") still matches the stemmed lexemes ("wa",
/// "doe") the pipeline produces.
#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = HashSet::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() {
                continue;
            }
            let bare: String = w.chars().filter(|&c| !is_apostrophe(c)).collect();
            set.insert(porter_stem(&bare));
            set.insert(w);
        }
        StopwordList { words: set }
    }

    /// One word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self::from_words(text.lines().map(|line| match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub(crate) fn from_exact(words: impl IntoIterator<Item = String>) -> Self {
        StopwordList {
            words: words.into_iter().collect(),
        }
    }

    /// Stored entries (words and their stems), sorted.
    pub fn entries(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.words.iter().map(String::as_str).collect();
        out.sort_unstable();
        out
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Additive synonym expansion, one level deep. Keys and values are lexemes
/// (already stemmed).
#[derive(Debug, Clone, Default)]
pub struct SynonymMap {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymMap {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: &str, synonym: &str) -> Result<()> {
        let source = source.trim().to_lowercase();
        let synonym = synonym.trim().to_lowercase();
        if source.is_empty() || synonym.is_empty() {
            return Err(Error::Config("synonym entries must be non-empty".into()));
        }
        if source == synonym {
            return Err(Error::Config(format!(
                "`{source}` cannot be its own synonym"
            )));
        }
        self.entries.entry(source).or_default().insert(synonym);
        Ok(())
    }

    /// Lines of the form `source: syn1, syn2`. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut map = SynonymMap::empty();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_string(),
                line: idx + 1,
                msg,
            };
            let (source, rest) = line
                .split_once(':')
                .ok_or_else(|| parse_err("expected `source: syn1, syn2`".into()))?;
            for syn in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                map.insert(source, syn)
                    .map_err(|e| parse_err(e.to_string()))?;
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn synonyms(&self, lexeme: &str) -> impl Iterator<Item = &str> + '_ {
        self.entries
            .get(lexeme)
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

pub fn apply_stopwords(lexemes: Vec<Lexeme>, stops: &StopwordList) -> Vec<Lexeme> {
    lexemes
        .into_iter()
        .filter(|l| !stops.contains(&l.0))
        .collect()
}

/// Each lexeme followed by its synonyms, once per occurrence of the source.
pub fn expand_synonyms(lexemes: Vec<Lexeme>, syn: &SynonymMap) -> Vec<Lexeme> {
    if syn.is_empty() {
        return lexemes;
    }
    let mut out = Vec::with_capacity(lexemes.len());
    for lexeme in lexemes {
        let extra: Vec<Lexeme> = syn
            .synonyms(&lexeme.0)
            .map(|s| Lexeme(s.to_string()))
            .collect();
        out.push(lexeme);
        out.extend(extra);
    }
    out
}

pub fn lexemes(text: &str, stops: &StopwordList, syn: &SynonymMap) -> Vec<Lexeme> {
    let stemmed = tokenize(text).iter().map(stem).collect();
    expand_synonyms(apply_stopwords(stemmed, stops), syn)
}

/// Full pipeline; the result holds raw term frequencies.
pub fn vectorize(text: &str, stops: &StopwordList, syn: &SynonymMap) -> TermCounts {
    lexemes(text, stops, syn)
        .into_iter()
        .map(Lexeme::into_string)
        .collect()
}

/// Stopwords and synonyms bundled together, as used by the index.
#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    pub stops: StopwordList,
    pub synonyms: SynonymMap,
}

impl Pipeline {
    pub fn new(stops: StopwordList, synonyms: SynonymMap) -> Self {
        Pipeline { stops, synonyms }
    }

    pub fn vectorize(&self, text: &str) -> TermCounts {
        vectorize(text, &self.stops, &self.synonyms)
    }
}

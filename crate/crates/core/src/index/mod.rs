//! Typed document store with per-field statistics and an inverted index.
//!
//! Every component name is its own field: it has its own postings and its
//! own document frequencies. A field's `doc_count` is the number of
//! documents in the index, whether or not they carry that component.

mod document;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub(crate) use document::{parse_jsonl, write_jsonl};
pub use document::{read_corpus, write_corpus, DocType, Document};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textpipe::{Pipeline, TermCounts, TermVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldStats {
    pub field: String,
    pub doc_count: usize,
    pub df: BTreeMap<String, u32>,
}

impl FieldStats {
    fn new(field: &str, doc_count: usize) -> Self {
        FieldStats {
            field: field.to_string(),
            doc_count,
            df: BTreeMap::new(),
        }
    }

    pub fn document_frequency(&self, lexeme: &str) -> u32 {
        self.df.get(lexeme).copied().unwrap_or(0)
    }

    /// `ln(|D| / (1 + df))`. Negative once the lexeme is in every document.
    pub fn idf<F: Scalar>(&self, lexeme: &str) -> F {
        let d = F::from_count(self.doc_count);
        let df = F::from_count(self.document_frequency(lexeme) as usize);
        (d / (F::one() + df)).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    pub tf: u32,
}

/// How tf-idf values below zero are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdfClamp {
    /// `max(0, tf·idf)`; zeroed lexemes are dropped from the vector.
    #[default]
    Clamp,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorMode {
    Tf,
    TfIdf,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct FieldIndex {
    stats: FieldStats,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl Default for FieldStats {
    fn default() -> Self {
        FieldStats::new("", 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StoredDoc {
    doc: Document,
    vectors: BTreeMap<String, TermCounts>,
}

#[derive(Debug, Clone)]
pub struct Index {
    doctype: DocType,
    pipeline: Pipeline,
    docs: BTreeMap<String, StoredDoc>,
    fields: BTreeMap<String, FieldIndex>,
}

impl Index {
    pub fn new(doctype: DocType, pipeline: Pipeline) -> Self {
        Index {
            doctype,
            pipeline,
            docs: BTreeMap::new(),
            fields: BTreeMap::new(),
        }
    }

    pub fn from_documents<I>(doctype: DocType, pipeline: Pipeline, docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = Document>,
    {
        let mut index = Index::new(doctype, pipeline);
        for doc in docs {
            index.add_document(doc)?;
        }
        Ok(index)
    }

    /// Vectorizes every component and updates postings and statistics.
    /// Nothing is modified if the document is rejected.
    pub fn add_document(&mut self, doc: Document) -> Result<()> {
        doc.validate()?;
        if doc.doctype != self.doctype {
            return Err(Error::Config(format!(
                "document `{}` is of type {}, index holds {}",
                doc.id, doc.doctype, self.doctype
            )));
        }
        if self.docs.contains_key(&doc.id) {
            return Err(Error::DuplicateDocument(doc.id));
        }
        let vectors = doc
            .components
            .iter()
            .map(|(field, text)| (field.clone(), self.pipeline.vectorize(text)))
            .collect();
        self.insert_vectors(doc, vectors);
        Ok(())
    }

    fn insert_vectors(&mut self, doc: Document, vectors: BTreeMap<String, TermCounts>) {
        let previous = self.docs.len();
        for field in vectors.keys() {
            self.fields
                .entry(field.clone())
                .or_insert_with(|| FieldIndex {
                    stats: FieldStats::new(field, previous),
                    postings: BTreeMap::new(),
                });
        }
        for fi in self.fields.values_mut() {
            fi.stats.doc_count += 1;
        }
        for (field, counts) in &vectors {
            let fi = self.fields.get_mut(field).expect("field registered above");
            for (lexeme, tf) in counts.iter() {
                *fi.stats.df.entry(lexeme.to_string()).or_insert(0) += 1;
                let list = fi.postings.entry(lexeme.to_string()).or_default();
                let at = list.partition_point(|p| p.doc_id < doc.id);
                list.insert(
                    at,
                    Posting {
                        doc_id: doc.id.clone(),
                        tf,
                    },
                );
            }
        }
        self.docs.insert(doc.id.clone(), StoredDoc { doc, vectors });
    }

    pub fn doctype(&self) -> DocType {
        self.doctype
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.docs.contains_key(doc_id)
    }

    /// Document ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.docs.keys().map(String::as_str)
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.docs.get(doc_id).map(|s| &s.doc)
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> + '_ {
        self.docs.values().map(|s| &s.doc)
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> + '_ {
        self.fields.keys().map(String::as_str)
    }

    pub fn stats(&self, field: &str) -> Option<&FieldStats> {
        self.fields.get(field).map(|f| &f.stats)
    }

    pub fn document_frequency(&self, field: &str, lexeme: &str) -> u32 {
        self.stats(field)
            .map_or(0, |s| s.document_frequency(lexeme))
    }

    pub fn postings(&self, field: &str, lexeme: &str) -> &[Posting] {
        self.fields
            .get(field)
            .and_then(|f| f.postings.get(lexeme))
            .map_or(&[], Vec::as_slice)
    }

    /// Raw counts of one component; `None` if the document lacks it.
    pub fn term_counts(&self, doc_id: &str, field: &str) -> Result<Option<&TermCounts>> {
        let stored = self
            .docs
            .get(doc_id)
            .ok_or_else(|| Error::not_found("document", doc_id))?;
        Ok(stored.vectors.get(field))
    }

    /// tf-idf vector of one component against the field's statistics.
    pub fn tfidf<F: Scalar>(
        &self,
        field: &str,
        doc_id: &str,
        clamp: IdfClamp,
    ) -> Result<TermVector<F>> {
        let stats = self
            .stats(field)
            .ok_or_else(|| Error::not_found("field", field))?;
        let counts = self.term_counts(doc_id, field)?;
        Ok(counts.map_or_else(TermVector::new, |c| tfidf_vector(c, stats, clamp)))
    }

    /// Component vector in the requested mode. A component the document (or
    /// the whole index) lacks yields the empty vector.
    pub fn component_vector<F: Scalar>(
        &self,
        doc_id: &str,
        field: &str,
        mode: VectorMode,
        clamp: IdfClamp,
    ) -> Result<TermVector<F>> {
        let Some(counts) = self.term_counts(doc_id, field)? else {
            return Ok(TermVector::new());
        };
        Ok(match mode {
            VectorMode::Tf => counts.to_vector(),
            VectorMode::TfIdf => {
                let stats = self
                    .stats(field)
                    .expect("stored component implies field stats");
                tfidf_vector(counts, stats, clamp)
            }
        })
    }

    /// Raw tf when the index holds a single document (idf is meaningless
    /// there), tf-idf otherwise.
    pub fn default_mode(&self) -> VectorMode {
        if self.docs.len() <= 1 {
            VectorMode::Tf
        } else {
            VectorMode::TfIdf
        }
    }

    /// Documents sharing at least one lexeme with `query` in `field`.
    pub fn candidates<F: Scalar>(&self, query: &TermVector<F>, field: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_candidates(query, field, &mut out);
        out
    }

    pub(crate) fn collect_candidates<F: Scalar>(
        &self,
        query: &TermVector<F>,
        field: &str,
        out: &mut BTreeSet<String>,
    ) {
        let Some(fi) = self.fields.get(field) else {
            return;
        };
        for lexeme in query.lexemes() {
            if let Some(list) = fi.postings.get(lexeme) {
                out.extend(list.iter().map(|p| p.doc_id.clone()));
            }
        }
    }
}

fn tfidf_vector<F: Scalar>(
    counts: &TermCounts,
    stats: &FieldStats,
    clamp: IdfClamp,
) -> TermVector<F> {
    let raw = TermVector::from_weights(counts.iter().map(|(t, tf)| {
        (
            t.to_string(),
            tfidf_weight::<F>(tf, stats.doc_count, stats.document_frequency(t)),
        )
    }));
    match clamp {
        IdfClamp::Clamp => raw.relu(),
        IdfClamp::Raw => raw,
    }
}

/// `tf · ln(|D| / (1 + df))`.
pub fn tfidf_weight<F: Scalar>(tf: u32, doc_count: usize, df: u32) -> F {
    let ratio = F::from_count(doc_count) / (F::one() + F::from_count(df as usize));
    F::from_count(tf as usize) * ratio.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textpipe::StopwordList;
    use approx::assert_abs_diff_eq;

    fn video(id: &str) -> Document {
        Document::new(id, DocType::B)
    }

    fn index(docs: Vec<Document>) -> Index {
        Index::from_documents(DocType::B, Pipeline::default(), docs).unwrap()
    }

    #[test]
    fn tfidf_weight_examples() {
        assert_abs_diff_eq!(
            tfidf_weight::<f64>(3, 10, 4),
            3.0 * 2f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(tfidf_weight::<f64>(3, 10, 4), 2.07944, epsilon = 1e-5);
        assert_eq!(tfidf_weight::<f64>(0, 10, 4), 0.0);
        assert_abs_diff_eq!(tfidf_weight::<f64>(2, 4, 4), -0.44629, epsilon = 1e-5);
    }

    #[test]
    fn add_document_updates_postings() {
        let idx = index(vec![video("v1").with("title", "movie")]);
        assert_eq!(
            idx.postings("title", "movi"),
            [Posting {
                doc_id: "v1".into(),
                tf: 1
            }]
        );
        assert_eq!(idx.stats("title").unwrap().doc_count, 1);
    }

    #[test]
    fn empty_document_counts_towards_every_field() {
        let mut idx = index(vec![video("v1")
            .with("title", "movie")
            .with("summary", "long")]);
        idx.add_document(video("v2")).unwrap();
        assert_eq!(idx.stats("title").unwrap().doc_count, 2);
        assert_eq!(idx.stats("summary").unwrap().doc_count, 2);
        idx.add_document(video("v3").with("credits", "someone"))
            .unwrap();
        assert_eq!(idx.stats("credits").unwrap().doc_count, 3);
        assert_eq!(idx.stats("title").unwrap().doc_count, 3);
    }

    #[test]
    fn rejects_duplicates_and_wrong_type() {
        let mut idx = index(vec![video("v1").with("title", "movie")]);
        let before = idx.clone();
        assert!(matches!(
            idx.add_document(video("v1")),
            Err(Error::DuplicateDocument(id)) if id == "v1"
        ));
        assert!(matches!(
            idx.add_document(Document::new("a1", DocType::A)),
            Err(Error::Config(_))
        ));
        assert_eq!(idx.docs, before.docs);
        assert_eq!(idx.fields, before.fields);
    }

    #[test]
    fn document_frequency_is_per_document() {
        let mut idx = index(vec![
            video("d1").with("title", "movie"),
            video("d2").with("title", "song"),
            video("d3").with("title", "movies"),
        ]);
        assert_eq!(idx.document_frequency("title", "movi"), 2);
        assert_eq!(idx.document_frequency("title", "never"), 0);
        idx.add_document(video("d4").with("title", "movie movie movie"))
            .unwrap();
        assert_eq!(idx.document_frequency("title", "movi"), 3);
    }

    #[test]
    fn component_vector_modes() {
        let idx = index(vec![
            video("d1").with("title", "movie movie"),
            video("d2").with("title", "song"),
            video("d3").with("summary", "x"),
        ]);
        let tf: TermVector<f64> = idx
            .component_vector("d1", "title", VectorMode::Tf, IdfClamp::Clamp)
            .unwrap();
        assert_eq!(tf.iter().collect::<Vec<_>>(), [("movi", 2.0)]);
        let missing: TermVector<f64> = idx
            .component_vector("d3", "title", VectorMode::TfIdf, IdfClamp::Clamp)
            .unwrap();
        assert!(missing.is_empty());
        let via_mode: TermVector<f64> = idx
            .component_vector("d1", "title", VectorMode::TfIdf, IdfClamp::Clamp)
            .unwrap();
        let direct: TermVector<f64> = idx.tfidf("title", "d1", IdfClamp::Clamp).unwrap();
        assert_eq!(via_mode, direct);
        assert_abs_diff_eq!(
            direct.get("movi"),
            2.0 * (3.0f64 / 2.0).ln(),
            epsilon = 1e-12
        );
        assert!(matches!(
            idx.tfidf::<f64>("title", "nope", IdfClamp::Clamp),
            Err(Error::NotFound { .. })
        ));
        assert!(matches!(
            idx.tfidf::<f64>("nofield", "d1", IdfClamp::Clamp),
            Err(Error::NotFound { .. })
        ));
    }

    #[test]
    fn ubiquitous_term_clamps_to_zero() {
        let docs = (0..4).map(|i| video(&format!("d{i}")).with("title", "movie movie extra"));
        let idx = Index::from_documents(DocType::B, Pipeline::default(), docs).unwrap();
        let clamped: TermVector<f64> = idx.tfidf("title", "d0", IdfClamp::Clamp).unwrap();
        assert!(clamped.is_empty());
        let raw: TermVector<f64> = idx.tfidf("title", "d0", IdfClamp::Raw).unwrap();
        assert_abs_diff_eq!(raw.get("movi"), 2.0 * (4.0f64 / 5.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn candidates_union_postings() {
        let idx = index(vec![
            video("d1").with("title", "movie night"),
            video("d2").with("title", "song"),
            video("d3").with("summary", "movie"),
        ]);
        let q = TermVector::<f64>::from_weights([("movi".to_string(), 1.0)]);
        assert_eq!(
            idx.candidates(&q, "title").into_iter().collect::<Vec<_>>(),
            ["d1"]
        );
        let disjoint = TermVector::<f64>::from_weights([("zzz".to_string(), 1.0)]);
        assert!(idx.candidates(&disjoint, "title").is_empty());
        assert!(idx.candidates(&q, "unknown").is_empty());
    }

    #[test]
    fn default_mode_depends_on_size() {
        let one = index(vec![video("d1").with("title", "movie")]);
        assert_eq!(one.default_mode(), VectorMode::Tf);
        let two = index(vec![video("d1"), video("d2")]);
        assert_eq!(two.default_mode(), VectorMode::TfIdf);
    }

    #[test]
    fn stopwords_apply_at_index_time() {
        let pipeline = Pipeline::new(StopwordList::from_words(["the"]), Default::default());
        let idx = Index::from_documents(
            DocType::B,
            pipeline,
            [video("d1").with("title", "The Movie")],
        )
        .unwrap();
        assert_eq!(idx.document_frequency("title", "the"), 0);
        assert_eq!(idx.document_frequency("title", "movi"), 1);
    }
}

//! On-disk layout of a saved index directory:
//!
//! ```text
//! manifest.json     format tag, doctype, document count, fields, pipeline
//! documents.jsonl   raw documents, ascending id
//! vectors.jsonl     {"id", "components": {field: {lexeme: tf}}}, ascending id
//! postings.json     {field: {"stats": FieldStats, "postings": {lexeme: [Posting]}}}
//! ```
//!
//! All maps are written in key order so saving the same index twice gives
//! byte-identical files. Loading rebuilds postings from the stored vectors
//! and refuses to open a directory whose `postings.json` disagrees.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_jsonl, write_jsonl, DocType, Document, FieldIndex, FieldStats, Index, Posting};
use crate::error::{Error, Result};
use crate::textpipe::{Pipeline, StopwordList, SynonymMap, TermCounts};

const FORMAT: &str = "hetmatch-index/1";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    doctype: DocType,
    documents: usize,
    fields: Vec<String>,
    stopwords: Vec<String>,
    synonyms: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Serialize, Deserialize)]
struct VectorLine {
    id: String,
    components: BTreeMap<String, TermCounts>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct FieldSegment {
    stats: FieldStats,
    postings: BTreeMap<String, Vec<Posting>>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl Index {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest {
            format: FORMAT.to_string(),
            doctype: self.doctype,
            documents: self.docs.len(),
            fields: self.fields.keys().cloned().collect(),
            stopwords: self
                .pipeline
                .stops
                .entries()
                .into_iter()
                .map(String::from)
                .collect(),
            synonyms: self
                .pipeline
                .synonyms
                .entries()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        let docs: Vec<&Document> = self.docs.values().map(|s| &s.doc).collect();
        write_jsonl(&dir.join("documents.jsonl"), &docs)?;
        let vectors: Vec<VectorLine> = self
            .docs
            .iter()
            .map(|(id, s)| VectorLine {
                id: id.clone(),
                components: s.vectors.clone(),
            })
            .collect();
        write_jsonl(&dir.join("vectors.jsonl"), &vectors)?;
        let segments: BTreeMap<&str, FieldSegment> = self
            .fields
            .iter()
            .map(|(name, fi)| {
                (
                    name.as_str(),
                    FieldSegment {
                        stats: fi.stats.clone(),
                        postings: fi.postings.clone(),
                    },
                )
            })
            .collect();
        write_json(&dir.join("postings.json"), &segments)
    }

    pub fn load(dir: &Path) -> Result<Index> {
        let manifest: Manifest = serde_json::from_str(&read(&dir.join("manifest.json"))?)?;
        if manifest.format != FORMAT {
            return Err(Error::Config(format!(
                "{}: unsupported index format `{}`",
                dir.display(),
                manifest.format
            )));
        }
        let mut synonyms = SynonymMap::empty();
        for (source, syns) in &manifest.synonyms {
            for syn in syns {
                synonyms.insert(source, syn)?;
            }
        }
        let pipeline = Pipeline::new(StopwordList::from_exact(manifest.stopwords), synonyms);
        let mut index = Index::new(manifest.doctype, pipeline);

        let docs_path = dir.join("documents.jsonl");
        let docs: Vec<Document> = parse_jsonl(
            read(&docs_path)?.as_bytes(),
            &docs_path.display().to_string(),
        )?;
        let vec_path = dir.join("vectors.jsonl");
        let vectors: Vec<VectorLine> =
            parse_jsonl(read(&vec_path)?.as_bytes(), &vec_path.display().to_string())?;
        if docs.len() != vectors.len() || docs.len() != manifest.documents {
            return Err(corrupt(dir, "document and vector counts disagree"));
        }
        for (doc, line) in docs.into_iter().zip(vectors) {
            if doc.id != line.id {
                return Err(corrupt(
                    dir,
                    "documents.jsonl and vectors.jsonl are out of step",
                ));
            }
            doc.validate()?;
            if doc.doctype != index.doctype || index.docs.contains_key(&doc.id) {
                return Err(corrupt(dir, &format!("bad document `{}`", doc.id)));
            }
            index.insert_vectors(doc, line.components);
        }

        let stored: BTreeMap<String, FieldSegment> =
            serde_json::from_str(&read(&dir.join("postings.json"))?)?;
        let rebuilt: BTreeMap<String, FieldSegment> = index
            .fields
            .iter()
            .map(|(k, FieldIndex { stats, postings })| {
                (
                    k.clone(),
                    FieldSegment {
                        stats: stats.clone(),
                        postings: postings.clone(),
                    },
                )
            })
            .collect();
        if stored != rebuilt {
            return Err(corrupt(
                dir,
                "postings.json does not match the stored vectors",
            ));
        }
        Ok(index)
    }

    /// Resolves an index location: `dir` itself if it holds a manifest,
    /// otherwise the `a/` or `b/` subdirectory for the doctype.
    pub fn locate(dir: &Path, doctype: DocType) -> PathBuf {
        if dir.join("manifest.json").is_file() {
            dir.to_path_buf()
        } else {
            dir.join(doctype.tag())
        }
    }

    pub fn load_typed(dir: &Path, doctype: DocType) -> Result<Index> {
        let index = Index::load(&Index::locate(dir, doctype))?;
        if index.doctype != doctype {
            return Err(Error::Config(format!(
                "{} holds {} documents, expected {}",
                dir.display(),
                index.doctype,
                doctype
            )));
        }
        Ok(index)
    }
}

fn corrupt(dir: &Path, msg: &str) -> Error {
    Error::Config(format!("{}: corrupt index: {msg}", dir.display()))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Index {
        let mut syn = SynonymMap::empty();
        syn.insert("film", "movi").unwrap();
        let pipeline = Pipeline::new(StopwordList::from_words(["the"]), syn);
        let docs = [
            Document::new("v2", DocType::B)
                .with("title", "The film")
                .with("credits", "Ann Lee"),
            Document::new("v1", DocType::B).with("title", "Movie night"),
            Document::new("v3", DocType::B),
        ];
        Index::from_documents(DocType::B, pipeline, docs).unwrap()
    }

    #[test]
    fn save_load_roundtrip_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let idx = sample();
        idx.save(dir.path()).unwrap();
        let loaded = Index::load(dir.path()).unwrap();
        assert_eq!(loaded.docs, idx.docs);
        assert_eq!(loaded.fields, idx.fields);
        assert_eq!(
            loaded.pipeline.stops.entries(),
            idx.pipeline.stops.entries()
        );

        let again = tempfile::tempdir().unwrap();
        loaded.save(again.path()).unwrap();
        for name in [
            "manifest.json",
            "documents.jsonl",
            "vectors.jsonl",
            "postings.json",
        ] {
            assert_eq!(
                std::fs::read(dir.path().join(name)).unwrap(),
                std::fs::read(again.path().join(name)).unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn tampered_postings_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        sample().save(dir.path()).unwrap();
        let path = dir.path().join("postings.json");
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"tf\": 1", "\"tf\": 7");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Index::load(dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn locate_prefers_subdirectory_by_type() {
        let root = tempfile::tempdir().unwrap();
        sample().save(&root.path().join("b")).unwrap();
        assert_eq!(
            Index::locate(root.path(), DocType::B),
            root.path().join("b")
        );
        assert!(Index::load_typed(root.path(), DocType::B).is_ok());
        assert!(Index::load_typed(&root.path().join("b"), DocType::A).is_err());
    }
}

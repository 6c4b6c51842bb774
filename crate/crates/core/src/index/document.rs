use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two sides of a comparison: type A is the query side (news articles),
/// type B the candidate side (videos).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DocType {
    #[serde(rename = "article", alias = "A", alias = "a")]
    A,
    #[serde(rename = "video", alias = "B", alias = "b")]
    B,
}

impl DocType {
    pub fn name(self) -> &'static str {
        match self {
            DocType::A => "article",
            DocType::B => "video",
        }
    }

    /// Short directory tag used for on-disk layout.
    pub fn tag(self) -> &'static str {
        match self {
            DocType::A => "a",
            DocType::B => "b",
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DocType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" | "article" => Ok(DocType::A),
            "B" | "b" | "video" => Ok(DocType::B),
            other => Err(Error::Config(format!(
                "unknown doctype `{other}` (expected A or B)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub doctype: DocType,
    #[serde(default)]
    pub components: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, doctype: DocType) -> Self {
        Document {
            id: id.into(),
            doctype,
            components: BTreeMap::new(),
        }
    }

    pub fn with(mut self, component: impl Into<String>, text: impl Into<String>) -> Self {
        self.components.insert(component.into(), text.into());
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Config("document id must be non-empty".into()));
        }
        if self.components.keys().any(String::is_empty) {
            return Err(Error::Config(format!(
                "document `{}` has an empty component name",
                self.id
            )));
        }
        Ok(())
    }
}

/// Reads a JSONL corpus, one document per line. Blank lines are skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), &path.display().to_string())
}

pub(crate) fn parse_jsonl<T, R>(reader: R, origin: &str) -> Result<Vec<T>>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    write_jsonl(path, docs)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_line_format() {
        let line =
            r#"{"id":"v1","doctype":"video","components":{"summary":"x","title":"A Movie"}}"#;
        let doc: Document = serde_json::from_str(line).unwrap();
        assert_eq!(doc.doctype, DocType::B);
        assert_eq!(doc.components["title"], "A Movie");
        assert_eq!(serde_json::to_string(&doc).unwrap(), line);

        let bare: Document = serde_json::from_str(r#"{"id":"a","doctype":"A"}"#).unwrap();
        assert_eq!(bare.doctype, DocType::A);
        assert!(bare.components.is_empty());
    }

    #[test]
    fn doctype_flags() {
        assert_eq!("A".parse::<DocType>().unwrap(), DocType::A);
        assert_eq!("video".parse::<DocType>().unwrap(), DocType::B);
        assert!("C".parse::<DocType>().is_err());
    }
}

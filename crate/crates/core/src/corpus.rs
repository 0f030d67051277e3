//! Document collections, query sets, and text analysis.
//!
//! A [`Corpus`] is an immutable, order-preserving collection of documents
//! built from JSONL or TSV input. It can be persisted as an append-only
//! record log plus an id-to-offset table, which keeps the on-disk format
//! trivial to audit and stable across versions.
//!
//! Tokenization is lowercase + Unicode (UAX #29) word segmentation with
//! punctuation stripped. Stemming and stopword removal are off by default
//! and opt-in via [`Analyzer`].

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

/// Version tag recorded with persisted corpora and indexes. Bump when the
/// analyzer or on-disk layout changes behavior.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate doc_id `{doc_id}` at {path}:{line} (first seen on line {first_line})")]
    DuplicateDoc {
        path: String,
        doc_id: String,
        line: usize,
        first_line: usize,
    },
    #[error("duplicate query_id `{query_id}` at {path}:{line}")]
    DuplicateQuery {
        path: String,
        query_id: String,
        line: usize,
    },
    #[error("unsupported corpus format `{0}` (expected jsonl or tsv)")]
    UnknownFormat(String),
    #[error("corpus store at {0} is missing or malformed: {1}")]
    BadStore(String, String),
}

/// One retrievable text unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// One information need, identified by `query_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

/// Source file layout for [`Corpus::ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One JSON object per line: `{"doc_id": "...", "text": "...", "title": "..."}`.
    Jsonl,
    /// `doc_id<TAB>text` per line.
    Tsv,
}

impl std::str::FromStr for CorpusFormat {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// Immutable, order-preserving document collection.
///
/// Iteration order is the order records appeared in the source file.
/// Once built, a corpus is safe to share across concurrent readers.
#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Ingest a corpus file, rejecting malformed records and duplicate ids.
    pub fn ingest(path: &Path, format: CorpusFormat) -> Result<Self, CorpusError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: display.clone(),
            source,
        })?;
        let reader = BufReader::new(file);

        let mut docs = Vec::new();
        let mut by_id: HashMap<String, usize> = HashMap::new();
        let mut first_line: HashMap<String, usize> = HashMap::new();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: display.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let doc = match format {
                CorpusFormat::Jsonl => {
                    serde_json::from_str::<Document>(&line).map_err(|e| CorpusError::Parse {
                        path: display.clone(),
                        line: line_no,
                        message: e.to_string(),
                    })?
                }
                CorpusFormat::Tsv => {
                    let (id, text) =
                        line.split_once('\t')
                            .ok_or_else(|| CorpusError::Parse {
                                path: display.clone(),
                                line: line_no,
                                message: "expected doc_id<TAB>text".to_string(),
                            })?;
                    Document {
                        doc_id: id.to_string(),
                        text: text.to_string(),
                        title: None,
                    }
                }
            };
            if doc.doc_id.is_empty() {
                return Err(CorpusError::Parse {
                    path: display.clone(),
                    line: line_no,
                    message: "empty doc_id".to_string(),
                });
            }
            match by_id.entry(doc.doc_id.clone()) {
                Entry::Occupied(_) => {
                    return Err(CorpusError::DuplicateDoc {
                        path: display,
                        first_line: first_line[&doc.doc_id],
                        doc_id: doc.doc_id,
                        line: line_no,
                    });
                }
                Entry::Vacant(v) => {
                    v.insert(docs.len());
                    first_line.insert(doc.doc_id.clone(), line_no);
                    docs.push(doc);
                }
            }
        }

        Ok(Corpus { docs, by_id })
    }

    /// Build a corpus from in-memory documents (tests and fixtures).
    pub fn from_documents(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateDoc {
                    path: "<memory>".to_string(),
                    doc_id: d.doc_id.clone(),
                    line: i + 1,
                    first_line: by_id[&d.doc_id] + 1,
                });
            }
        }
        Ok(Corpus { docs, by_id })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents in source-file order.
    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    /// Persist as an append-only record log plus an id→offset table.
    ///
    /// Layout under `dir`:
    /// - `corpus.jsonl` — canonical records, one JSON document per line
    /// - `corpus.offsets` — `doc_id<TAB>byte_offset`, in log order
    /// - `meta.json` — format version and document count
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let log_path = dir.join("corpus.jsonl");
        let mut log = BufWriter::new(File::create(&log_path).map_err(io_err)?);
        let mut offsets = BufWriter::new(File::create(dir.join("corpus.offsets")).map_err(io_err)?);
        let mut offset: u64 = 0;
        for doc in &self.docs {
            let line = serde_json::to_string(doc).expect("document serializes");
            writeln!(offsets, "{}\t{}", doc.doc_id, offset).map_err(io_err)?;
            log.write_all(line.as_bytes()).map_err(io_err)?;
            log.write_all(b"\n").map_err(io_err)?;
            offset += line.len() as u64 + 1;
        }
        log.flush().map_err(io_err)?;
        offsets.flush().map_err(io_err)?;
        let meta = serde_json::json!({ "version": FORMAT_VERSION, "count": self.docs.len() });
        std::fs::write(
            dir.join("meta.json"),
            serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n",
        )
        .map_err(io_err)?;
        Ok(())
    }

    /// Open a corpus store written by [`Corpus::save`].
    pub fn open(dir: &Path) -> Result<Self, CorpusError> {
        let meta_raw = std::fs::read_to_string(dir.join("meta.json")).map_err(|e| {
            CorpusError::BadStore(dir.display().to_string(), format!("meta.json: {e}"))
        })?;
        let meta: serde_json::Value = serde_json::from_str(&meta_raw)
            .map_err(|e| CorpusError::BadStore(dir.display().to_string(), e.to_string()))?;
        let version = meta.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != u64::from(FORMAT_VERSION) {
            return Err(CorpusError::BadStore(
                dir.display().to_string(),
                format!("unsupported store version {version}"),
            ));
        }
        let count = meta.get("count").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
        let corpus = Self::ingest(&dir.join("corpus.jsonl"), CorpusFormat::Jsonl)?;
        if corpus.len() != count {
            return Err(CorpusError::BadStore(
                dir.display().to_string(),
                format!("meta count {count} != log count {}", corpus.len()),
            ));
        }
        Ok(corpus)
    }
}

/// Load a query set from TSV lines of `query_id<TAB>text`.
pub fn load_queries(path: &Path) -> Result<Vec<Query>, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let mut queries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            path: display.clone(),
            line: line_no,
            message: "expected query_id<TAB>text".to_string(),
        })?;
        if text.trim().is_empty() {
            return Err(CorpusError::Parse {
                path: display.clone(),
                line: line_no,
                message: "empty query text".to_string(),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateQuery {
                path: display,
                query_id: id.to_string(),
                line: line_no,
            });
        }
        queries.push(Query {
            query_id: id.to_string(),
            text: text.to_string(),
        });
    }
    Ok(queries)
}

/// Text analyzer: lowercase + UAX #29 word boundaries, optional Porter
/// stemming and stopword removal.
///
/// The default configuration (no stemming, no stopwords) keeps tokenization
/// auditable: `tokenize` is a pure function of the input text and the
/// analyzer version.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Analyzer {
    pub stem: bool,
    #[serde(default)]
    pub stopwords: Vec<String>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer {
            stem: false,
            stopwords: Vec::new(),
        }
    }
}

impl Analyzer {
    /// Identifier recorded alongside indexes so searches can verify they use
    /// the same analysis chain as the index build.
    pub fn version(&self) -> String {
        let mut v = format!("lowercase-uax29-v{FORMAT_VERSION}");
        if self.stem {
            v.push_str("-porter");
        }
        if !self.stopwords.is_empty() {
            v.push_str(&format!("-stop{}", self.stopwords.len()));
        }
        v
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let stop: HashSet<&str> = self.stopwords.iter().map(|s| s.as_str()).collect();
        let stemmer = self
            .stem
            .then(|| rust_stemmers::Stemmer::create(rust_stemmers::Algorithm::English));
        text.unicode_words()
            // UAX #29 can attach combining marks to a preceding space,
            // leaving whitespace inside a segment; split it back out.
            .flat_map(|w| w.split_whitespace())
            .map(|w| w.to_lowercase())
            .filter(|w| !stop.contains(w.as_str()))
            .map(|w| match &stemmer {
                Some(s) => s.stem(&w).into_owned(),
                None => w,
            })
            .collect()
    }
}

/// Tokenize with the default analyzer: lowercase, Unicode word boundaries,
/// punctuation stripped, no stemming, no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    Analyzer::default().tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_empty_is_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_strips_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("Query Reformulation, 2024!"),
            vec!["query", "reformulation", "2024"]
        );
    }

    #[test]
    fn tokenize_splits_hyphenated_unicode_words() {
        // Frozen from a UAX #29 reference segmentation of "état-major".
        assert_eq!(tokenize("état-major"), vec!["état", "major"]);
    }

    #[test]
    fn tokenize_with_stemming() {
        let a = Analyzer {
            stem: true,
            stopwords: vec![],
        };
        assert_eq!(a.tokenize("running runs"), vec!["run", "run"]);
    }

    #[test]
    fn tokenize_with_stopwords() {
        let a = Analyzer {
            stem: false,
            stopwords: vec!["the".into(), "of".into()],
        };
        assert_eq!(a.tokenize("The speed of light"), vec!["speed", "light"]);
    }

    #[test]
    fn analyzer_version_distinguishes_configs() {
        let plain = Analyzer::default();
        let stemmed = Analyzer {
            stem: true,
            stopwords: vec![],
        };
        assert_ne!(plain.version(), stemmed.version());
    }

    fn write_temp(content: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn ingest_jsonl_counts_and_preserves_order() {
        let f = write_temp(
            r#"{"doc_id":"d1","text":"a"}
{"doc_id":"d2","text":"b","title":"t"}
{"doc_id":"d3","text":"c"}
"#,
            ".jsonl",
        );
        let corpus = Corpus::ingest(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 3);
        let ids: Vec<_> = corpus.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["d1", "d2", "d3"]);
        assert_eq!(corpus.get("d2").unwrap().title.as_deref(), Some("t"));
    }

    #[test]
    fn ingest_rejects_duplicate_ids_with_both_lines() {
        let f = write_temp(
            r#"{"doc_id":"d1","text":"a"}
{"doc_id":"d2","text":"b"}
{"doc_id":"d1","text":"c"}
"#,
            ".jsonl",
        );
        let err = Corpus::ingest(f.path(), CorpusFormat::Jsonl).unwrap_err();
        match err {
            CorpusError::DuplicateDoc {
                doc_id,
                line,
                first_line,
                ..
            } => {
                assert_eq!(doc_id, "d1");
                assert_eq!(line, 3);
                assert_eq!(first_line, 1);
            }
            other => panic!("expected DuplicateDoc, got {other:?}"),
        }
    }

    #[test]
    fn ingest_reports_malformed_line_number() {
        let f = write_temp("{\"doc_id\":\"d1\",\"text\":\"a\"}\nnot json\n", ".jsonl");
        let err = Corpus::ingest(f.path(), CorpusFormat::Jsonl).unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn ingest_tsv() {
        let f = write_temp("d1\thello world\nd2\tsecond doc\n", ".tsv");
        let corpus = Corpus::ingest(f.path(), CorpusFormat::Tsv).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("d1").unwrap().text, "hello world");
    }

    #[test]
    fn save_and_open_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = Corpus::from_documents(vec![
            Document {
                doc_id: "d1".into(),
                text: "alpha beta".into(),
                title: None,
            },
            Document {
                doc_id: "d2".into(),
                text: "gamma".into(),
                title: Some("title".into()),
            },
        ])
        .unwrap();
        corpus.save(dir.path()).unwrap();
        let reopened = Corpus::open(dir.path()).unwrap();
        assert_eq!(reopened.len(), 2);
        let pairs: Vec<_> = reopened.iter().map(|d| d.doc_id.clone()).collect();
        assert_eq!(pairs, vec!["d1", "d2"]);
        assert_eq!(reopened.get("d2").unwrap().title.as_deref(), Some("title"));
    }

    #[test]
    fn load_queries_tsv() {
        let f = write_temp("q1\twhat is bm25\nq2\tdense retrieval\n", ".tsv");
        let queries = load_queries(f.path()).unwrap();
        assert_eq!(queries.len(), 2);
        assert_eq!(queries[0].query_id, "q1");
        assert_eq!(queries[1].text, "dense retrieval");
    }
}

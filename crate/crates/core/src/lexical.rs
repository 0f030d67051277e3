//! Inverted index with BM25 scoring, weighted-term search, and RM3
//! pseudo-relevance feedback.
//!
//! Scoring follows the Lucene-style BM25 variant:
//!
//! ```text
//! score(d, q) = Σ_t  qtf(t) · idf(t) · tf · (k1 + 1) / (tf + k1 · (1 − b + b · |d| / avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```
//!
//! Query-side repetition is the weighting mechanism: a term appearing twice
//! in the query contributes twice (`qtf`), and [`InvertedIndex::weighted_search`]
//! generalizes `qtf` to arbitrary non-negative weights. Documents with zero
//! query-term overlap are never returned. Ties break by ascending `doc_id`.
//!
//! # On-disk format (version 1)
//!
//! An index directory holds:
//! - `meta.json` — version, doc count, average length, analyzer config
//! - `docs.tsv` — one `doc_id<TAB>length` line per document, in build order
//! - `postings.bin` — little-endian binary postings:
//!   `u32 n_terms`, then per term (sorted by term): `u32 term_len`,
//!   term bytes (UTF-8), `u32 n_postings`, then `(u32 doc_ordinal, u32 tf)`
//!   pairs sorted by ascending `doc_id`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Analyzer, Corpus};
use crate::ranked::RankedList;

#[derive(Debug, Error)]
pub enum LexicalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("invalid weighted query: {0}")]
    BadWeights(String),
    #[error("query must contain at least one token")]
    EmptyQuery,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("index store at {0} is missing or malformed: {1}")]
    BadStore(String, String),
}

/// BM25 free parameters. Defaults match the common Pyserini configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// RM3 pseudo-relevance feedback parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rm3Params {
    /// Number of top-ranked feedback documents.
    pub fb_docs: usize,
    /// Number of expansion terms kept.
    pub fb_terms: usize,
    /// Interpolation weight of the original query model, in `[0, 1]`.
    pub orig_weight: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Rm3Params {
            fb_docs: 10,
            fb_terms: 10,
            orig_weight: 0.5,
        }
    }
}

/// Query as a bag of weighted terms. Weights must be finite, non-negative,
/// and at least one must be strictly positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuery {
    pub terms: BTreeMap<String, f64>,
}

impl WeightedQuery {
    pub fn new(terms: BTreeMap<String, f64>) -> Result<Self, LexicalError> {
        if terms.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(LexicalError::BadWeights(
                "weights must be finite and non-negative".to_string(),
            ));
        }
        if !terms.values().any(|w| *w > 0.0) {
            return Err(LexicalError::BadWeights(
                "at least one weight must be strictly positive".to_string(),
            ));
        }
        Ok(WeightedQuery { terms })
    }

    /// Sum of all weights.
    pub fn total_weight(&self) -> f64 {
        self.terms.values().sum()
    }
}

/// Result of RM3 expansion. `feedback_used == false` flags the degenerate
/// path where the query retrieved nothing and the original model was
/// returned unchanged.
#[derive(Debug, Clone)]
pub struct Rm3Expansion {
    pub query: WeightedQuery,
    pub feedback_used: bool,
    /// Expansion terms with their feedback-model weights, highest first.
    pub feedback_terms: Vec<(String, f64)>,
}

/// Immutable inverted index over a corpus.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_len: f64,
    analyzer: Analyzer,
}

impl InvertedIndex {
    /// Build from a corpus using the given analyzer. Errors on an empty corpus.
    pub fn build(corpus: &Corpus, analyzer: &Analyzer) -> Result<Self, LexicalError> {
        if corpus.is_empty() {
            return Err(LexicalError::EmptyCorpus);
        }
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        for (ordinal, doc) in corpus.iter().enumerate() {
            let tokens = analyzer.tokenize(&doc.text);
            doc_lengths.push(tokens.len() as u32);
            doc_ids.push(doc.doc_id.clone());
            let mut counts: HashMap<&str, u32> = HashMap::new();
            for t in &tokens {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push((ordinal as u32, tf));
            }
        }
        // Posting lists sorted by doc_id, not by insertion ordinal.
        for list in postings.values_mut() {
            list.sort_by(|a, b| doc_ids[a.0 as usize].cmp(&doc_ids[b.0 as usize]));
        }
        let avg_doc_len =
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / doc_lengths.len() as f64;
        Ok(InvertedIndex {
            postings,
            doc_ids,
            doc_lengths,
            avg_doc_len,
            analyzer: analyzer.clone(),
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .iter()
            .position(|d| d == doc_id)
            .map(|i| self.doc_lengths[i])
    }

    /// Document frequency of a term.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Postings for a term as `(doc_id, tf)` pairs, sorted by doc_id.
    pub fn postings(&self, term: &str) -> Option<impl Iterator<Item = (&str, u32)>> {
        self.postings.get(term).map(|list| {
            list.iter()
                .map(|&(ord, tf)| (self.doc_ids[ord as usize].as_str(), tf))
        })
    }

    /// The `n` terms with the highest document frequency, ties broken by
    /// ascending term. This is the collection-level distributional signal
    /// used by corpus-steered expansion.
    pub fn top_df_terms(&self, n: usize) -> Vec<(String, usize)> {
        let mut terms: Vec<(String, usize)> = self
            .postings
            .iter()
            .map(|(t, list)| (t.clone(), list.len()))
            .collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        terms.truncate(n);
        terms
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 search over a token stream. Repeated query tokens weight their
    /// term proportionally. Documents sharing no term with the query are
    /// excluded; the result holds at most `k` entries.
    pub fn bm25_search(
        &self,
        query: &[String],
        k: usize,
        params: &Bm25Params,
    ) -> Result<RankedList, LexicalError> {
        let mut qtf: BTreeMap<&str, f64> = BTreeMap::new();
        for t in query {
            *qtf.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
        Ok(self.search_weighted_terms(&qtf, k, params))
    }

    /// Like [`Self::bm25_search`] but with explicit per-term weights.
    pub fn weighted_search(
        &self,
        query: &WeightedQuery,
        k: usize,
        params: &Bm25Params,
    ) -> Result<RankedList, LexicalError> {
        // Re-validate: WeightedQuery can be built via Default/deserialization.
        let checked = WeightedQuery::new(query.terms.clone())?;
        let weights: BTreeMap<&str, f64> = checked
            .terms
            .iter()
            .map(|(t, w)| (t.as_str(), *w))
            .collect();
        Ok(self.search_weighted_terms(&weights, k, params))
    }

    fn search_weighted_terms(
        &self,
        weights: &BTreeMap<&str, f64>,
        k: usize,
        params: &Bm25Params,
    ) -> RankedList {
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for (term, &weight) in weights {
            if weight <= 0.0 {
                continue;
            }
            let Some(list) = self.postings.get(*term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(ord, tf) in list {
                let tf = f64::from(tf);
                let len = f64::from(self.doc_lengths[ord as usize]);
                let norm = params.k1 * (1.0 - params.b + params.b * len / self.avg_doc_len);
                let contribution = idf * tf * (params.k1 + 1.0) / (tf + norm);
                *scores.entry(ord).or_insert(0.0) += weight * contribution;
            }
        }
        let scored: Vec<(String, f64)> = scores
            .into_iter()
            .map(|(ord, s)| (self.doc_ids[ord as usize].clone(), s))
            .collect();
        RankedList::from_scores(scored, k)
    }

    /// RM3 pseudo-relevance feedback.
    ///
    /// The relevance model weights each feedback document by its normalized
    /// BM25 score, estimates `P(t | RM) = Σ_d w_d · tf(t, d) / |d|`, keeps the
    /// `fb_terms` highest-weight terms (ties by ascending term), renormalizes,
    /// and interpolates with the maximum-likelihood query model at
    /// `orig_weight`. Output weights always sum to 1.
    pub fn rm3_expand(
        &self,
        query: &[String],
        rm3: &Rm3Params,
        params: &Bm25Params,
    ) -> Result<Rm3Expansion, LexicalError> {
        assert!(rm3.fb_docs >= 1 && rm3.fb_terms >= 1, "rm3 preconditions");
        if query.is_empty() {
            return Err(LexicalError::EmptyQuery);
        }
        let ml_query = max_likelihood_model(query);

        let top = self.bm25_search(query, rm3.fb_docs, params)?;
        if top.is_empty() {
            let query = WeightedQuery::new(ml_query)?;
            return Ok(Rm3Expansion {
                query,
                feedback_used: false,
                feedback_terms: Vec::new(),
            });
        }

        let total_score: f64 = top.entries.iter().map(|(_, s)| s).sum();
        let ord_of: HashMap<&str, u32> = self
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i as u32))
            .collect();
        // ordinal → P(d) · 1/|d| for the feedback documents
        let mut fb_docs: HashMap<u32, f64> = HashMap::new();
        for (doc_id, score) in &top.entries {
            let ord = ord_of[doc_id.as_str()];
            let len = f64::from(self.doc_lengths[ord as usize]);
            if len > 0.0 {
                fb_docs.insert(ord, score / total_score / len);
            }
        }
        let mut feedback: BTreeMap<String, f64> = BTreeMap::new();
        for (term, list) in &self.postings {
            for &(ord, tf) in list {
                if let Some(&scaled_weight) = fb_docs.get(&ord) {
                    *feedback.entry(term.clone()).or_insert(0.0) += scaled_weight * f64::from(tf);
                }
            }
        }

        let mut ranked_terms: Vec<(String, f64)> = feedback.into_iter().collect();
        ranked_terms.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("weights are finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked_terms.truncate(rm3.fb_terms);
        let fb_total: f64 = ranked_terms.iter().map(|(_, w)| w).sum();
        if fb_total > 0.0 {
            for entry in &mut ranked_terms {
                entry.1 /= fb_total;
            }
        }

        let mut combined: BTreeMap<String, f64> = BTreeMap::new();
        for (t, w) in &ml_query {
            combined.insert(t.clone(), rm3.orig_weight * w);
        }
        for (t, w) in &ranked_terms {
            *combined.entry(t.clone()).or_insert(0.0) += (1.0 - rm3.orig_weight) * w;
        }
        combined.retain(|_, w| *w > 0.0);

        Ok(Rm3Expansion {
            query: WeightedQuery::new(combined)?,
            feedback_used: true,
            feedback_terms: ranked_terms,
        })
    }

    /// Write human-readable postings, one term per line.
    pub fn dump_postings<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (term, list) in &self.postings {
            write!(out, "{term}\tdf={}", list.len())?;
            for &(ord, tf) in list {
                write!(out, "\t{}:{}", self.doc_ids[ord as usize], tf)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Persist to a versioned index directory (see module docs for the format).
    pub fn save(&self, dir: &Path) -> Result<(), LexicalError> {
        let io_err = |source| LexicalError::Io {
            path: dir.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let meta = serde_json::json!({
            "version": crate::corpus::FORMAT_VERSION,
            "doc_count": self.doc_count(),
            "avg_doc_len": self.avg_doc_len,
            "analyzer": self.analyzer,
        });
        std::fs::write(
            dir.join("meta.json"),
            serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n",
        )
        .map_err(io_err)?;

        let mut docs = BufWriter::new(File::create(dir.join("docs.tsv")).map_err(io_err)?);
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            writeln!(docs, "{id}\t{len}").map_err(io_err)?;
        }
        docs.flush().map_err(io_err)?;

        let mut bin = BufWriter::new(File::create(dir.join("postings.bin")).map_err(io_err)?);
        bin.write_all(&(self.postings.len() as u32).to_le_bytes())
            .map_err(io_err)?;
        for (term, list) in &self.postings {
            bin.write_all(&(term.len() as u32).to_le_bytes())
                .map_err(io_err)?;
            bin.write_all(term.as_bytes()).map_err(io_err)?;
            bin.write_all(&(list.len() as u32).to_le_bytes())
                .map_err(io_err)?;
            for &(ord, tf) in list {
                bin.write_all(&ord.to_le_bytes()).map_err(io_err)?;
                bin.write_all(&tf.to_le_bytes()).map_err(io_err)?;
            }
        }
        bin.flush().map_err(io_err)?;
        Ok(())
    }

    /// Load an index directory written by [`Self::save`].
    pub fn open(dir: &Path) -> Result<Self, LexicalError> {
        let bad = |msg: String| LexicalError::BadStore(dir.display().to_string(), msg);
        let meta_raw = std::fs::read_to_string(dir.join("meta.json"))
            .map_err(|e| bad(format!("meta.json: {e}")))?;
        let meta: serde_json::Value =
            serde_json::from_str(&meta_raw).map_err(|e| bad(e.to_string()))?;
        let version = meta.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != u64::from(crate::corpus::FORMAT_VERSION) {
            return Err(bad(format!("unsupported index version {version}")));
        }
        let analyzer: Analyzer =
            serde_json::from_value(meta.get("analyzer").cloned().unwrap_or_default())
                .map_err(|e| bad(format!("analyzer config: {e}")))?;
        let avg_doc_len = meta
            .get("avg_doc_len")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| bad("missing avg_doc_len".to_string()))?;

        let docs_file = File::open(dir.join("docs.tsv")).map_err(|e| bad(e.to_string()))?;
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        for line in BufReader::new(docs_file).lines() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            let (id, len) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("bad docs.tsv line: {line}")))?;
            doc_ids.push(id.to_string());
            doc_lengths.push(len.parse::<u32>().map_err(|e| bad(e.to_string()))?);
        }
        if doc_ids.is_empty() {
            return Err(bad("index has no documents".to_string()));
        }

        let mut bin = BufReader::new(
            File::open(dir.join("postings.bin")).map_err(|e| bad(e.to_string()))?,
        );
        let read_u32 = |r: &mut dyn Read| -> Result<u32, LexicalError> {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf)
                .map_err(|e| bad(format!("truncated postings.bin: {e}")))?;
            Ok(u32::from_le_bytes(buf))
        };
        let n_terms = read_u32(&mut bin)?;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term_len = read_u32(&mut bin)? as usize;
            let mut term_bytes = vec![0u8; term_len];
            bin.read_exact(&mut term_bytes)
                .map_err(|e| bad(format!("truncated term: {e}")))?;
            let term = String::from_utf8(term_bytes).map_err(|e| bad(e.to_string()))?;
            let n = read_u32(&mut bin)?;
            let mut list = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let ord = read_u32(&mut bin)?;
                let tf = read_u32(&mut bin)?;
                if ord as usize >= doc_ids.len() {
                    return Err(bad(format!("posting ordinal {ord} out of range")));
                }
                list.push((ord, tf));
            }
            postings.insert(term, list);
        }

        Ok(InvertedIndex {
            postings,
            doc_ids,
            doc_lengths,
            avg_doc_len,
            analyzer,
        })
    }
}

/// Maximum-likelihood query model: term count / query length. Sums to 1.
pub fn max_likelihood_model(query: &[String]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for t in query {
        *counts.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    let total = query.len() as f64;
    for w in counts.values_mut() {
        *w /= total;
    }
    counts
}

//! TREC-format qrels and run handling plus effectiveness metrics.
//!
//! Metric semantics follow `trec_eval`:
//! - nDCG uses linear gain (`gain = grade`) with a `log2(rank + 1)` discount
//!   and the ideal ranking computed from all judged grades sorted descending.
//! - Recall binarizes at a configurable grade threshold (`min_rel`, default 1),
//!   recorded in every report because conventions differ across collections.
//! - Unjudged retrieved documents contribute zero gain.
//! - The evaluated set is every qrels query with at least one relevant
//!   document; such a query missing from the run scores 0. Run queries
//!   absent from the qrels, and qrels queries with no relevant documents,
//!   are excluded from the mean and listed in the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ranked::RankedList;

#[derive(Debug, Error)]
pub enum EvalError {
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
    #[error("invalid run for query {query_id}: {message}")]
    InvalidRun { query_id: String, message: String },
    #[error("k must be at least 1")]
    BadCutoff,
}

/// Graded relevance judgments keyed by `(query_id, doc_id)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
    warnings: Vec<String>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a judgment; a repeated `(query, doc)` pair overwrites with a
    /// warning (last-wins).
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) {
        let per_query = self.judgments.entry(query_id.to_string()).or_default();
        if per_query.insert(doc_id.to_string(), grade).is_some() {
            self.warnings.push(format!(
                "duplicate judgment for ({query_id}, {doc_id}); keeping grade {grade}"
            ));
        }
    }

    /// Parse TREC qrels lines: `qid 0 docid grade`, whitespace-separated.
    pub fn parse(content: &str, origin: &str) -> Result<Self, EvalError> {
        let mut qrels = Qrels::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(EvalError::Parse {
                    path: origin.to_string(),
                    line: line_no,
                    message: format!("expected 4 fields `qid 0 docid grade`, got {}", fields.len()),
                });
            }
            let grade: u32 = fields[3].parse().map_err(|e| EvalError::Parse {
                path: origin.to_string(),
                line: line_no,
                message: format!("bad grade `{}`: {e}", fields[3]),
            })?;
            qrels.insert(fields[0], fields[2], grade);
        }
        Ok(qrels)
    }

    pub fn from_path(path: &Path) -> Result<Self, EvalError> {
        let content = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content, &path.display().to_string())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn judged(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn num_judgments(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Ranked retrieval output for a set of queries, in TREC run semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunList {
    pub run_tag: String,
    per_query: BTreeMap<String, Vec<(String, f64)>>,
}

impl RunList {
    pub fn new(run_tag: impl Into<String>) -> Self {
        let run_tag = run_tag.into();
        assert!(
            !run_tag.is_empty() && !run_tag.contains(char::is_whitespace),
            "run tag must be non-empty and contain no whitespace"
        );
        RunList {
            run_tag,
            per_query: BTreeMap::new(),
        }
    }

    /// Attach a query's ranking. Duplicate docs or increasing scores are
    /// rejected so every stored run satisfies TREC invariants.
    pub fn set_query(&mut self, query_id: &str, ranked: &RankedList) -> Result<(), EvalError> {
        let mut seen = std::collections::HashSet::new();
        let mut prev = f64::INFINITY;
        for (doc_id, score) in &ranked.entries {
            if !seen.insert(doc_id.clone()) {
                return Err(EvalError::InvalidRun {
                    query_id: query_id.to_string(),
                    message: format!("duplicate document {doc_id}"),
                });
            }
            if *score > prev {
                return Err(EvalError::InvalidRun {
                    query_id: query_id.to_string(),
                    message: "scores must be non-increasing with rank".to_string(),
                });
            }
            prev = *score;
        }
        self.per_query
            .insert(query_id.to_string(), ranked.entries.clone());
        Ok(())
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.per_query.keys().map(String::as_str)
    }

    pub fn ranking(&self, query_id: &str) -> Option<&[(String, f64)]> {
        self.per_query.get(query_id).map(Vec::as_slice)
    }

    pub fn num_queries(&self) -> usize {
        self.per_query.len()
    }

    /// Serialize as `qid Q0 docid rank score tag` lines, queries in ascending
    /// id order, scores with 6 decimals.
    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for (qid, entries) in &self.per_query {
            for (rank, (doc_id, score)) in entries.iter().enumerate() {
                writeln!(
                    out,
                    "{qid} Q0 {doc_id} {} {score:.6} {}",
                    rank + 1,
                    self.run_tag
                )
                .expect("writing to string cannot fail");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_trec_string()).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Parse a TREC run, validating contiguous ranks and duplicate docs.
    pub fn parse(content: &str, origin: &str) -> Result<Self, EvalError> {
        let mut per_query: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
        let mut run_tag: Option<String> = None;
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(EvalError::Parse {
                    path: origin.to_string(),
                    line: line_no,
                    message: format!(
                        "expected 6 fields `qid Q0 docid rank score tag`, got {}",
                        fields.len()
                    ),
                });
            }
            let rank: usize = fields[3].parse().map_err(|e| EvalError::Parse {
                path: origin.to_string(),
                line: line_no,
                message: format!("bad rank `{}`: {e}", fields[3]),
            })?;
            let score: f64 = fields[4].parse().map_err(|e| EvalError::Parse {
                path: origin.to_string(),
                line: line_no,
                message: format!("bad score `{}`: {e}", fields[4]),
            })?;
            run_tag.get_or_insert_with(|| fields[5].to_string());
            per_query
                .entry(fields[0].to_string())
                .or_default()
                .push((rank, fields[2].to_string(), score));
        }
        let mut run = RunList::new(run_tag.unwrap_or_else(|| "run".to_string()));
        for (qid, mut entries) in per_query {
            entries.sort_by_key(|(rank, _, _)| *rank);
            for (want, (got, _, _)) in entries.iter().enumerate() {
                if *got != want + 1 {
                    return Err(EvalError::InvalidRun {
                        query_id: qid,
                        message: format!("ranks must be contiguous 1..n; found {got}"),
                    });
                }
            }
            let ranked = RankedList {
                entries: entries.into_iter().map(|(_, d, s)| (d, s)).collect(),
            };
            run.set_query(&qid, &ranked)?;
        }
        Ok(run)
    }

    pub fn from_path(path: &Path) -> Result<Self, EvalError> {
        let content = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content, &path.display().to_string())
    }
}

/// Per-query metric values plus their arithmetic mean over evaluated queries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub metric: String,
    pub k: usize,
    /// Binarization threshold; only recorded for recall.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_rel: Option<u32>,
    pub mean: f64,
    pub evaluated: usize,
    pub per_query: BTreeMap<String, f64>,
    /// Queries left out of the mean, with the reason.
    pub excluded: Vec<(String, String)>,
}

impl EvalReport {
    fn summarize(
        metric: String,
        k: usize,
        min_rel: Option<u32>,
        per_query: BTreeMap<String, f64>,
        excluded: Vec<(String, String)>,
    ) -> Self {
        let evaluated = per_query.len();
        let mean = if evaluated == 0 {
            0.0
        } else {
            per_query.values().sum::<f64>() / evaluated as f64
        };
        EvalReport {
            metric,
            k,
            min_rel,
            mean,
            evaluated,
            per_query,
            excluded,
        }
    }

    /// `query_id,value` CSV with a header, queries in ascending id order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("query_id,value\n");
        for (qid, v) in &self.per_query {
            writeln!(out, "{qid},{v:.6}").expect("writing to string cannot fail");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// nDCG@k with linear gain over graded judgments.
pub fn ndcg_at_k(run: &RunList, qrels: &Qrels, k: usize) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::BadCutoff);
    }
    let mut per_query = BTreeMap::new();
    let mut excluded = Vec::new();
    for qid in qrels.query_ids() {
        let judged = qrels.judged(qid).expect("query listed");
        let ideal_dcg = ideal_dcg(judged, k);
        if ideal_dcg == 0.0 {
            excluded.push((qid.to_string(), "no relevant documents".to_string()));
            continue;
        }
        let ranking = run.ranking(qid).unwrap_or(&[]);
        let mut dcg = 0.0;
        for (i, (doc_id, _)) in ranking.iter().take(k).enumerate() {
            let gain = f64::from(judged.get(doc_id).copied().unwrap_or(0));
            dcg += gain / ((i + 2) as f64).log2();
        }
        per_query.insert(qid.to_string(), dcg / ideal_dcg);
    }
    for qid in run.query_ids() {
        if qrels.judged(qid).is_none() {
            log::warn!("query {qid} in run has no judgments; excluded");
            excluded.push((qid.to_string(), "not judged".to_string()));
        }
    }
    Ok(EvalReport::summarize(
        format!("ndcg@{k}"),
        k,
        None,
        per_query,
        excluded,
    ))
}

fn ideal_dcg(judged: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut grades: Vec<u32> = judged.values().copied().collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| f64::from(g) / ((i + 2) as f64).log2())
        .sum()
}

/// Recall@k over documents with grade ≥ `min_rel`.
pub fn recall_at_k(
    run: &RunList,
    qrels: &Qrels,
    k: usize,
    min_rel: u32,
) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::BadCutoff);
    }
    let mut per_query = BTreeMap::new();
    let mut excluded = Vec::new();
    for qid in qrels.query_ids() {
        let judged = qrels.judged(qid).expect("query listed");
        let relevant: std::collections::HashSet<&str> = judged
            .iter()
            .filter(|(_, &g)| g >= min_rel)
            .map(|(d, _)| d.as_str())
            .collect();
        if relevant.is_empty() {
            excluded.push((qid.to_string(), "no relevant documents".to_string()));
            continue;
        }
        let ranking = run.ranking(qid).unwrap_or(&[]);
        let hit = ranking
            .iter()
            .take(k)
            .filter(|(d, _)| relevant.contains(d.as_str()))
            .count();
        per_query.insert(qid.to_string(), hit as f64 / relevant.len() as f64);
    }
    for qid in run.query_ids() {
        if qrels.judged(qid).is_none() {
            log::warn!("query {qid} in run has no judgments; excluded");
            excluded.push((qid.to_string(), "not judged".to_string()));
        }
    }
    Ok(EvalReport::summarize(
        format!("recall@{k}"),
        k,
        Some(min_rel),
        per_query,
        excluded,
    ))
}

//! Core retrieval and evaluation primitives for querylab.
//!
//! This crate provides:
//! - corpus ingestion and deterministic tokenization ([`corpus`])
//! - an inverted index with BM25, weighted-term search, and RM3 feedback ([`lexical`])
//! - exact dense and sparse-impact retrieval over external representations ([`vector`])
//! - TREC qrels/run handling plus nDCG and Recall ([`eval`])
//! - rank-stability analytics: RankCV, Spearman agreement, variance
//!   partitioning, and per-query delta exports ([`stability`])
//!
//! Everything here is deterministic: identical inputs produce identical
//! outputs across runs and platforms. Retrieval is exact (no approximation),
//! ties always break by ascending document id, and all persisted formats use
//! fixed float formatting.

pub mod corpus;
pub mod eval;
pub mod lexical;
pub mod ranked;
pub mod stability;
pub mod vector;

pub use corpus::{tokenize, Analyzer, Corpus, Document, Query};
pub use ranked::RankedList;

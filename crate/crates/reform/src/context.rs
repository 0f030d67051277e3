//! Shared execution context for reformulation methods.

use std::collections::BTreeMap;

use querylab_core::corpus::Corpus;
use querylab_core::lexical::{Bm25Params, InvertedIndex, Rm3Params};
use querylab_gateway::{DecodingConfig, Gateway};

use crate::templates::TemplateSet;
use crate::Method;

/// Per-method tuning knobs. Everything has a sensible default; experiment
/// configs override individual fields.
#[derive(Debug, Clone)]
pub struct MethodParams {
    /// Query repetitions for pseudo-document methods under lexical retrieval.
    pub q2d_repetitions: u32,
    pub part_separator: String,
    pub dedup_keywords: bool,
    /// Scale factor in the repetition formula
    /// `round(expansion_tokens / (lambda · query_tokens))`.
    pub mugi_lambda: f64,
    pub mugi_min_repetitions: u32,
    pub mugi_max_repetitions: u32,
    /// Retrieval depth for evidence-grounded methods.
    pub evidence_depth: usize,
    /// Number of top document-frequency terms fed to corpus-steered prompts.
    pub corpus_term_count: usize,
    pub rm3: Rm3Params,
    pub bm25: Bm25Params,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            q2d_repetitions: 5,
            part_separator: " ".to_string(),
            dedup_keywords: true,
            mugi_lambda: 5.0,
            mugi_min_repetitions: 1,
            mugi_max_repetitions: 30,
            evidence_depth: 10,
            corpus_term_count: 50,
            rm3: Rm3Params::default(),
            bm25: Bm25Params::default(),
        }
    }
}

/// Default sampling temperature per method family: keyword expansion favors
/// moderate diversity, pseudo-document generation samples at full temperature.
/// Any experiment config can override per llm.
pub fn default_temperature(method: Method) -> f64 {
    match method {
        Method::Genqr | Method::GenqrEnsemble | Method::Q2k => 0.8,
        Method::Q2dZs
        | Method::Q2dFs
        | Method::Q2dCot
        | Method::QaExpand
        | Method::Mugi
        | Method::Lamer
        | Method::Csqe => 1.0,
        Method::Original | Method::Rm3 => 0.0,
    }
}

/// Collection access for corpus-grounded methods.
pub trait EvidenceRetriever: Send + Sync {
    /// Top-k `(doc_id, text)` for a query string.
    fn top_documents(&self, query: &str, k: usize) -> Vec<(String, String)>;

    /// The n highest-document-frequency terms of the collection.
    fn top_terms(&self, n: usize) -> Vec<String>;

    /// RM3 relevance-model weights for a query string. Returns the weighted
    /// query, whether feedback documents were found, and the expansion terms.
    fn rm3_weights(
        &self,
        query: &str,
        params: &Rm3Params,
    ) -> (BTreeMap<String, f64>, bool, Vec<(String, f64)>);
}

/// BM25 evidence over an inverted index plus its corpus.
pub struct LexicalEvidence<'a> {
    pub index: &'a InvertedIndex,
    pub corpus: &'a Corpus,
    pub bm25: Bm25Params,
}

impl<'a> LexicalEvidence<'a> {
    pub fn new(index: &'a InvertedIndex, corpus: &'a Corpus) -> Self {
        LexicalEvidence {
            index,
            corpus,
            bm25: Bm25Params::default(),
        }
    }
}

impl EvidenceRetriever for LexicalEvidence<'_> {
    fn top_documents(&self, query: &str, k: usize) -> Vec<(String, String)> {
        let tokens = self.index.analyzer().tokenize(query);
        let Ok(ranked) = self.index.bm25_search(&tokens, k, &self.bm25) else {
            return Vec::new();
        };
        ranked
            .entries
            .iter()
            .filter_map(|(doc_id, _)| {
                self.corpus
                    .get(doc_id)
                    .map(|d| (doc_id.clone(), d.text.clone()))
            })
            .collect()
    }

    fn top_terms(&self, n: usize) -> Vec<String> {
        self.index
            .top_df_terms(n)
            .into_iter()
            .map(|(t, _)| t)
            .collect()
    }

    fn rm3_weights(
        &self,
        query: &str,
        params: &Rm3Params,
    ) -> (BTreeMap<String, f64>, bool, Vec<(String, f64)>) {
        let tokens = self.index.analyzer().tokenize(query);
        match self.index.rm3_expand(&tokens, params, &self.bm25) {
            Ok(expansion) => (
                expansion.query.terms,
                expansion.feedback_used,
                expansion.feedback_terms,
            ),
            Err(e) => {
                log::warn!("rm3 expansion failed for `{query}`: {e}");
                (BTreeMap::new(), false, Vec::new())
            }
        }
    }
}

/// Everything a method needs to run: the gateway, optional collection
/// evidence, templates, parameters, and the decoding identity.
pub struct MethodContext<'a> {
    pub gateway: &'a Gateway,
    pub retriever: Option<&'a dyn EvidenceRetriever>,
    pub templates: &'a TemplateSet,
    pub params: MethodParams,
    pub model: String,
    /// Base seed; call `i` of a method uses `seed + i` so independent samples
    /// stay independent under the completion cache.
    pub seed: u64,
    /// Overrides the per-method default temperature when set.
    pub temperature: Option<f64>,
    /// Overrides the 256-token output budget when set (logged by the gateway).
    pub max_tokens: Option<u32>,
}

impl<'a> MethodContext<'a> {
    pub fn new(gateway: &'a Gateway, templates: &'a TemplateSet, model: impl Into<String>) -> Self {
        MethodContext {
            gateway,
            retriever: None,
            templates,
            params: MethodParams::default(),
            model: model.into(),
            seed: 0,
            temperature: None,
            max_tokens: None,
        }
    }

    pub fn with_retriever(mut self, retriever: &'a dyn EvidenceRetriever) -> Self {
        self.retriever = Some(retriever);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Decoding configuration for the `call_index`-th gateway call of a
    /// method run.
    pub fn decoding(&self, method: Method, call_index: u64) -> DecodingConfig {
        let temperature = self
            .temperature
            .unwrap_or_else(|| default_temperature(method));
        let mut config = DecodingConfig::new(self.model.clone(), temperature)
            .with_seed(self.seed.wrapping_add(call_index));
        if let Some(max_tokens) = self.max_tokens {
            config = config.with_max_tokens(max_tokens);
        }
        config
    }
}

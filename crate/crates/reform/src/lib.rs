//! Query reformulation strategies.
//!
//! Every method implements the [`Reformulator`] trait and is registered by
//! name in [`registry`], so experiment configs select strategies at runtime:
//!
//! - keyword expansion: `genqr`, `genqr_ensemble`, `q2k`
//! - pseudo-document generation: `q2d_zs`, `q2d_fs`, `q2d_cot`, `qa_expand`, `mugi`
//! - corpus-grounded rewriting: `lamer`, `csqe`
//! - baselines: `original`, `rm3`
//!
//! A method turns a [`Query`](querylab_core::Query) into a
//! [`ReformulatedQuery`]: the original text, the generated parts in call
//! order, an [`AssemblySpec`] describing how they concatenate, and the
//! resulting `final_text`. `final_text` is always recomputable from the other
//! fields, and always contains the original query text at least once.
//! Prompt templates live in a versioned directory shipped with the crate
//! (`templates/v1/`) rather than in code.

pub mod assembly;
pub mod context;
pub mod methods;
pub mod parse;
pub mod registry;
pub mod templates;

pub use assembly::{assemble, AssemblySpec};
pub use context::{
    default_temperature, EvidenceRetriever, LexicalEvidence, MethodContext, MethodParams,
};
pub use registry::{available_methods, create, Reformulator};
pub use templates::TemplateSet;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReformError {
    #[error("unknown method `{0}` (available: {1})")]
    UnknownMethod(String, String),
    #[error("method `{0}` requires a retriever handle")]
    RetrieverRequired(Method),
    #[error("template error: {0}")]
    Template(String),
    #[error(transparent)]
    Gateway(#[from] querylab_gateway::GatewayError),
    #[error("retrieval failed: {0}")]
    Retrieval(String),
}

/// The reformulation strategies this toolkit ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Original,
    Rm3,
    Genqr,
    GenqrEnsemble,
    Q2k,
    Q2dZs,
    Q2dFs,
    Q2dCot,
    QaExpand,
    Mugi,
    Lamer,
    Csqe,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Original,
        Method::Rm3,
        Method::Genqr,
        Method::GenqrEnsemble,
        Method::Q2k,
        Method::Q2dZs,
        Method::Q2dFs,
        Method::Q2dCot,
        Method::QaExpand,
        Method::Mugi,
        Method::Lamer,
        Method::Csqe,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::Rm3 => "rm3",
            Method::Genqr => "genqr",
            Method::GenqrEnsemble => "genqr_ensemble",
            Method::Q2k => "q2k",
            Method::Q2dZs => "q2d_zs",
            Method::Q2dFs => "q2d_fs",
            Method::Q2dCot => "q2d_cot",
            Method::QaExpand => "qa_expand",
            Method::Mugi => "mugi",
            Method::Lamer => "lamer",
            Method::Csqe => "csqe",
        }
    }

    /// Methods that condition on the target collection and therefore need a
    /// retriever handle.
    pub fn needs_retriever(&self) -> bool {
        matches!(self, Method::Rm3 | Method::Lamer | Method::Csqe)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = ReformError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| {
                ReformError::UnknownMethod(s.to_string(), registry::available_methods().join(", "))
            })
    }
}

/// What a generated part is, which controls how assembly treats it
/// (keyword sets deduplicate, everything else concatenates verbatim).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    KeywordSet,
    PseudoDoc,
    Answer,
    Rewrite,
    ExtractedSentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub kind: PartKind,
    pub text: String,
}

impl Part {
    pub fn new(kind: PartKind, text: impl Into<String>) -> Self {
        Part {
            kind,
            text: text.into(),
        }
    }
}

/// A method's output for one query: everything needed to reproduce, audit,
/// and retrieve with the reformulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformulatedQuery {
    pub query_id: String,
    pub method: Method,
    pub original_text: String,
    /// Generated parts in gateway-call order.
    pub parts: Vec<Part>,
    pub assembly: AssemblySpec,
    pub final_text: String,
    /// Cache keys of the completions that produced the parts.
    pub provenance: Vec<String>,
    /// Term weights for retrieval-model methods (rm3); lexical retrieval uses
    /// these instead of tokenizing `final_text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_terms: Option<BTreeMap<String, f64>>,
    /// Degenerate-path markers such as `degenerate`, `evidence_free`,
    /// `filter_fallback`, `no_feedback_docs`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ReformulatedQuery {
    /// Recompute `final_text` from the stored fields. Always equals
    /// `final_text` for a well-formed record.
    pub fn recompute_final_text(&self) -> String {
        assemble(&self.original_text, &self.parts, &self.assembly)
    }

    /// Re-assemble with a different repetition count. Encoder-bound
    /// retrievers use one repetition, since repeating the query is a
    /// term-frequency trick that only matters to lexical scoring.
    pub fn text_with_repetitions(&self, query_repetitions: u32) -> String {
        let spec = AssemblySpec {
            query_repetitions,
            ..self.assembly.clone()
        };
        assemble(&self.original_text, &self.parts, &spec)
    }
}

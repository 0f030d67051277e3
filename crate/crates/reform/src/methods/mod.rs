//! The reformulation strategies themselves.

mod baseline;
mod grounded;
mod keyword;
mod pseudo_doc;

pub use baseline::{Original, Rm3};
pub use grounded::{Csqe, Lamer};
pub use keyword::{GenQr, GenQrEnsemble, Q2k};
pub use pseudo_doc::{Mugi, Q2d, QaExpand};

use std::collections::BTreeMap;

use querylab_core::Query;

use crate::assembly::{assemble, AssemblySpec};
use crate::{Method, Part, ReformulatedQuery};

/// Fixed call counts pinned by each method's definition.
pub const GENQR_CALLS: u64 = 5;
pub const QA_SUBQUESTIONS: usize = 3;
pub const MUGI_GENERATIONS: u64 = 5;
pub const LAMER_REWRITES: u64 = 5;
pub const CSQE_PASSAGES: u64 = 2;

/// Assemble the final record. When a method produced no usable content the
/// repetition count collapses to 1 so `final_text` degrades to exactly the
/// original query, and the record is flagged `degenerate`.
pub(crate) fn finish(
    query: &Query,
    method: Method,
    parts: Vec<Part>,
    mut assembly: AssemblySpec,
    provenance: Vec<String>,
    mut flags: Vec<String>,
    weighted_terms: Option<BTreeMap<String, f64>>,
) -> ReformulatedQuery {
    let usable = parts.iter().any(|p| !p.text.trim().is_empty());
    if !usable && method != Method::Original {
        assembly.query_repetitions = 1;
        if !flags.iter().any(|f| f == "degenerate") {
            flags.push("degenerate".to_string());
        }
    }
    let final_text = assemble(&query.text, &parts, &assembly);
    ReformulatedQuery {
        query_id: query.query_id.clone(),
        method,
        original_text: query.text.clone(),
        parts,
        assembly,
        final_text,
        provenance,
        weighted_terms,
        flags,
    }
}

pub(crate) fn base_assembly(params: &crate::MethodParams) -> AssemblySpec {
    AssemblySpec {
        query_repetitions: 1,
        part_separator: params.part_separator.clone(),
        dedup_keywords: params.dedup_keywords,
    }
}

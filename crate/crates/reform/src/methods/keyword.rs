//! Keyword-level expansion: terms appended to the original query.

use querylab_core::Query;
use querylab_gateway::{ChatRequest, RequestTag};

use super::{base_assembly, finish, GENQR_CALLS};
use crate::parse::parse_keywords;
use crate::registry::Reformulator;
use crate::{Method, MethodContext, Part, PartKind, ReformError, ReformulatedQuery};

/// Five independent keyword-expansion calls with one instruction.
pub struct GenQr;

impl Reformulator for GenQr {
    fn method(&self) -> Method {
        Method::Genqr
    }

    fn reformulate(
        &self,
        query: &Query,
        ctx: &MethodContext,
    ) -> Result<ReformulatedQuery, ReformError> {
        let prompt = ctx.templates.render("genqr", &[("query", &query.text)])?;
        let mut parts = Vec::new();
        let mut provenance = Vec::new();
        for call in 0..GENQR_CALLS {
            let request = ChatRequest::from_prompt(
                prompt.clone(),
                ctx.decoding(Method::Genqr, call),
                RequestTag::Keywords,
            );
            let completion = ctx.gateway.cached_complete(&request)?;
            provenance.push(completion.cache_key.clone());
            let keywords = parse_keywords(&completion.text);
            if keywords.is_empty() {
                log::warn!(
                    "genqr call {call} for query {} produced no keywords",
                    query.query_id
                );
            }
            parts.push(Part::new(PartKind::KeywordSet, keywords.join(" ")));
        }
        Ok(finish(
            query,
            Method::Genqr,
            parts,
            base_assembly(&ctx.params),
            provenance,
            Vec::new(),
            None,
        ))
    }
}

/// One keyword call per instruction paraphrase; the ten keyword sets merge
/// into a single consolidated query.
pub struct GenQrEnsemble;

impl Reformulator for GenQrEnsemble {
    fn method(&self) -> Method {
        Method::GenqrEnsemble
    }

    fn reformulate(
        &self,
        query: &Query,
        ctx: &MethodContext,
    ) -> Result<ReformulatedQuery, ReformError> {
        let instructions = ctx.templates.ensemble_instructions();
        let mut parts = Vec::new();
        let mut provenance = Vec::new();
        for (call, instruction) in instructions.iter().enumerate() {
            let prompt = format!(
                "{instruction}.\nReturn a comma-separated list of terms only.\n\nQuery: {}\nTerms:",
                query.text
            );
            let request = ChatRequest::from_prompt(
                prompt,
                ctx.decoding(Method::GenqrEnsemble, call as u64),
                RequestTag::Keywords,
            );
            let completion = ctx.gateway.cached_complete(&request)?;
            provenance.push(completion.cache_key.clone());
            let keywords = parse_keywords(&completion.text);
            if keywords.is_empty() {
                log::warn!(
                    "genqr_ensemble instruction {call} for query {} produced no keywords",
                    query.query_id
                );
            }
            parts.push(Part::new(PartKind::KeywordSet, keywords.join(" ")));
        }
        Ok(finish(
            query,
            Method::GenqrEnsemble,
            parts,
            base_assembly(&ctx.params),
            provenance,
            Vec::new(),
            None,
        ))
    }
}

/// Single-call mapping of the query to related terms and phrases.
pub struct Q2k;

impl Reformulator for Q2k {
    fn method(&self) -> Method {
        Method::Q2k
    }

    fn reformulate(
        &self,
        query: &Query,
        ctx: &MethodContext,
    ) -> Result<ReformulatedQuery, ReformError> {
        let prompt = ctx.templates.render("q2k", &[("query", &query.text)])?;
        let request = ChatRequest::from_prompt(
            prompt,
            ctx.decoding(Method::Q2k, 0),
            RequestTag::Keywords,
        );
        let completion = ctx.gateway.cached_complete(&request)?;
        let keywords = parse_keywords(&completion.text);
        let parts = vec![Part::new(PartKind::KeywordSet, keywords.join(" "))];
        Ok(finish(
            query,
            Method::Q2k,
            parts,
            base_assembly(&ctx.params),
            vec![completion.cache_key],
            Vec::new(),
            None,
        ))
    }
}

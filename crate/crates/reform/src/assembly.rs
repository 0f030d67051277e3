//! Deterministic query assembly.
//!
//! Every method funnels its generated parts through [`assemble`], so a
//! `final_text` is always recomputable from `(original, parts, spec)`.

use serde::{Deserialize, Serialize};

use crate::{Part, PartKind};

/// How a reformulated query is concatenated from its parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblySpec {
    /// Times the original query is repeated before the parts. Repetition
    /// up-weights original terms under bag-of-words scoring.
    pub query_repetitions: u32,
    pub part_separator: String,
    /// Deduplicate tokens across keyword-set parts, keeping first occurrence.
    pub dedup_keywords: bool,
}

impl Default for AssemblySpec {
    fn default() -> Self {
        AssemblySpec {
            query_repetitions: 1,
            part_separator: " ".to_string(),
            dedup_keywords: true,
        }
    }
}

impl AssemblySpec {
    pub fn with_repetitions(mut self, query_repetitions: u32) -> Self {
        assert!(query_repetitions >= 1, "repetitions must be at least 1");
        self.query_repetitions = query_repetitions;
        self
    }
}

/// Concatenate: the original repeated `query_repetitions` times, then parts
/// in order, all joined by the separator. Keyword parts are token-deduplicated
/// across parts when the spec says so; empty parts vanish.
pub fn assemble(original: &str, parts: &[Part], spec: &AssemblySpec) -> String {
    assert!(spec.query_repetitions >= 1, "repetitions must be at least 1");
    let mut segments: Vec<String> = Vec::with_capacity(spec.query_repetitions as usize + parts.len());
    for _ in 0..spec.query_repetitions {
        segments.push(original.to_string());
    }
    let mut seen_keywords = std::collections::HashSet::new();
    for part in parts {
        let text = if part.kind == PartKind::KeywordSet && spec.dedup_keywords {
            let kept: Vec<&str> = part
                .text
                .split_whitespace()
                .filter(|t| seen_keywords.insert(t.to_string()))
                .collect();
            kept.join(" ")
        } else {
            part.text.trim().to_string()
        };
        if !text.is_empty() {
            segments.push(text);
        }
    }
    segments.join(&spec.part_separator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(text: &str) -> Part {
        Part::new(PartKind::KeywordSet, text)
    }

    #[test]
    fn no_parts_single_repetition_is_identity() {
        let spec = AssemblySpec::default();
        assert_eq!(assemble("q", &[], &spec), "q");
    }

    #[test]
    fn parts_follow_repeated_query() {
        let spec = AssemblySpec::default().with_repetitions(2);
        let parts = vec![
            Part::new(PartKind::PseudoDoc, "A"),
            Part::new(PartKind::PseudoDoc, "B"),
        ];
        assert_eq!(assemble("q", &parts, &spec), "q q A B");
    }

    #[test]
    fn keyword_dedup_spans_parts() {
        let spec = AssemblySpec::default();
        let parts = vec![kw("alpha beta"), kw("beta gamma"), kw("alpha")];
        assert_eq!(assemble("q", &parts, &spec), "q alpha beta gamma");
    }

    #[test]
    fn dedup_off_keeps_repetitions() {
        let spec = AssemblySpec {
            dedup_keywords: false,
            ..AssemblySpec::default()
        };
        let parts = vec![kw("alpha"), kw("alpha")];
        assert_eq!(assemble("q", &parts, &spec), "q alpha alpha");
    }

    #[test]
    fn empty_parts_vanish() {
        let spec = AssemblySpec::default();
        let parts = vec![kw(""), Part::new(PartKind::PseudoDoc, "  ")];
        assert_eq!(assemble("q", &parts, &spec), "q");
    }

    #[test]
    fn custom_separator() {
        let spec = AssemblySpec {
            part_separator: " | ".to_string(),
            ..AssemblySpec::default()
        };
        let parts = vec![Part::new(PartKind::Answer, "A")];
        assert_eq!(assemble("q", &parts, &spec), "q | A");
    }
}

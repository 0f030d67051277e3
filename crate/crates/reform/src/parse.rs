//! Tolerant parsers for LLM output.
//!
//! The contract: keyword output splits on newlines, commas, and semicolons;
//! passages are taken verbatim; judge and filter output is line-delimited
//! indices with a fallback that treats non-index lines as literal sentences.
//! Parsers are total — degenerate output yields an empty result, never an
//! error — so one bad completion drops its contribution instead of failing
//! the method.

/// Split keyword output on newlines/commas/semicolons, trimming list markers
/// (`-`, `*`, `1.`, `2)`) and quotes. Multi-word phrases survive as one entry.
pub fn parse_keywords(text: &str) -> Vec<String> {
    text.split(['\n', ',', ';'])
        .map(strip_list_marker)
        .map(|s| s.trim_matches(|c: char| c == '"' || c == '\'' || c == '`').trim())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Non-empty trimmed lines, list markers stripped.
pub fn parse_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(strip_list_marker)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Interpret output as 1-based indices into a list of `max` items. Returns
/// `None` unless every non-empty line parses as an in-range index; callers
/// fall back to their documented default in that case. Duplicates collapse
/// and order is ascending.
pub fn parse_indices(text: &str, max: usize) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = strip_list_marker(line);
        if line.is_empty() {
            continue;
        }
        for token in line.split([',', ' ']) {
            let token = token.trim().trim_end_matches('.');
            if token.is_empty() {
                continue;
            }
            match token.parse::<usize>() {
                Ok(i) if (1..=max).contains(&i) => out.push(i),
                _ => return None,
            }
        }
    }
    if out.is_empty() {
        return None;
    }
    out.sort_unstable();
    out.dedup();
    Some(out)
}

/// Naive sentence split on `.`, `?`, `!` boundaries. Good enough to number a
/// document's sentences for relevance judgments.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        current.push(c);
        if matches!(c, '.' | '?' | '!') {
            let s = current.trim();
            if !s.is_empty() {
                sentences.push(s.to_string());
            }
            current.clear();
        }
    }
    let tail = current.trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

fn strip_list_marker(s: &str) -> &str {
    let s = s.trim();
    let s = s.strip_prefix(['-', '*', '•']).unwrap_or(s);
    // "12." / "3)" enumeration prefixes
    let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(stripped) = rest.strip_prefix(['.', ')']) {
            return stripped.trim();
        }
    }
    s.trim()
}

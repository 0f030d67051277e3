//! Ranked retrieval results shared by all search paradigms.

use serde::{Deserialize, Serialize};

/// Top-k retrieval result: `(doc_id, score)` entries in descending score
/// order, ties broken by ascending `doc_id` so runs are bit-reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    /// Sort scored candidates by `(score desc, doc_id asc)` and keep the top k.
    pub fn from_scores(scored: Vec<(String, f64)>, k: usize) -> Self {
        let mut entries = scored;
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("scores are finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        entries.truncate(k);
        RankedList { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_score_then_doc_id() {
        let list = RankedList::from_scores(
            vec![
                ("d2".into(), 1.0),
                ("d1".into(), 1.0),
                ("d3".into(), 2.0),
            ],
            10,
        );
        let ids: Vec<_> = list.doc_ids().collect();
        assert_eq!(ids, vec!["d3", "d1", "d2"]);
    }

    #[test]
    fn truncates_to_k() {
        let list = RankedList::from_scores(
            vec![("a".into(), 3.0), ("b".into(), 2.0), ("c".into(), 1.0)],
            2,
        );
        assert_eq!(list.len(), 2);
    }
}

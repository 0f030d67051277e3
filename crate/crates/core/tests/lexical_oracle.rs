//! Oracle equivalence for the lexical engine: index-based scoring must match
//! an exhaustive per-document reference implementation exactly.

use std::collections::BTreeMap;

use querylab_core::corpus::{Analyzer, Corpus, Document};
use querylab_core::lexical::{Bm25Params, InvertedIndex, Rm3Params, WeightedQuery};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Reference BM25: no index, recomputes every statistic by scanning the raw
/// token streams. Deliberately shares no code with the implementation.
fn brute_force_bm25(
    docs: &[(String, Vec<String>)],
    query_weights: &BTreeMap<String, f64>,
    params: &Bm25Params,
) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avg_len: f64 = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut results = Vec::new();
    for (doc_id, tokens) in docs {
        let mut score = 0.0;
        let mut overlap = false;
        for (term, weight) in query_weights {
            if *weight <= 0.0 {
                continue;
            }
            let tf = tokens.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            overlap = true;
            let df = docs
                .iter()
                .filter(|(_, ts)| ts.iter().any(|t| t == term))
                .count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let dl = tokens.len() as f64;
            score += weight * idf * tf * (params.k1 + 1.0)
                / (tf + params.k1 * (1.0 - params.b + params.b * dl / avg_len));
        }
        if overlap {
            results.push((doc_id.clone(), score));
        }
    }
    results.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    results
}

/// Reference RM3 built directly on the brute-force scorer.
fn brute_force_rm3(
    docs: &[(String, Vec<String>)],
    query: &[String],
    rm3: &Rm3Params,
    params: &Bm25Params,
) -> BTreeMap<String, f64> {
    let mut qmodel: BTreeMap<String, f64> = BTreeMap::new();
    for t in query {
        *qmodel.entry(t.clone()).or_insert(0.0) += 1.0 / query.len() as f64;
    }
    let weights: BTreeMap<String, f64> = query
        .iter()
        .fold(BTreeMap::new(), |mut acc, t| {
            *acc.entry(t.clone()).or_insert(0.0) += 1.0;
            acc
        });
    let mut ranking = brute_force_bm25(docs, &weights, params);
    ranking.truncate(rm3.fb_docs);
    if ranking.is_empty() {
        return qmodel;
    }
    let total: f64 = ranking.iter().map(|(_, s)| s).sum();
    let mut fb: BTreeMap<String, f64> = BTreeMap::new();
    for (doc_id, score) in &ranking {
        let tokens = &docs.iter().find(|(id, _)| id == doc_id).unwrap().1;
        if tokens.is_empty() {
            continue;
        }
        let p_doc = score / total;
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_insert(0.0) += 1.0;
        }
        for (t, c) in counts {
            *fb.entry(t.to_string()).or_insert(0.0) += p_doc * c / tokens.len() as f64;
        }
    }
    let mut ranked_terms: Vec<(String, f64)> = fb.into_iter().collect();
    ranked_terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked_terms.truncate(rm3.fb_terms);
    let fb_total: f64 = ranked_terms.iter().map(|(_, w)| w).sum();
    let mut combined = BTreeMap::new();
    for (t, w) in &qmodel {
        combined.insert(t.clone(), rm3.orig_weight * w);
    }
    for (t, w) in ranked_terms {
        *combined.entry(t).or_insert(0.0) += (1.0 - rm3.orig_weight) * w / fb_total;
    }
    combined.retain(|_, w| *w > 0.0);
    combined
}

fn random_corpus(rng: &mut ChaCha8Rng, n_docs: usize, vocab: &[&str]) -> Vec<(String, Vec<String>)> {
    (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..=12);
            let tokens: Vec<String> = (0..len)
                .map(|_| vocab.choose(rng).unwrap().to_string())
                .collect();
            (format!("d{i:03}"), tokens)
        })
        .collect()
}

fn build_index(docs: &[(String, Vec<String>)]) -> InvertedIndex {
    let corpus = Corpus::from_documents(
        docs.iter()
            .map(|(id, tokens)| Document {
                doc_id: id.clone(),
                text: tokens.join(" "),
                title: None,
            })
            .collect(),
    )
    .unwrap();
    InvertedIndex::build(&corpus, &Analyzer::default()).unwrap()
}

const VOCAB: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa",
];

#[test]
fn bm25_matches_brute_force_on_random_corpora() {
    let params = Bm25Params::default();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_docs = rng.random_range(2..=100);
        let docs = random_corpus(&mut rng, n_docs, VOCAB);
        let index = build_index(&docs);
        let query: Vec<String> = (0..rng.random_range(1..=4))
            .map(|_| VOCAB.choose(&mut rng).unwrap().to_string())
            .collect();
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for t in &query {
            *weights.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        let expected = brute_force_bm25(&docs, &weights, &params);
        let got = index.bm25_search(&query, docs.len(), &params).unwrap();
        assert_eq!(got.entries.len(), expected.len(), "seed {seed}");
        for ((gd, gs), (ed, es)) in got.entries.iter().zip(&expected) {
            assert_eq!(gd, ed, "seed {seed}");
            assert!((gs - es).abs() < 1e-9, "seed {seed}: {gs} vs {es}");
        }
    }
}

#[test]
fn four_doc_example_matches_brute_force() {
    let docs: Vec<(String, Vec<String>)> = vec![
        ("d1".into(), vec!["a".into(), "b".into()]),
        ("d2".into(), vec!["b".into(), "c".into()]),
        ("d3".into(), vec!["c".into(), "c".into(), "d".into()]),
        ("d4".into(), vec!["b".into(), "d".into()]),
    ];
    let index = build_index(&docs);
    let params = Bm25Params::default();
    let query = vec!["b".to_string(), "c".to_string()];
    let weights: BTreeMap<String, f64> = [("b".into(), 1.0), ("c".into(), 1.0)].into();
    let expected = brute_force_bm25(&docs, &weights, &params);
    let got = index.bm25_search(&query, 4, &params).unwrap();
    let got_pairs: Vec<(String, f64)> = got.entries.clone();
    assert_eq!(got_pairs.len(), expected.len());
    for ((gd, gs), (ed, es)) in got_pairs.iter().zip(&expected) {
        assert_eq!(gd, ed);
        assert!((gs - es).abs() < 1e-9);
    }
}

#[test]
fn weighted_search_matches_brute_force_with_fractional_weights() {
    let params = Bm25Params::default();
    for seed in 100..110 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs = random_corpus(&mut rng, 40, VOCAB);
        let index = build_index(&docs);
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for _ in 0..3 {
            weights.insert(
                VOCAB.choose(&mut rng).unwrap().to_string(),
                rng.random_range(0.1..3.0),
            );
        }
        let expected = brute_force_bm25(&docs, &weights, &params);
        let wq = WeightedQuery::new(weights).unwrap();
        let got = index.weighted_search(&wq, docs.len(), &params).unwrap();
        for ((gd, gs), (ed, es)) in got.entries.iter().zip(&expected) {
            assert_eq!(gd, ed, "seed {seed}");
            assert!((gs - es).abs() < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn rm3_matches_brute_force_relevance_model() {
    let params = Bm25Params::default();
    let rm3 = Rm3Params {
        fb_docs: 2,
        fb_terms: 2,
        orig_weight: 0.5,
    };
    // Fixed toy corpus from the documented example, then random corpora.
    let toy: Vec<(String, Vec<String>)> = vec![
        ("d1".into(), vec!["a".into(), "b".into(), "b".into()]),
        ("d2".into(), vec!["b".into(), "c".into()]),
        ("d3".into(), vec!["c".into(), "d".into()]),
        ("d4".into(), vec!["a".into(), "d".into(), "e".into()]),
    ];
    let mut cases = vec![(toy, vec!["b".to_string(), "c".to_string()])];
    for seed in 200..210 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_docs = rng.random_range(4..=60);
        let docs = random_corpus(&mut rng, n_docs, VOCAB);
        let query: Vec<String> = (0..rng.random_range(1..=3))
            .map(|_| VOCAB.choose(&mut rng).unwrap().to_string())
            .collect();
        cases.push((docs, query));
    }
    for (docs, query) in cases {
        let index = build_index(&docs);
        let expected = brute_force_rm3(&docs, &query, &rm3, &params);
        let got = index.rm3_expand(&query, &rm3, &params).unwrap();
        assert_eq!(got.query.terms.len(), expected.len());
        for (t, w) in &expected {
            let gw = got.query.terms.get(t).copied().unwrap_or(f64::NAN);
            assert!((gw - w).abs() < 1e-9, "term {t}: {gw} vs {w}");
        }
        let sum: f64 = got.query.terms.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn rm3_with_varied_parameters_matches_oracle() {
    let params = Bm25Params { k1: 1.2, b: 0.75 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let docs = random_corpus(&mut rng, 50, VOCAB);
    let index = build_index(&docs);
    for (fb_docs, fb_terms, orig_weight) in
        [(1, 1, 0.0), (5, 3, 0.3), (10, 100, 0.9), (50, 5, 0.5)]
    {
        let rm3 = Rm3Params {
            fb_docs,
            fb_terms,
            orig_weight,
        };
        let query = vec!["alpha".to_string(), "beta".to_string()];
        let expected = brute_force_rm3(&docs, &query, &rm3, &params);
        let got = index.rm3_expand(&query, &rm3, &params).unwrap();
        for (t, w) in &expected {
            let gw = got.query.terms.get(t).copied().unwrap_or(f64::NAN);
            assert!(
                (gw - w).abs() < 1e-9,
                "fb_docs={fb_docs} fb_terms={fb_terms} ow={orig_weight} term {t}: {gw} vs {w}"
            );
        }
    }
}

#[test]
fn adding_zero_overlap_document_preserves_relative_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let docs = random_corpus(&mut rng, 30, VOCAB);
    let index = build_index(&docs);
    let params = Bm25Params::default();
    let query = vec!["alpha".to_string(), "gamma".to_string()];
    let before = index.bm25_search(&query, 30, &params).unwrap();

    // New document made entirely of out-of-query vocabulary.
    let mut extended = docs.clone();
    extended.push(("zzz".into(), vec!["omega".into(), "psi".into()]));
    let index2 = build_index(&extended);
    let after = index2.bm25_search(&query, 31, &params).unwrap();

    let order_before: Vec<&str> = before.doc_ids().collect();
    let order_after: Vec<&str> = after.doc_ids().filter(|d| *d != "zzz").collect();
    assert_eq!(order_before, order_after);
}

#[test]
fn repeated_search_on_fixed_index_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let docs = random_corpus(&mut rng, 50, VOCAB);
    let index = build_index(&docs);
    let params = Bm25Params::default();
    let query = vec!["delta".to_string(), "eta".to_string()];
    let a = index.bm25_search(&query, 20, &params).unwrap();
    let b = index.bm25_search(&query, 20, &params).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scifact_scale_fixture_builds_with_full_count() {
    let n = 5_183;
    let docs: Vec<Document> = (0..n)
        .map(|i| Document {
            doc_id: format!("doc{i:05}"),
            text: format!(
                "{} {} study results {}",
                VOCAB[i % VOCAB.len()],
                VOCAB[(i / VOCAB.len()) % VOCAB.len()],
                i % 97
            ),
            title: None,
        })
        .collect();
    let corpus = Corpus::from_documents(docs).unwrap();
    assert_eq!(corpus.len(), n);
    let index = InvertedIndex::build(&corpus, &Analyzer::default()).unwrap();
    assert_eq!(index.doc_count(), n);
}

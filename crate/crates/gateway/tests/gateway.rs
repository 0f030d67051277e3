//! Gateway behavior: caching, audit, retries, and the decoding contract.

use std::sync::Arc;

use querylab_gateway::{
    ChatRequest, DecodingConfig, Gateway, GatewayError, MockProvider, RecordingStub, RequestTag,
    RetryPolicy,
};

fn request(prompt: &str, seed: u64) -> ChatRequest {
    ChatRequest::from_prompt(
        prompt,
        DecodingConfig::new("mock-1", 0.8).with_seed(seed),
        RequestTag::Keywords,
    )
}

#[test]
fn cache_hit_issues_zero_provider_calls() {
    let dir = tempfile::tempdir().unwrap();
    let stub = Arc::new(RecordingStub::constant("alpha, beta"));
    let gateway = Gateway::new(stub.clone()).with_cache_dir(dir.path());
    let req = request("expand this", 1);

    let first = gateway.cached_complete(&req).unwrap();
    assert!(!first.cached);
    assert_eq!(stub.call_count(), 1);

    let second = gateway.cached_complete(&req).unwrap();
    assert!(second.cached);
    assert_eq!(second.text, first.text);
    assert_eq!(stub.call_count(), 1, "hit must not reach the provider");
    assert_eq!(gateway.provider_calls(), 1);
    assert_eq!(gateway.gateway_calls(), 2);
}

#[test]
fn cache_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let gateway = Gateway::new(Arc::new(MockProvider::new())).with_cache_dir(dir.path());
    let req = request("some prompt with unusual text: étude 42", 9);
    let cold = gateway.cached_complete(&req).unwrap();
    let warm = gateway.cached_complete(&req).unwrap();
    assert_eq!(cold.text, warm.text);
    assert_eq!(cold.usage, warm.usage);
    assert_eq!(cold.cache_key, warm.cache_key);
}

#[test]
fn temperature_change_produces_distinct_cache_key() {
    let base = request("p", 1);
    let mut warm = base.clone();
    warm.config.temperature = 0.7;
    assert_ne!(base.cache_key(), warm.cache_key());
}

#[test]
fn corrupt_cache_entry_is_invalidated_and_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let stub = Arc::new(RecordingStub::constant("text"));
    let gateway = Gateway::new(stub.clone()).with_cache_dir(dir.path());
    let req = request("p", 3);
    let first = gateway.cached_complete(&req).unwrap();
    let key = req.cache_key();
    let path = dir.path().join(&key[..2]).join(format!("{key}.json"));
    std::fs::write(&path, "{ corrupt").unwrap();
    let second = gateway.cached_complete(&req).unwrap();
    assert_eq!(first.text, second.text);
    assert!(!second.cached);
    assert_eq!(stub.call_count(), 2);
}

#[test]
fn mock_is_deterministic_through_the_gateway() {
    let gateway = Gateway::new(Arc::new(MockProvider::new()));
    let req = ChatRequest::from_prompt(
        "prompt P",
        DecodingConfig::new("mock-1", 1.0).with_seed(7),
        RequestTag::Passage,
    );
    let a = gateway.complete(&req).unwrap();
    let b = gateway.complete(&req).unwrap();
    assert_eq!(a.text, b.text);
}

#[test]
fn audit_log_gets_one_entry_per_call() {
    let dir = tempfile::tempdir().unwrap();
    let audit_path = dir.path().join("audit.jsonl");
    let gateway = Gateway::new(Arc::new(MockProvider::new()))
        .with_cache_dir(dir.path().join("cache"))
        .with_audit_log(&audit_path)
        .unwrap();
    gateway.cached_complete(&request("prompt one", 1)).unwrap();
    gateway.cached_complete(&request("prompt two", 1)).unwrap();

    let raw = std::fs::read_to_string(&audit_path).unwrap();
    let records: Vec<serde_json::Value> = raw
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    assert_ne!(records[0]["cache_key"], records[1]["cache_key"]);
    assert_eq!(records[0]["request"]["max_tokens"], 256);
    assert!(records[0]["ts_ms"].as_u64().unwrap() > 0);
}

#[test]
fn transient_failures_retry_then_succeed() {
    let stub = Arc::new(RecordingStub::flaky(2, "recovered"));
    let gateway = Gateway::new(stub.clone()).with_retry(RetryPolicy {
        max_attempts: 3,
        base_delay_ms: 1,
    });
    let out = gateway.complete(&request("p", 1)).unwrap();
    assert_eq!(out.text, "recovered");
    assert_eq!(stub.call_count(), 3);
}

#[test]
fn exhausted_retries_surface_transport_error() {
    let stub = Arc::new(RecordingStub::flaky(10, "never"));
    let gateway = Gateway::new(stub.clone()).with_retry(RetryPolicy {
        max_attempts: 3,
        base_delay_ms: 1,
    });
    let err = gateway.complete(&request("p", 1)).unwrap_err();
    match err {
        GatewayError::Transport { attempts, .. } => assert_eq!(attempts, 3),
        other => panic!("expected Transport, got {other:?}"),
    }
    assert_eq!(stub.call_count(), 3);
}

#[test]
fn recorded_requests_carry_the_decoding_contract() {
    let stub = Arc::new(RecordingStub::constant("x"));
    let gateway = Gateway::new(stub.clone());
    gateway.complete(&request("p1", 1)).unwrap();
    gateway.complete(&request("p2", 2)).unwrap();
    for recorded in stub.requests() {
        assert_eq!(recorded.config.max_tokens, 256);
        assert!(!recorded.config.max_tokens_overridden);
    }
}

//! Exact dense and sparse-impact retrieval over externally produced
//! representations.
//!
//! Neural encoders stay outside this toolkit: document vectors arrive via a
//! sidecar file (`doc_id<TAB>f1,f2,...`), sparse impact vectors via JSONL
//! (`{"doc_id": "...", "impacts": {"term": w}}`), and query embeddings either
//! from a sidecar or an OpenAI-compatible embeddings endpoint. All search is
//! exhaustive — no approximation — so results equal brute-force scoring by
//! construction and ties break by ascending `doc_id`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ranked::RankedList;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("dimension mismatch: store dim {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("invalid query: {0}")]
    BadQuery(String),
    #[error("cosine similarity requires nonzero norms ({0})")]
    ZeroNorm(String),
    #[error("embedding transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("embedding protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Dot,
    Cosine,
}

/// Dense document vectors with exact top-k search.
#[derive(Debug, Clone)]
pub struct DenseVectorStore {
    dim: usize,
    doc_ids: Vec<String>,
    vectors: Vec<Vec<f32>>,
    similarity: Similarity,
}

impl DenseVectorStore {
    pub fn new(similarity: Similarity, dim: usize) -> Self {
        DenseVectorStore {
            dim,
            doc_ids: Vec::new(),
            vectors: Vec::new(),
            similarity,
        }
    }

    /// Load from a sidecar file of `doc_id<TAB>f1,f2,...` lines.
    pub fn load(path: &Path, similarity: Similarity) -> Result<Self, VectorError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| VectorError::Io {
            path: display.clone(),
            source,
        })?;
        let mut store: Option<DenseVectorStore> = None;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| VectorError::Io {
                path: display.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let (id, rest) = line.split_once('\t').ok_or_else(|| VectorError::Parse {
                path: display.clone(),
                line: line_no,
                message: "expected doc_id<TAB>f1,f2,...".to_string(),
            })?;
            let vec: Vec<f32> = rest
                .split(',')
                .map(|v| v.trim().parse::<f32>())
                .collect::<Result<_, _>>()
                .map_err(|e| VectorError::Parse {
                    path: display.clone(),
                    line: line_no,
                    message: e.to_string(),
                })?;
            let store = store.get_or_insert_with(|| DenseVectorStore::new(similarity, vec.len()));
            store
                .insert(id.to_string(), vec)
                .map_err(|e| VectorError::Parse {
                    path: display.clone(),
                    line: line_no,
                    message: e.to_string(),
                })?;
        }
        store.ok_or_else(|| VectorError::Parse {
            path: display,
            line: 0,
            message: "empty vector sidecar".to_string(),
        })
    }

    pub fn insert(&mut self, doc_id: String, vector: Vec<f32>) -> Result<(), VectorError> {
        if vector.len() != self.dim {
            return Err(VectorError::DimMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.similarity == Similarity::Cosine && norm(&vector) == 0.0 {
            return Err(VectorError::ZeroNorm(format!("document {doc_id}")));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(VectorError::BadQuery(format!(
                "non-finite component in document {doc_id}"
            )));
        }
        self.doc_ids.push(doc_id);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    /// Exact top-k by the store's similarity. Errors if `query` has the wrong
    /// dimension, or a zero norm under cosine.
    pub fn search(&self, query: &[f32], k: usize) -> Result<RankedList, VectorError> {
        if query.len() != self.dim {
            return Err(VectorError::DimMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let qnorm = norm(query);
        if self.similarity == Similarity::Cosine && qnorm == 0.0 {
            return Err(VectorError::ZeroNorm("query".to_string()));
        }
        let scored: Vec<(String, f64)> = self
            .doc_ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| {
                let score = match self.similarity {
                    Similarity::Dot => dot(query, v),
                    Similarity::Cosine => dot(query, v) / (qnorm * norm(v)),
                };
                (id.clone(), score)
            })
            .collect();
        Ok(RankedList::from_scores(scored, k))
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum()
}

fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

/// Sparse term-impact vectors with exact dot-product search.
#[derive(Debug, Clone, Default)]
pub struct ImpactVectorStore {
    impacts: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ImpactVectorStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load from JSONL lines of `{"doc_id": "...", "impacts": {"term": w}}`.
    pub fn load(path: &Path) -> Result<Self, VectorError> {
        #[derive(Deserialize)]
        struct Record {
            doc_id: String,
            impacts: BTreeMap<String, f64>,
        }
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| VectorError::Io {
            path: display.clone(),
            source,
        })?;
        let mut store = ImpactVectorStore::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| VectorError::Io {
                path: display.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| VectorError::Parse {
                path: display.clone(),
                line: line_no,
                message: e.to_string(),
            })?;
            store
                .insert(rec.doc_id, rec.impacts)
                .map_err(|e| VectorError::Parse {
                    path: display.clone(),
                    line: line_no,
                    message: e.to_string(),
                })?;
        }
        Ok(store)
    }

    pub fn insert(
        &mut self,
        doc_id: String,
        impacts: BTreeMap<String, f64>,
    ) -> Result<(), VectorError> {
        if impacts.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(VectorError::BadQuery(format!(
                "impacts for {doc_id} must be finite and non-negative"
            )));
        }
        self.impacts.insert(doc_id, impacts);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.impacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impacts.is_empty()
    }

    /// Exact top-k by `score(d) = Σ_t q(t) · d(t)`. Documents sharing no
    /// positively weighted term with the query are excluded.
    pub fn search(
        &self,
        query_impacts: &BTreeMap<String, f64>,
        k: usize,
    ) -> Result<RankedList, VectorError> {
        if !query_impacts.values().any(|w| *w > 0.0) {
            return Err(VectorError::BadQuery(
                "query impacts must contain at least one positive weight".to_string(),
            ));
        }
        let mut scored = Vec::new();
        for (doc_id, doc_impacts) in &self.impacts {
            let mut score = 0.0;
            let mut overlap = false;
            for (term, qw) in query_impacts {
                if *qw <= 0.0 {
                    continue;
                }
                if let Some(dw) = doc_impacts.get(term) {
                    overlap = true;
                    score += qw * dw;
                }
            }
            if overlap {
                scored.push((doc_id.clone(), score));
            }
        }
        Ok(RankedList::from_scores(scored, k))
    }
}

/// Produces query/document embeddings. Implementations must return vectors
/// of the declared dimension for every input.
pub trait Embedder: Send + Sync {
    fn model(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f32>, VectorError>;
}

/// Deterministic offline embedder: hashes the text into a fixed unit vector.
///
/// Identical `(model, text)` pairs always map to the same vector, which makes
/// dense retrieval runs reproducible without a live encoder.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    model: String,
    dim: usize,
}

impl HashEmbedder {
    pub fn new(model: impl Into<String>, dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        HashEmbedder {
            model: model.into(),
            dim,
        }
    }
}

impl Embedder for HashEmbedder {
    fn model(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, VectorError> {
        use rand::prelude::*;
        let mut hasher = Sha256::new();
        hasher.update(self.model.as_bytes());
        hasher.update([0x1f]);
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let seed: [u8; 32] = digest.into();
        let mut rng = rand_chacha::ChaCha8Rng::from_seed(seed);
        let mut v: Vec<f32> = (0..self.dim)
            .map(|_| rng.random_range(-1.0f32..1.0f32))
            .collect();
        let n = norm(&v);
        if n == 0.0 {
            // Astronomically unlikely; keep the unit-norm contract anyway.
            v[0] = 1.0;
        } else {
            for x in &mut v {
                *x = (f64::from(*x) / n) as f32;
            }
        }
        Ok(v)
    }
}

/// Embedder backed by an OpenAI-compatible `/embeddings` endpoint.
pub struct HttpEmbedder {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    dim: usize,
    max_attempts: u32,
    backoff_ms: u64,
}

impl HttpEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        dim: usize,
    ) -> Self {
        HttpEmbedder {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            dim,
            max_attempts: 3,
            backoff_ms: 250,
        }
    }
}

impl Embedder for HttpEmbedder {
    fn model(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, VectorError> {
        let url = format!("{}/embeddings", self.endpoint.trim_end_matches('/'));
        let body = serde_json::json!({ "model": self.model, "input": text });
        let mut last_err = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(
                    self.backoff_ms << (attempt - 1),
                ));
            }
            let mut req = ureq::post(&url);
            if let Some(key) = &self.api_key {
                req = req.set("Authorization", &format!("Bearer {key}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => {
                    let json: serde_json::Value = resp
                        .into_json()
                        .map_err(|e| VectorError::Protocol(e.to_string()))?;
                    let vec = json["data"][0]["embedding"]
                        .as_array()
                        .ok_or_else(|| {
                            VectorError::Protocol("response missing data[0].embedding".to_string())
                        })?
                        .iter()
                        .map(|v| v.as_f64().unwrap_or(f64::NAN) as f32)
                        .collect::<Vec<f32>>();
                    if vec.len() != self.dim {
                        return Err(VectorError::Protocol(format!(
                            "endpoint returned dim {}, expected {}",
                            vec.len(),
                            self.dim
                        )));
                    }
                    return Ok(vec);
                }
                Err(ureq::Error::Status(code, resp)) if code < 500 && code != 429 => {
                    let msg = resp.into_string().unwrap_or_default();
                    return Err(VectorError::Protocol(format!("http {code}: {msg}")));
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(VectorError::Transport {
            attempts: self.max_attempts,
            message: last_err,
        })
    }
}

/// Caching wrapper: results are stored on disk keyed by a digest of
/// `(model, text)`, so identical requests never hit the inner embedder twice.
/// Warm and cold caches produce bit-identical vectors.
pub struct CachedEmbedder<E: Embedder> {
    inner: E,
    cache_dir: PathBuf,
    inner_calls: AtomicU64,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, cache_dir: impl Into<PathBuf>) -> Self {
        CachedEmbedder {
            inner,
            cache_dir: cache_dir.into(),
            inner_calls: AtomicU64::new(0),
        }
    }

    /// Number of calls that reached the inner embedder (cache misses).
    pub fn inner_calls(&self) -> u64 {
        self.inner_calls.load(Ordering::SeqCst)
    }

    pub fn cache_key(model: &str, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model.as_bytes());
        hasher.update([0x1f]);
        hasher.update(text.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        self.cache_dir.join(format!("{key}.json"))
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn model(&self) -> &str {
        self.inner.model()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, VectorError> {
        let key = Self::cache_key(self.inner.model(), text);
        let path = self.cache_path(&key);
        if let Ok(raw) = std::fs::read_to_string(&path) {
            match serde_json::from_str::<Vec<f32>>(&raw) {
                Ok(v) if v.len() == self.dim() => return Ok(v),
                _ => {
                    log::warn!("invalidating corrupt embedding cache entry {key}");
                    let _ = std::fs::remove_file(&path);
                }
            }
        }
        self.inner_calls.fetch_add(1, Ordering::SeqCst);
        let v = self.inner.embed(text)?;
        let io_err = |source| VectorError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(&self.cache_dir).map_err(io_err)?;
        // Atomic publish so concurrent writers of the same key cannot
        // interleave; last writer wins with an identical value.
        let tmp = self.cache_dir.join(format!(".{key}.tmp.{}", std::process::id()));
        std::fs::write(&tmp, serde_json::to_string(&v).expect("vec serializes")).map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(v)
    }
}

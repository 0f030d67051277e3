//! The gateway itself: retries, audit logging, and the completion cache.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::{
    ChatRequest, Completion, DecodingConfig, GatewayError, Provider, ProviderCompletion,
    ProviderError, Role, Usage,
};

/// Bounded exponential backoff for transient transport failures.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 250,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    text: String,
    usage: Usage,
    provider: String,
}

pub struct Gateway {
    provider: Arc<dyn Provider>,
    cache_dir: Option<PathBuf>,
    audit: Option<Mutex<File>>,
    retry: RetryPolicy,
    provider_calls: AtomicU64,
    gateway_calls: AtomicU64,
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        Gateway {
            provider,
            cache_dir: None,
            audit: None,
            retry: RetryPolicy::default(),
            provider_calls: AtomicU64::new(0),
            gateway_calls: AtomicU64::new(0),
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Append audit records (JSONL, one per call) to the given file.
    pub fn with_audit_log(mut self, path: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| GatewayError::Audit(e.to_string()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| GatewayError::Audit(e.to_string()))?;
        self.audit = Some(Mutex::new(file));
        Ok(self)
    }

    /// Calls that reached the provider (cache misses and uncached calls).
    pub fn provider_calls(&self) -> u64 {
        self.provider_calls.load(Ordering::SeqCst)
    }

    /// All completions served, cached or not.
    pub fn gateway_calls(&self) -> u64 {
        self.gateway_calls.load(Ordering::SeqCst)
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    /// Complete without consulting the cache. Transient transport failures
    /// retry with exponential backoff up to the policy bound; provider
    /// rejections surface immediately with the provider's message.
    pub fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        validate(request)?;
        self.gateway_calls.fetch_add(1, Ordering::SeqCst);
        let completion = self.call_provider(request)?;
        let completion = Completion {
            text: completion.text,
            usage: completion.usage,
            provider: self.provider.name().to_string(),
            cached: false,
            cache_key: request.cache_key(),
        };
        self.audit_record(request, &completion);
        Ok(completion)
    }

    /// Complete through the on-disk cache. A hit returns the stored
    /// completion with `cached = true` and no provider call; a corrupt entry
    /// is invalidated with a warning and recomputed.
    pub fn cached_complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let Some(cache_dir) = &self.cache_dir else {
            return self.complete(request);
        };
        validate(request)?;
        self.gateway_calls.fetch_add(1, Ordering::SeqCst);
        let key = request.cache_key();
        let path = cache_dir.join(&key[..2]).join(format!("{key}.json"));
        if let Ok(raw) = std::fs::read_to_string(&path) {
            match serde_json::from_str::<CacheEntry>(&raw) {
                Ok(entry) => {
                    let completion = Completion {
                        text: entry.text,
                        usage: entry.usage,
                        provider: entry.provider,
                        cached: true,
                        cache_key: key,
                    };
                    self.audit_record(request, &completion);
                    return Ok(completion);
                }
                Err(e) => {
                    log::warn!("invalidating corrupt cache entry {key}: {e}");
                    let _ = std::fs::remove_file(&path);
                }
            }
        }
        let fresh = self.call_provider(request)?;
        let entry = CacheEntry {
            text: fresh.text,
            usage: fresh.usage,
            provider: self.provider.name().to_string(),
        };
        let io_err = |source| GatewayError::CacheIo {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(path.parent().expect("cache path has parent")).map_err(io_err)?;
        // Atomic publish; racing writers of one key leave a single value.
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        std::fs::write(&tmp, serde_json::to_string(&entry).expect("entry serializes"))
            .map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        let completion = Completion {
            text: entry.text,
            usage: entry.usage,
            provider: entry.provider,
            cached: false,
            cache_key: key,
        };
        self.audit_record(request, &completion);
        Ok(completion)
    }

    fn call_provider(&self, request: &ChatRequest) -> Result<ProviderCompletion, GatewayError> {
        if request.config.max_tokens != DecodingConfig::DEFAULT_MAX_TOKENS {
            log::info!(
                "decoding contract override: max_tokens={} (default {}) for model {}",
                request.config.max_tokens,
                DecodingConfig::DEFAULT_MAX_TOKENS,
                request.config.model
            );
        }
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(
                    self.retry.base_delay_ms << (attempt - 1),
                ));
            }
            self.provider_calls.fetch_add(1, Ordering::SeqCst);
            match self.provider.complete(request) {
                Ok(c) => return Ok(c),
                Err(ProviderError::Protocol(msg)) => return Err(GatewayError::Protocol(msg)),
                Err(ProviderError::Transient(msg)) => {
                    log::warn!(
                        "transient provider failure (attempt {}/{}): {msg}",
                        attempt + 1,
                        self.retry.max_attempts
                    );
                    last = msg;
                }
            }
        }
        Err(GatewayError::Transport {
            attempts: self.retry.max_attempts,
            message: last,
        })
    }

    fn audit_record(&self, request: &ChatRequest, completion: &Completion) {
        let Some(audit) = &self.audit else { return };
        let ts_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let record = serde_json::json!({
            "ts_ms": ts_ms,
            "provider": completion.provider,
            "cache_key": completion.cache_key,
            "cached": completion.cached,
            "tag": request.tag,
            "request": {
                "model": request.config.model,
                "messages": request.messages,
                "temperature": request.config.temperature,
                "max_tokens": request.config.max_tokens,
                "max_tokens_overridden": request.config.max_tokens_overridden,
                "seed": request.config.seed,
            },
            "response": {
                "text": completion.text,
                "prompt_tokens": completion.usage.prompt_tokens,
                "completion_tokens": completion.usage.completion_tokens,
            },
        });
        let mut file = audit.lock().expect("audit lock");
        if let Err(e) = writeln!(file, "{record}") {
            log::warn!("audit log write failed: {e}");
        }
    }
}

fn validate(request: &ChatRequest) -> Result<(), GatewayError> {
    if !request.messages.iter().any(|m| m.role == Role::User) {
        return Err(GatewayError::NoUserMessage);
    }
    Ok(())
}

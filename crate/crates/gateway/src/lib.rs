//! Single choke point for all LLM calls.
//!
//! Every chat completion in the toolkit flows through [`Gateway`], which
//! enforces the shared decoding contract (`max_tokens = 256` unless an
//! override is explicitly configured and logged), appends one audit record
//! per call, retries transient transport failures with exponential backoff,
//! and caches completions on disk keyed by a digest of
//! `(model, messages, temperature, max_tokens, seed)`.
//!
//! Providers implement [`Provider`]; three ship here:
//! - [`OpenAiProvider`] — any OpenAI-compatible `/chat/completions` endpoint
//! - [`MockProvider`] — deterministic offline completions, a pure function of
//!   the prompt digest and seed, always structurally valid for the request tag
//! - [`RecordingStub`] — scripted responses plus full request capture, used
//!   to verify call counts and the wire-level decoding contract in tests

mod gateway;
mod mock;
mod provider;
mod stub;

pub use gateway::{Gateway, RetryPolicy};
pub use mock::MockProvider;
pub use provider::{chat_body, OpenAiProvider, Provider, ProviderCompletion, ProviderError};
pub use stub::RecordingStub;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("request must contain at least one user message")]
    NoUserMessage,
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider rejected request: {0}")]
    Protocol(String),
    #[error("cache io error on {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("audit log error: {0}")]
    Audit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// The generation configuration shared by every method and model in an
/// experiment. `max_tokens` defaults to 256; overriding it flips
/// `max_tokens_overridden` so the gateway can log the deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_tokens_overridden: bool,
}

impl DecodingConfig {
    pub const DEFAULT_MAX_TOKENS: u32 = 256;

    pub fn new(model: impl Into<String>, temperature: f64) -> Self {
        assert!(temperature >= 0.0, "temperature must be non-negative");
        DecodingConfig {
            model: model.into(),
            temperature,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
            seed: None,
            max_tokens_overridden: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        assert!(temperature >= 0.0, "temperature must be non-negative");
        self.temperature = temperature;
        self
    }

    /// Override the output-token budget. The gateway logs every request that
    /// deviates from the 256-token default.
    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self.max_tokens_overridden = max_tokens != Self::DEFAULT_MAX_TOKENS;
        self
    }
}

/// What kind of content the caller expects back. The mock provider uses this
/// to emit structurally valid output; it never reaches the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestTag {
    Keywords,
    Passage,
    SubQuestions,
    Answer,
    Rewrite,
    FilterIndices,
    Judgment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub config: DecodingConfig,
    pub tag: RequestTag,
}

impl ChatRequest {
    pub fn new(
        messages: Vec<Message>,
        config: DecodingConfig,
        tag: RequestTag,
    ) -> Result<Self, GatewayError> {
        if !messages.iter().any(|m| m.role == Role::User) {
            return Err(GatewayError::NoUserMessage);
        }
        Ok(ChatRequest {
            messages,
            config,
            tag,
        })
    }

    /// Single-user-message request, the common case.
    pub fn from_prompt(
        prompt: impl Into<String>,
        config: DecodingConfig,
        tag: RequestTag,
    ) -> Self {
        ChatRequest {
            messages: vec![Message::user(prompt)],
            config,
            tag,
        }
    }

    /// Content-addressed cache key: a digest of the model, messages,
    /// temperature, max_tokens, and seed. Anything else (tag, provider) is
    /// deliberately excluded.
    pub fn cache_key(&self) -> String {
        let canonical = serde_json::json!({
            "model": self.config.model,
            "messages": self.messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "seed": self.config.seed,
        });
        let mut hasher = Sha256::new();
        hasher.update(canonical.to_string().as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
    pub provider: String,
    pub cached: bool,
    /// Cache key of the request that produced this completion.
    pub cache_key: String,
}

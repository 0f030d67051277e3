//! Provider abstraction and the OpenAI-compatible HTTP implementation.

use serde::{Deserialize, Serialize};

use crate::{ChatRequest, Role, Usage};

/// Provider-level failure classification. Transient errors are retried by
/// the gateway; protocol errors surface immediately with the provider's
/// message attached.
#[derive(Debug, Clone)]
pub enum ProviderError {
    Transient(String),
    Protocol(String),
}

impl std::fmt::Display for ProviderError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProviderError::Transient(m) => write!(f, "transient: {m}"),
            ProviderError::Protocol(m) => write!(f, "protocol: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderCompletion {
    pub text: String,
    pub usage: Usage,
}

/// A chat-completion backend. Implementations must be thread-safe; the
/// gateway may issue calls from multiple threads.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<ProviderCompletion, ProviderError>;
}

/// Request body in the OpenAI chat-completions wire shape. Kept as a pure
/// function so tests can assert exactly what goes on the wire.
pub fn chat_body(request: &ChatRequest) -> serde_json::Value {
    let messages: Vec<serde_json::Value> = request
        .messages
        .iter()
        .map(|m| {
            serde_json::json!({
                "role": match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                },
                "content": m.content,
            })
        })
        .collect();
    let mut body = serde_json::json!({
        "model": request.config.model,
        "messages": messages,
        "temperature": request.config.temperature,
        "max_tokens": request.config.max_tokens,
    });
    if let Some(seed) = request.config.seed {
        body["seed"] = serde_json::json!(seed);
    }
    body
}

/// Client for any OpenAI-compatible chat-completions endpoint. Endpoint and
/// key come from the environment by default (`OPENAI_BASE_URL`,
/// `OPENAI_API_KEY`).
pub struct OpenAiProvider {
    endpoint: String,
    api_key: Option<String>,
    timeout: std::time::Duration,
}

impl OpenAiProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        OpenAiProvider {
            endpoint: endpoint.into(),
            api_key,
            timeout: std::time::Duration::from_secs(120),
        }
    }

    /// Read endpoint and key from environment variables, with custom names
    /// supported so multiple providers can coexist in one config.
    pub fn from_env(endpoint_var: &str, key_var: &str) -> Result<Self, String> {
        let endpoint = std::env::var(endpoint_var)
            .unwrap_or_else(|_| "https://api.openai.com/v1".to_string());
        let api_key = std::env::var(key_var).ok();
        Ok(OpenAiProvider::new(endpoint, api_key))
    }
}

impl Provider for OpenAiProvider {
    fn name(&self) -> &str {
        "openai-compatible"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ProviderCompletion, ProviderError> {
        let url = format!(
            "{}/chat/completions",
            self.endpoint.trim_end_matches('/')
        );
        let mut req = ureq::post(&url).timeout(self.timeout);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(chat_body(request)) {
            Ok(resp) => {
                let json: serde_json::Value = resp
                    .into_json()
                    .map_err(|e| ProviderError::Protocol(format!("bad response body: {e}")))?;
                let text = json["choices"][0]["message"]["content"]
                    .as_str()
                    .ok_or_else(|| {
                        ProviderError::Protocol(
                            "response missing choices[0].message.content".to_string(),
                        )
                    })?
                    .to_string();
                let usage = Usage {
                    prompt_tokens: json["usage"]["prompt_tokens"].as_u64().unwrap_or(0) as u32,
                    completion_tokens: json["usage"]["completion_tokens"].as_u64().unwrap_or(0)
                        as u32,
                };
                Ok(ProviderCompletion { text, usage })
            }
            // Rate limits and server-side failures are worth retrying.
            Err(ureq::Error::Status(code, resp)) if code >= 500 || code == 429 => Err(
                ProviderError::Transient(format!("http {code}: {}", body_snippet(resp))),
            ),
            Err(ureq::Error::Status(code, resp)) => Err(ProviderError::Protocol(format!(
                "http {code}: {}",
                body_snippet(resp)
            ))),
            Err(e) => Err(ProviderError::Transient(e.to_string())),
        }
    }
}

fn body_snippet(resp: ureq::Response) -> String {
    let mut body = resp.into_string().unwrap_or_default();
    body.truncate(500);
    body
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{DecodingConfig, RequestTag};

    #[test]
    fn wire_body_carries_decoding_contract() {
        let req = ChatRequest::from_prompt(
            "hello",
            DecodingConfig::new("gpt-x", 1.0).with_seed(7),
            RequestTag::Passage,
        );
        let body = chat_body(&req);
        assert_eq!(body["max_tokens"], 256);
        assert_eq!(body["temperature"], 1.0);
        assert_eq!(body["seed"], 7);
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hello");
        // The tag is toolkit metadata and must not leak onto the wire.
        assert!(body.get("tag").is_none());
    }

    #[test]
    fn wire_body_omits_seed_when_unset() {
        let req = ChatRequest::from_prompt("p", DecodingConfig::new("m", 0.0), RequestTag::Answer);
        assert!(chat_body(&req).get("seed").is_none());
    }
}

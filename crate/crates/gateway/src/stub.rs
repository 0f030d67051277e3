//! Recording stub provider for tests: captures every request so call counts
//! and the decoding contract can be asserted, and replays scripted responses.

use std::sync::Mutex;

use crate::{ChatRequest, Provider, ProviderCompletion, ProviderError, Usage};

type ResponseFn = Box<dyn Fn(&ChatRequest, usize) -> Result<String, ProviderError> + Send + Sync>;

pub struct RecordingStub {
    respond: ResponseFn,
    recorded: Mutex<Vec<ChatRequest>>,
}

impl RecordingStub {
    /// Always return the same text.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::with_fn(move |_, _| Ok(text.clone()))
    }

    /// Cycle through the given responses by call index.
    pub fn cycling(responses: Vec<String>) -> Self {
        assert!(!responses.is_empty(), "need at least one response");
        Self::with_fn(move |_, i| Ok(responses[i % responses.len()].clone()))
    }

    /// Full control: the closure sees the request and the 0-based call index.
    pub fn with_fn<F>(f: F) -> Self
    where
        F: Fn(&ChatRequest, usize) -> Result<String, ProviderError> + Send + Sync + 'static,
    {
        RecordingStub {
            respond: Box::new(f),
            recorded: Mutex::new(Vec::new()),
        }
    }

    /// Fail with a transient error for the first `failures` calls, then
    /// return `text`. Exercises the gateway retry path.
    pub fn flaky(failures: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        Self::with_fn(move |_, i| {
            if i < failures {
                Err(ProviderError::Transient(format!("injected failure {i}")))
            } else {
                Ok(text.clone())
            }
        })
    }

    pub fn call_count(&self) -> usize {
        self.recorded.lock().expect("stub lock").len()
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.recorded.lock().expect("stub lock").clone()
    }
}

impl Provider for RecordingStub {
    fn name(&self) -> &str {
        "recording-stub"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ProviderCompletion, ProviderError> {
        let mut recorded = self.recorded.lock().expect("stub lock");
        let index = recorded.len();
        recorded.push(request.clone());
        drop(recorded);
        let text = (self.respond)(request, index)?;
        Ok(ProviderCompletion {
            usage: Usage {
                prompt_tokens: request
                    .messages
                    .iter()
                    .map(|m| m.content.split_whitespace().count() as u32)
                    .sum(),
                completion_tokens: text.split_whitespace().count() as u32,
            },
            text,
        })
    }
}

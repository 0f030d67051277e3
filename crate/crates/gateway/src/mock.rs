//! Deterministic offline provider.
//!
//! Output is a pure function of `(prompt digest, seed)`: the request's
//! message contents are hashed together with the decoding seed to seed a
//! ChaCha stream, and text is drawn from per-tag template pools. Every tag
//! produces output the corresponding parser accepts, so full experiment
//! grids run offline with zero parse failures.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::{ChatRequest, Provider, ProviderCompletion, ProviderError, RequestTag, Usage};

const TOPIC_WORDS: &[&str] = &[
    "retrieval", "ranking", "evidence", "corpus", "semantic", "lexical", "neural", "signal",
    "protein", "climate", "market", "policy", "archive", "cohort", "pathway", "spectrum",
    "gradient", "latency", "genome", "sensor", "voltage", "habitat", "tariff", "antigen",
    "recall", "precision", "embedding", "feedback", "topical", "relevance",
];

const CONNECTORS: &[&str] = &["improves", "explains", "measures", "predicts", "summarizes"];

#[derive(Debug, Default, Clone)]
pub struct MockProvider;

impl MockProvider {
    pub fn new() -> Self {
        MockProvider
    }

    fn rng_for(request: &ChatRequest) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        for m in &request.messages {
            hasher.update(m.content.as_bytes());
            hasher.update([0x1e]);
        }
        hasher.update(request.config.seed.unwrap_or(0).to_le_bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(seed)
    }

    fn words(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
        (0..n).map(|_| *TOPIC_WORDS.choose(rng).unwrap()).collect()
    }

    fn sentence(rng: &mut ChaCha8Rng) -> String {
        let subject = Self::words(rng, 2).join(" ");
        let verb = *CONNECTORS.choose(rng).unwrap();
        let object_len = rng.random_range(2..=4);
        let object = Self::words(rng, object_len).join(" ");
        format!("The {subject} {verb} {object}.")
    }
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ProviderCompletion, ProviderError> {
        let mut rng = Self::rng_for(request);
        let text = match request.tag {
            RequestTag::Keywords => {
                let n = rng.random_range(4..=7);
                Self::words(&mut rng, n).join(", ")
            }
            RequestTag::Passage => {
                let n = rng.random_range(2..=3);
                (0..n)
                    .map(|_| Self::sentence(&mut rng))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            RequestTag::Answer | RequestTag::Rewrite => Self::sentence(&mut rng),
            RequestTag::SubQuestions => (0..3)
                .map(|_| {
                    format!(
                        "What is the role of {} in {}?",
                        TOPIC_WORDS.choose(&mut rng).unwrap(),
                        TOPIC_WORDS.choose(&mut rng).unwrap()
                    )
                })
                .collect::<Vec<_>>()
                .join("\n"),
            RequestTag::FilterIndices => {
                // Non-empty subset of {1, 2, 3}, one index per line.
                let keep: Vec<String> = (1..=3)
                    .filter(|_| rng.random_bool(0.6))
                    .map(|i| i.to_string())
                    .collect();
                if keep.is_empty() {
                    "2".to_string()
                } else {
                    keep.join("\n")
                }
            }
            // One relevant sentence per judged document.
            RequestTag::Judgment => "1".to_string(),
        };

        // Honor the output-token budget the way a real provider would.
        let words: Vec<&str> = text.split_whitespace().collect();
        let limit = request.config.max_tokens as usize;
        let text = if words.len() > limit {
            words[..limit].join(" ")
        } else {
            text
        };
        let prompt_tokens: usize = request
            .messages
            .iter()
            .map(|m| m.content.split_whitespace().count())
            .sum();
        Ok(ProviderCompletion {
            usage: Usage {
                prompt_tokens: prompt_tokens as u32,
                completion_tokens: text.split_whitespace().count() as u32,
            },
            text,
        })
    }
}

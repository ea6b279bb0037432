//! Model backends: a chat-completion HTTP client and a deterministic mock,
//! both behind one endpoint trait, with text-answer and output-embedding
//! retrieval.

mod http;
mod mock;
pub mod wire;

pub use http::HttpEndpoint;
pub use mock::MockEndpoint;
pub use wire::{Capabilities, ChatRequest, ChatResponse};

use crate::mat::Mat;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::sync::OnceLock;
use thiserror::Error;
use wire::ChatMessage;

/// Where output embeddings are taken from inside the backing model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionPosition {
    /// Hidden states after the model's final normalization layer (default).
    AfterFinalNorm,
    /// Hidden states after the output projection.
    AfterOutputProjection,
}

impl ExtractionPosition {
    pub fn wire_name(self) -> &'static str {
        match self {
            ExtractionPosition::AfterFinalNorm => "after-final-norm",
            ExtractionPosition::AfterOutputProjection => "after-output-projection",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_answer_tokens: usize,
    pub temperature: f64,
    pub extraction_position: ExtractionPosition,
    /// Whitespace-token cap applied to captions at ingestion.
    pub caption_token_cap: usize,
    /// Upper bound on concurrent in-flight requests.
    pub max_in_flight: usize,
    /// Bearer token; never serialized, populated from the environment.
    #[serde(skip)]
    pub auth_token: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            model: "default".into(),
            timeout_secs: 30.0,
            max_retries: 2,
            max_answer_tokens: 8,
            temperature: 0.0,
            extraction_position: ExtractionPosition::AfterFinalNorm,
            caption_token_cap: 77,
            max_in_flight: 4,
            auth_token: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(BackendError::InvalidConfig("timeout must be positive".into()));
        }
        if self.max_answer_tokens < 1 {
            return Err(BackendError::InvalidConfig(
                "max answer tokens must be at least 1".into(),
            ));
        }
        if self.temperature < 0.0 {
            return Err(BackendError::InvalidConfig(
                "temperature must be non-negative".into(),
            ));
        }
        if self.max_in_flight == 0 {
            return Err(BackendError::InvalidConfig(
                "max_in_flight must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("prompt must not be empty")]
    EmptyPrompt,
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response envelope: {0}")]
    Protocol(String),
    #[error("embedding-capable backend required")]
    EmbeddingsUnsupported,
    #[error("query span {start}..{end} out of prompt bounds (len {len})")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("no prompt tokens align with the query span")]
    SpanTokenMismatch,
    #[error("image ref not resolvable by backend: {0}")]
    ImageUnresolvable(String),
    #[error("backend rejected image {0}")]
    ImageRejected(String),
    #[error("inconsistent hidden width: expected {expected}, got {got}")]
    InconsistentWidth { expected: usize, got: usize },
    #[error("embedding pair invalid: {0}")]
    InvalidEmbedding(String),
}

impl BackendError {
    pub fn is_transport(&self) -> bool {
        matches!(self, BackendError::Transport { .. })
    }
}

/// Query embeddings `q` (L_q x D) and answer embeddings `a` (L_a x D) for
/// one frame's window prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPair {
    q: Mat,
    a: Mat,
}

impl EmbeddingPair {
    pub fn new(q: Mat, a: Mat) -> Result<Self, BackendError> {
        if q.rows() == 0 || a.rows() == 0 {
            return Err(BackendError::InvalidEmbedding(
                "sequence lengths must be at least 1".into(),
            ));
        }
        if q.cols() == 0 {
            return Err(BackendError::InvalidEmbedding("hidden width must be at least 1".into()));
        }
        if q.cols() != a.cols() {
            return Err(BackendError::InvalidEmbedding(format!(
                "query width {} differs from answer width {}",
                q.cols(),
                a.cols()
            )));
        }
        if !q.is_finite() || !a.is_finite() {
            return Err(BackendError::InvalidEmbedding("non-finite entry".into()));
        }
        Ok(EmbeddingPair { q, a })
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn query_len(&self) -> usize {
        self.q.rows()
    }

    pub fn answer_len(&self) -> usize {
        self.a.rows()
    }

    pub fn hidden_width(&self) -> usize {
        self.q.cols()
    }
}

/// A chat-completion service: either a real HTTP server or the mock.
pub trait ChatEndpoint: Send + Sync {
    fn capabilities(&self) -> Result<Capabilities, BackendError>;
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;
}

impl<T: ChatEndpoint + ?Sized> ChatEndpoint for std::sync::Arc<T> {
    fn capabilities(&self) -> Result<Capabilities, BackendError> {
        (**self).capabilities()
    }
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        (**self).chat(request)
    }
}

/// High-level client over a [`ChatEndpoint`]: retries, answer truncation,
/// span-to-token alignment, and hidden-width bookkeeping.
pub struct BackendClient {
    endpoint: Box<dyn ChatEndpoint>,
    config: BackendConfig,
    handshake: OnceLock<Capabilities>,
}

impl BackendClient {
    pub fn new(endpoint: Box<dyn ChatEndpoint>, config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        Ok(BackendClient {
            endpoint,
            config,
            handshake: OnceLock::new(),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Capabilities handshake, performed once per client.
    fn capabilities(&self) -> Result<&Capabilities, BackendError> {
        if let Some(caps) = self.handshake.get() {
            return Ok(caps);
        }
        let caps = self.with_retries(|| self.endpoint.capabilities())?;
        Ok(self.handshake.get_or_init(|| caps))
    }

    /// Backend-reported hidden width, from the handshake.
    pub fn hidden_width(&self) -> Result<Option<usize>, BackendError> {
        let caps = self.capabilities()?;
        Ok(if caps.hidden_states {
            caps.hidden_width
        } else {
            None
        })
    }

    /// Ask the model for a plain text answer.
    pub fn complete_text(&self, prompt: &str) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let request = self.base_request(vec![ChatMessage::user_text(prompt)]);
        let response = self.with_retries(|| self.endpoint.chat(&request))?;
        let answer = first_content(&response)?;
        Ok(self.truncate_answer(&answer))
    }

    /// Ask the model for an answer plus output embeddings for the query
    /// section of the prompt and for the generated answer tokens.
    pub fn complete_with_embeddings(
        &self,
        prompt: &str,
        query_span: Range<usize>,
    ) -> Result<(String, EmbeddingPair), BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        if query_span.start >= query_span.end || query_span.end > prompt.len() {
            return Err(BackendError::SpanOutOfBounds {
                start: query_span.start,
                end: query_span.end,
                len: prompt.len(),
            });
        }
        if !self.capabilities()?.hidden_states {
            return Err(BackendError::EmbeddingsUnsupported);
        }

        let mut request = self.base_request(vec![ChatMessage::user_text(prompt)]);
        request.return_hidden_states = Some(true);
        request.hidden_state_position = Some(self.config.extraction_position.wire_name().into());

        let response = self.with_retries(|| self.endpoint.chat(&request))?;
        let answer = first_content(&response)?;
        let hidden = response
            .hidden_states
            .ok_or(BackendError::EmbeddingsUnsupported)?;

        if hidden.width == 0 {
            return Err(BackendError::Protocol("hidden width of zero".into()));
        }
        if let Some(expected) = self.hidden_width()? {
            if expected != hidden.width {
                return Err(BackendError::InconsistentWidth {
                    expected,
                    got: hidden.width,
                });
            }
        }

        let mut q_rows: Vec<Vec<f64>> = Vec::new();
        for token in &hidden.prompt {
            if token.values.len() != hidden.width {
                return Err(BackendError::Protocol(format!(
                    "prompt token vector of width {} (declared {})",
                    token.values.len(),
                    hidden.width
                )));
            }
            if token.start < query_span.end && token.end > query_span.start {
                q_rows.push(token.values.clone());
            }
        }
        if q_rows.is_empty() {
            return Err(BackendError::SpanTokenMismatch);
        }

        let mut a_rows: Vec<Vec<f64>> = Vec::new();
        for token in &hidden.completion {
            if token.values.len() != hidden.width {
                return Err(BackendError::Protocol(format!(
                    "completion token vector of width {} (declared {})",
                    token.values.len(),
                    hidden.width
                )));
            }
            a_rows.push(token.values.clone());
        }
        if a_rows.is_empty() {
            return Err(BackendError::Protocol("no completion hidden states".into()));
        }

        let q = Mat::from_rows(&q_rows).expect("uniform row widths checked above");
        let a = Mat::from_rows(&a_rows).expect("uniform row widths checked above");
        Ok((self.truncate_answer(&answer), EmbeddingPair::new(q, a)?))
    }

    /// Caption one image; the answer is capped at the configured
    /// whitespace-token limit, ending at a word boundary.
    pub fn caption_image(&self, image_ref: &str, prompt: &str) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let request = self.base_request(vec![ChatMessage::user_image(image_ref, prompt)]);
        let response = self.with_retries(|| self.endpoint.chat(&request))?;
        let answer = first_line(&first_content(&response)?);
        if answer.is_empty() {
            return Err(BackendError::Protocol("empty caption".into()));
        }
        Ok(truncate_tokens(&answer, self.config.caption_token_cap))
    }

    fn base_request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_answer_tokens,
            return_hidden_states: None,
            hidden_state_position: None,
        }
    }

    fn truncate_answer(&self, answer: &str) -> String {
        truncate_tokens(&first_line(answer), self.config.max_answer_tokens)
    }

    fn with_retries<T>(
        &self,
        f: impl Fn() -> Result<T, BackendError>,
    ) -> Result<T, BackendError> {
        let mut attempt = 0u32;
        loop {
            match f() {
                Err(e) if e.is_transport() && attempt < self.config.max_retries => {
                    attempt += 1;
                }
                Err(BackendError::Transport { message, .. }) => {
                    return Err(BackendError::Transport {
                        attempts: attempt + 1,
                        message,
                    });
                }
                other => return other,
            }
        }
    }
}

fn first_content(response: &ChatResponse) -> Result<String, BackendError> {
    response
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .ok_or_else(|| BackendError::Protocol("response carries no choices".into()))
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").trim().to_string()
}

/// Keep at most `cap` whitespace tokens, rejoined with single spaces so the
/// result ends at a word boundary.
pub fn truncate_tokens(s: &str, cap: usize) -> String {
    let tokens: Vec<&str> = s.split_whitespace().collect();
    if tokens.len() <= cap {
        return tokens.join(" ");
    }
    tokens[..cap].join(" ")
}

/// Byte spans of whitespace tokens, the tokenization used by the mock.
pub(crate) fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

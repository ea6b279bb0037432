//! Chat-completion wire envelope.
//!
//! One JSON request/response shape serves both the HTTP client and the
//! in-process mock, so the envelope handling is exercised even in tests
//! that never open a socket. The optional `return_hidden_states` extension
//! carries per-token vectors with character offsets into the prompt.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_hidden_states: Option<bool>,
    /// "after-final-norm" or "after-output-projection".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_state_position: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: MessageContent,
}

impl ChatMessage {
    pub fn user_text(text: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: MessageContent::Text(text.into()),
        }
    }

    pub fn user_image(image_ref: impl Into<String>, text: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: MessageContent::Parts(vec![
                ContentPart::ImageRef {
                    image_ref: image_ref.into(),
                },
                ContentPart::Text { text: text.into() },
            ]),
        }
    }

    /// Concatenated text parts of the message.
    pub fn text(&self) -> String {
        match &self.content {
            MessageContent::Text(t) => t.clone(),
            MessageContent::Parts(parts) => parts
                .iter()
                .filter_map(|p| match p {
                    ContentPart::Text { text } => Some(text.as_str()),
                    _ => None,
                })
                .collect::<Vec<_>>()
                .join(" "),
        }
    }

    pub fn image_ref(&self) -> Option<&str> {
        match &self.content {
            MessageContent::Text(_) => None,
            MessageContent::Parts(parts) => parts.iter().find_map(|p| match p {
                ContentPart::ImageRef { image_ref } => Some(image_ref.as_str()),
                _ => None,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessageContent {
    Text(String),
    Parts(Vec<ContentPart>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    ImageRef { image_ref: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatResponse {
    pub choices: Vec<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_states: Option<HiddenStates>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        ChatResponse {
            choices: vec![Choice {
                message: ResponseMessage {
                    role: "assistant".into(),
                    content: content.into(),
                },
            }],
            hidden_states: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Choice {
    pub message: ResponseMessage,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseMessage {
    pub role: String,
    pub content: String,
}

/// Per-token vectors at the requested extraction position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HiddenStates {
    pub width: usize,
    /// One entry per prompt token, with character offsets into the prompt.
    pub prompt: Vec<PromptTokenState>,
    /// One entry per generated token, in generation order.
    pub completion: Vec<TokenState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptTokenState {
    pub start: usize,
    pub end: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenState {
    pub values: Vec<f64>,
}

/// Handshake payload from `GET /v1/capabilities`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Capabilities {
    pub hidden_states: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_width: Option<usize>,
}

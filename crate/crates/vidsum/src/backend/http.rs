//! HTTP endpoint speaking the chat-completion envelope.
//!
//! `POST {base}/v1/chat/completions` with the JSON body from [`wire`],
//! `GET {base}/v1/capabilities` for the handshake. 5xx and connection
//! errors are transport failures (retryable by the client); 4xx and
//! malformed bodies are protocol errors.

use super::wire::{self, Capabilities, ChatRequest, ChatResponse};
use super::{BackendConfig, BackendError, ChatEndpoint};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

pub struct HttpEndpoint {
    base: String,
    client: reqwest::blocking::Client,
    auth_token: Option<String>,
    in_flight: InFlight,
}

impl HttpEndpoint {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        Ok(HttpEndpoint {
            base: config.endpoint.trim_end_matches('/').to_string(),
            client,
            auth_token: config.auth_token.clone(),
            in_flight: InFlight::new(config.max_in_flight),
        })
    }

    fn send(&self, req: reqwest::blocking::RequestBuilder) -> Result<String, BackendError> {
        let req = match &self.auth_token {
            Some(token) => req.header("Authorization", format!("Bearer {token}")),
            None => req,
        };
        let _permit = self.in_flight.acquire();
        let response = req.send().map_err(|e| BackendError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        let status = response.status();
        let body = response.text().map_err(|e| BackendError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        if status.is_server_error() {
            return Err(BackendError::Transport {
                attempts: 1,
                message: format!("status {status}: {}", snippet(&body)),
            });
        }
        if !status.is_success() {
            return Err(BackendError::Protocol(format!(
                "status {status}: {}",
                snippet(&body)
            )));
        }
        Ok(body)
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn capabilities(&self) -> Result<Capabilities, BackendError> {
        let body = self.send(self.client.get(format!("{}/v1/capabilities", self.base)))?;
        serde_json::from_str(&body).map_err(|e| BackendError::Protocol(e.to_string()))
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let body = self.send(
            self.client
                .post(format!("{}/v1/chat/completions", self.base))
                .json(request),
        )?;
        let response: wire::ChatResponse =
            serde_json::from_str(&body).map_err(|e| BackendError::Protocol(e.to_string()))?;
        Ok(response)
    }
}

fn snippet(body: &str) -> &str {
    &body[..body.len().min(200)]
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    state: Mutex<usize>,
    available: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(limit: usize) -> Self {
        InFlight {
            state: Mutex::new(0),
            available: Condvar::new(),
            limit: limit.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut active = self.state.lock().unwrap();
        while *active >= self.limit {
            active = self.available.wait(active).unwrap();
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.0.state.lock().unwrap();
        *active -= 1;
        self.0.available.notify_one();
    }
}

//! In-process mock backend.
//!
//! Implements the same chat envelope as the HTTP path as a pure function of
//! (request, fixture tables, seed): byte-identical outputs across runs.
//! Fixture tables map image refs to captions and window-center captions to
//! answers; anything unmapped falls back to seed-derived deterministic
//! output. Failure injection covers transient and permanent transport
//! errors for resumability tests.

use super::wire::{
    Capabilities, ChatRequest, ChatResponse, Choice, HiddenStates, PromptTokenState,
    ResponseMessage, TokenState,
};
use super::{token_spans, BackendError, ChatEndpoint};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

const QUERY_MARKER: &str = "the central frame #";

#[derive(Debug, Clone, Copy)]
enum FailureMode {
    Always,
    Times(u32),
}

pub struct MockEndpoint {
    seed: u64,
    hidden_width: usize,
    embeddings: bool,
    /// Largest absolute embedding value the mock will emit.
    value_bound: f64,
    caption_fallback: bool,
    captions: HashMap<String, String>,
    scores: HashMap<String, u8>,
    answers: HashMap<String, String>,
    image_failures: Mutex<HashMap<String, FailureMode>>,
    caption_failures: Mutex<HashMap<String, FailureMode>>,
    calls: AtomicUsize,
}

impl MockEndpoint {
    pub fn new(seed: u64) -> Self {
        let mut scores = HashMap::new();
        // Window-center captions with known fixture answers.
        scores.insert("A close up of a piece of cloth.".to_string(), 1);
        scores.insert(
            "A group of people are standing on a road that is blocked off.".to_string(),
            5,
        );
        scores.insert(
            "A car is driving on a street with a red light.".to_string(),
            9,
        );
        scores.insert("A car is driving through a red light.".to_string(), 9);
        MockEndpoint {
            seed,
            hidden_width: 16,
            embeddings: true,
            value_bound: 4.0,
            caption_fallback: true,
            captions: HashMap::new(),
            scores,
            answers: HashMap::new(),
            image_failures: Mutex::new(HashMap::new()),
            caption_failures: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_hidden_width(mut self, width: usize) -> Self {
        self.hidden_width = width;
        self
    }

    /// Disable hidden-state support entirely.
    pub fn without_embeddings(mut self) -> Self {
        self.embeddings = false;
        self
    }

    /// Unknown image refs become errors instead of synthesized captions.
    pub fn without_caption_fallback(mut self) -> Self {
        self.caption_fallback = false;
        self
    }

    pub fn with_caption(mut self, image_ref: impl Into<String>, caption: impl Into<String>) -> Self {
        self.captions.insert(image_ref.into(), caption.into());
        self
    }

    /// Fix the integer score for prompts whose window center is `caption`.
    pub fn with_score(mut self, caption: impl Into<String>, score: u8) -> Self {
        self.scores.insert(caption.into(), score);
        self
    }

    /// Fix the raw answer text for prompts whose window center is `caption`.
    pub fn with_answer(mut self, caption: impl Into<String>, answer: impl Into<String>) -> Self {
        self.answers.insert(caption.into(), answer.into());
        self
    }

    pub fn value_bound(&self) -> f64 {
        self.value_bound
    }

    /// Number of chat calls served so far (capability calls excluded).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn fail_image_always(&self, image_ref: impl Into<String>) {
        self.image_failures
            .lock()
            .unwrap()
            .insert(image_ref.into(), FailureMode::Always);
    }

    pub fn fail_image_times(&self, image_ref: impl Into<String>, times: u32) {
        self.image_failures
            .lock()
            .unwrap()
            .insert(image_ref.into(), FailureMode::Times(times));
    }

    /// Inject transport failures for scoring prompts centered on `caption`.
    pub fn fail_center_always(&self, caption: impl Into<String>) {
        self.caption_failures
            .lock()
            .unwrap()
            .insert(caption.into(), FailureMode::Always);
    }

    pub fn fail_center_times(&self, caption: impl Into<String>, times: u32) {
        self.caption_failures
            .lock()
            .unwrap()
            .insert(caption.into(), FailureMode::Times(times));
    }

    fn synth_caption(&self, image_ref: &str) -> String {
        const SUBJECTS: [&str; 8] = [
            "A man", "A woman", "A group of people", "A child", "A dog", "A cyclist",
            "A car", "A crowd",
        ];
        const ACTIONS: [&str; 8] = [
            "is standing near", "is walking past", "is looking at", "is riding along",
            "is sitting beside", "is moving toward", "is waiting by", "is passing",
        ];
        const OBJECTS: [&str; 8] = [
            "a fence", "a busy street", "a parked truck", "a river bank",
            "a market stall", "a railway crossing", "a building entrance", "an open field",
        ];
        let h = mix(self.seed, 0x11, image_ref, 0);
        let s = SUBJECTS[(h % 8) as usize];
        let a = ACTIONS[((h >> 8) % 8) as usize];
        let o = OBJECTS[((h >> 16) % 8) as usize];
        format!("{s} {a} {o}.")
    }

    fn score_answer(&self, prompt: &str) -> String {
        if let Some(center) = query_center_caption(prompt) {
            if let Some(answer) = self.answers.get(&center) {
                return answer.clone();
            }
            if let Some(&score) = self.scores.get(&center) {
                return format!("score: {score}");
            }
            let h = mix(self.seed, 0x22, &center, 0);
            return format!("score: {}", h % 11);
        }
        let h = mix(self.seed, 0x33, prompt, 0);
        format!("score: {}", h % 11)
    }

    fn hidden_values(&self, salt: u64, token: &str, index: usize) -> Vec<f64> {
        (0..self.hidden_width)
            .map(|d| {
                let h = mix(self.seed, salt, token, (index as u64) << 32 | d as u64);
                // map to [-bound, bound]
                (h as f64 / u64::MAX as f64) * 2.0 * self.value_bound - self.value_bound
            })
            .collect()
    }
}

impl ChatEndpoint for MockEndpoint {
    fn capabilities(&self) -> Result<Capabilities, BackendError> {
        Ok(Capabilities {
            hidden_states: self.embeddings,
            hidden_width: self.embeddings.then_some(self.hidden_width),
        })
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let message = request
            .messages
            .first()
            .ok_or_else(|| BackendError::Protocol("request carries no messages".into()))?;

        // Captioning path: the message carries an image ref.
        if let Some(image_ref) = message.image_ref() {
            take_failure(&self.image_failures, image_ref)?;
            let caption = match self.captions.get(image_ref) {
                Some(c) => c.clone(),
                None if self.caption_fallback => self.synth_caption(image_ref),
                None => return Err(BackendError::ImageUnresolvable(image_ref.to_string())),
            };
            return Ok(ChatResponse::text(caption));
        }

        // Scoring path.
        let prompt = message.text();
        if let Some(center) = query_center_caption(&prompt) {
            take_failure(&self.caption_failures, &center)?;
        }
        let raw = self.score_answer(&prompt);
        let answer = truncate_generation(&raw, request.max_tokens);

        let mut response = ChatResponse {
            choices: vec![Choice {
                message: ResponseMessage {
                    role: "assistant".into(),
                    content: answer.clone(),
                },
            }],
            hidden_states: None,
        };

        if request.return_hidden_states == Some(true) {
            if !self.embeddings {
                return Err(BackendError::EmbeddingsUnsupported);
            }
            // Separate value tables per extraction position.
            let salt = match request.hidden_state_position.as_deref() {
                Some("after-output-projection") => 0x0b,
                _ => 0x0a,
            };
            let prompt_states: Vec<PromptTokenState> = token_spans(&prompt)
                .into_iter()
                .enumerate()
                .map(|(i, (start, end))| PromptTokenState {
                    start,
                    end,
                    values: self.hidden_values(salt, &prompt[start..end], i),
                })
                .collect();
            let completion_states: Vec<TokenState> = answer
                .split_whitespace()
                .enumerate()
                .map(|(i, tok)| TokenState {
                    values: self.hidden_values(salt ^ 0xff, tok, i),
                })
                .collect();
            response.hidden_states = Some(HiddenStates {
                width: self.hidden_width,
                prompt: prompt_states,
                completion: completion_states,
            });
        }
        Ok(response)
    }
}

fn take_failure(
    table: &Mutex<HashMap<String, FailureMode>>,
    key: &str,
) -> Result<(), BackendError> {
    let mut table = table.lock().unwrap();
    let fail = match table.get_mut(key) {
        None => return Ok(()),
        Some(FailureMode::Always) => true,
        Some(FailureMode::Times(n)) => {
            if *n == 0 {
                table.remove(key);
                return Ok(());
            }
            *n -= 1;
            true
        }
    };
    if fail {
        return Err(BackendError::Transport {
            attempts: 1,
            message: format!("injected failure for {key:?}"),
        });
    }
    Ok(())
}

/// Stop at the first line break, then cap at `max_tokens` whitespace tokens.
fn truncate_generation(raw: &str, max_tokens: usize) -> String {
    let line = raw.lines().next().unwrap_or("").trim();
    super::truncate_tokens(line, max_tokens.max(1))
}

/// Center caption of the final (query) window block, if the prompt follows
/// the window-scoring template.
fn query_center_caption(prompt: &str) -> Option<String> {
    let at = prompt.rfind(QUERY_MARKER)?;
    let tail = &prompt[at + QUERY_MARKER.len()..];
    let digits: String = tail.chars().take_while(|c| c.is_ascii_digit()).collect();
    let center: usize = digits.parse().ok()?;
    for line in tail.lines() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix('#') else {
            continue;
        };
        let Some((num, caption)) = rest.split_once(':') else {
            continue;
        };
        if num.trim().parse::<usize>() == Ok(center) {
            return Some(caption.trim().to_string());
        }
    }
    None
}

/// splitmix64 over an FNV-1a digest of the string plus mixing keys.
fn mix(seed: u64, salt: u64, s: &str, extra: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = h ^ seed.rotate_left(17) ^ salt.wrapping_mul(0x9e3779b97f4a7c15) ^ extra;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

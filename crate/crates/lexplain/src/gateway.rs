//! Completion backends: a chat-completion HTTP client and a canned-response
//! mock.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable holding the API key for [`HttpClient`].
pub const API_KEY_VAR: &str = "LLM_API_KEY";

/// Retries after the first attempt on a retryable failure.
pub const MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub base_url: String,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            model: "gpt-4".into(),
            temperature: 0.0,
            max_tokens: 2048,
            base_url: "https://api.openai.com/v1".into(),
            timeout_secs: 120,
        }
    }
}

impl LlmConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: String| Err(GatewayError::Precondition(m));
        if self.model.trim().is_empty() {
            return bad("model id is empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} is outside [0, 2]", self.temperature));
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive".into());
        }
        if self.timeout_secs == 0 {
            return bad("timeout must be positive".into());
        }
        match self.base_url.parse::<ureq::http::Uri>() {
            Ok(u) if matches!(u.scheme_str(), Some("http" | "https")) && u.host().is_some() => Ok(()),
            _ => bad(format!("base url {:?} is not an http(s) URL", self.base_url)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub text: String,
    pub model_id: String,
    pub latency: Duration,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport error: {message}")]
    Transport { message: String, retryable: bool },
    #[error("backend returned status {status}: {message}")]
    Backend { status: u16, message: String },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("mock response queue exhausted after {served} calls")]
    Exhausted { served: usize },
    #[error("cannot read mock directory {}: {source}", path.display())]
    MockDir { path: PathBuf, source: std::io::Error },
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport { retryable, .. } => *retryable,
            GatewayError::Timeout(_) => true,
            GatewayError::Backend { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A completion backend. Implementations must accept concurrent calls.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, config: &LlmConfig) -> Result<LlmResponse, GatewayError>;
}

fn check_request(prompt: &str, config: &LlmConfig) -> Result<(), GatewayError> {
    if prompt.is_empty() {
        return Err(GatewayError::Precondition("prompt is empty".into()));
    }
    config.validate()
}

// ---------------------------------------------------------------------------

/// Chat-completion client for an OpenAI-style `/chat/completions` endpoint.
pub struct HttpClient {
    api_key: String,
    backoff: Duration,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient").field("backoff", &self.backoff).finish_non_exhaustive()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    model: Option<String>,
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpClient {
    pub fn new(api_key: impl Into<String>) -> Result<Self, GatewayError> {
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(GatewayError::Auth(format!("{API_KEY_VAR} is empty")));
        }
        Ok(HttpClient { api_key, backoff: Duration::from_millis(500) })
    }

    /// Reads the key from `LLM_API_KEY`.
    pub fn from_env() -> Result<Self, GatewayError> {
        match std::env::var(API_KEY_VAR) {
            Ok(key) => Self::new(key),
            Err(_) => Err(GatewayError::Auth(format!("{API_KEY_VAR} is not set"))),
        }
    }

    /// Delay before the first retry; doubled for each further one.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, prompt: &str, config: &LlmConfig) -> Result<LlmResponse, GatewayError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &config.model,
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            messages: [ChatMessage { role: "user", content: prompt }],
        };
        let started = Instant::now();
        let mut resp = agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| transport(e, config))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| transport(e, config))?;
        let latency = started.elapsed();
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(format!("status {status}: {}", snippet(&text)))),
            _ => return Err(GatewayError::Backend { status, message: snippet(&text) }),
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Backend { status, message: format!("unreadable response body: {e}") })?;
        let usage = parsed.usage.unwrap_or_default();
        let content = parsed.choices.into_iter().next().and_then(|c| c.message.content).unwrap_or_default();
        if content.is_empty() {
            return Err(GatewayError::EmptyCompletion);
        }
        Ok(LlmResponse {
            text: content,
            model_id: parsed.model.unwrap_or_else(|| config.model.clone()),
            latency,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

fn snippet(body: &str) -> String {
    body.chars().take(300).collect()
}

fn transport(e: ureq::Error, config: &LlmConfig) -> GatewayError {
    use ureq::Error as E;
    match e {
        E::Timeout(_) => GatewayError::Timeout(config.timeout()),
        E::Io(ref io) if io.kind() == std::io::ErrorKind::TimedOut => GatewayError::Timeout(config.timeout()),
        E::Io(_) | E::ConnectionFailed | E::HostNotFound | E::Protocol(_) | E::BodyStalled => {
            GatewayError::Transport { message: e.to_string(), retryable: true }
        }
        other => GatewayError::Transport { message: other.to_string(), retryable: false },
    }
}

impl CompletionClient for HttpClient {
    fn complete(&self, prompt: &str, config: &LlmConfig) -> Result<LlmResponse, GatewayError> {
        check_request(prompt, config)?;
        let mut delay = self.backoff;
        let mut tries = 0;
        loop {
            match self.attempt(prompt, config) {
                Err(e) if e.is_retryable() && tries < MAX_RETRIES => {
                    tries += 1;
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                result => return result,
            }
        }
    }
}

// ---------------------------------------------------------------------------

/// Replays canned responses in order and records every prompt it receives.
#[derive(Debug)]
pub struct MockClient {
    responses: Vec<String>,
    cycle: bool,
    state: Mutex<MockState>,
}

#[derive(Debug, Default)]
struct MockState {
    served: usize,
    prompts: Vec<String>,
}

impl MockClient {
    pub fn new(responses: impl IntoIterator<Item = impl Into<String>>) -> Self {
        MockClient { responses: responses.into_iter().map(Into::into).collect(), cycle: false, state: Mutex::default() }
    }

    /// Loads every `*.txt` file of `dir`, ordered by file name.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let dir = dir.as_ref();
        let err = |source| GatewayError::MockDir { path: dir.to_path_buf(), source };
        let mut files: Vec<PathBuf> =
            std::fs::read_dir(dir).map_err(err)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(err)?;
        files.retain(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"));
        files.sort();
        if files.is_empty() {
            return Err(err(std::io::Error::new(std::io::ErrorKind::NotFound, "no .txt response files")));
        }
        let responses = files
            .iter()
            .map(|p| std::fs::read_to_string(p).map_err(|source| GatewayError::MockDir { path: p.clone(), source }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(responses))
    }

    /// Start again from the first response once the queue runs out.
    pub fn cycling(mut self) -> Self {
        self.cycle = true;
        self
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Prompts received so far, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).prompts.clone()
    }

    pub fn calls(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).served
    }
}

impl CompletionClient for MockClient {
    fn complete(&self, prompt: &str, config: &LlmConfig) -> Result<LlmResponse, GatewayError> {
        check_request(prompt, config)?;
        let started = Instant::now();
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let served = state.served;
        let text = match self.responses.len() {
            0 => None,
            n if self.cycle => Some(&self.responses[served % n]),
            _ => self.responses.get(served),
        }
        .ok_or(GatewayError::Exhausted { served })?
        .clone();
        state.served += 1;
        state.prompts.push(prompt.to_string());
        if text.is_empty() {
            return Err(GatewayError::EmptyCompletion);
        }
        Ok(LlmResponse {
            text,
            model_id: config.model.clone(),
            latency: started.elapsed(),
            prompt_tokens: 0,
            completion_tokens: 0,
        })
    }
}

//! LLM backends: one `complete` call per prompt.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling parameters sent with every request. Defaults are the provider
/// defaults: no stop sequences, no output cap, one completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    /// Ask for JSON mode where the service supports it.
    pub json_mode: bool,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            temperature: 1.0,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            json_mode: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Request {
    /// May be empty, in which case no system message is sent.
    pub system: String,
    pub user: String,
    pub params: DecodingParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// True when either count was estimated locally.
    pub usage_estimated: bool,
    #[serde(rename = "latency_s", serialize_with = "as_secs")]
    pub latency: Duration,
}

fn as_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("environment variable {env_var} is not set")]
    MissingKey { env_var: String },
    #[error("backend rejected the credentials in {env_var} (HTTP {status})")]
    Auth { env_var: String, status: u16 },
    /// Worth retrying: transport failures, rate limits, server errors.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
    #[error("scripted backend has no reply for this request ({served} served)")]
    ScriptExhausted { served: usize },
}

impl BackendError {
    pub fn is_auth(&self) -> bool {
        matches!(self, BackendError::MissingKey { .. } | BackendError::Auth { .. })
    }
}

pub trait Backend: Send + Sync {
    /// Model identifier used to look up cost rates.
    fn model_id(&self) -> &str;
    fn complete(&self, req: &Request) -> Result<Completion, BackendError>;
}

/// Deterministic stand-in for usage a backend did not report: about four
/// characters per token.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Attempts after the first one.
    pub max_retries: u32,
    pub initial_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, initial_delay: Duration::from_millis(500), max_delay: Duration::from_secs(8) }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { max_retries: 0, initial_delay: Duration::ZERO, max_delay: Duration::ZERO }
    }

    fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry).unwrap_or(u32::MAX);
        self.initial_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Calls the backend, retrying transient failures with doubling delays.
/// Returns the completion and the number of attempts made.
pub fn complete_with_retry(
    backend: &dyn Backend,
    req: &Request,
    policy: &RetryPolicy,
) -> Result<(Completion, u32), BackendError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match backend.complete(req) {
            Ok(c) => return Ok((c, attempt)),
            Err(BackendError::Transient(msg)) if attempt <= policy.max_retries => {
                let wait = policy.delay(attempt - 1);
                log::warn!("attempt {attempt} failed ({msg}); retrying in {wait:?}");
                std::thread::sleep(wait);
            }
            Err(e) => return Err(e),
        }
    }
}

/// One canned reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedReply {
    pub text: String,
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
    /// Only serves requests whose user text contains every one of these.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub when: Vec<String>,
    /// Serve repeatedly instead of once.
    #[serde(default)]
    pub keep: bool,
}

impl ScriptedReply {
    pub fn new(text: impl Into<String>) -> Self {
        ScriptedReply { text: text.into(), prompt_tokens: None, completion_tokens: None, when: Vec::new(), keep: false }
    }

    pub fn usage(mut self, prompt: u64, completion: u64) -> Self {
        self.prompt_tokens = Some(prompt);
        self.completion_tokens = Some(completion);
        self
    }

    pub fn when(mut self, needle: impl Into<String>) -> Self {
        self.when.push(needle.into());
        self
    }

    pub fn keep(mut self) -> Self {
        self.keep = true;
        self
    }
}

type Responder = Box<dyn FnMut(&Request) -> Result<ScriptedReply, BackendError> + Send>;

/// Replays canned replies and records every request.
pub struct ScriptedBackend {
    model: String,
    responder: Mutex<Responder>,
    log: Mutex<Vec<Request>>,
}

impl ScriptedBackend {
    /// Each request takes the first unused reply whose `when` substrings all
    /// occur in the user text.
    pub fn from_replies(replies: Vec<ScriptedReply>) -> Self {
        let mut queue: VecDeque<ScriptedReply> = replies.into();
        let mut served = 0;
        Self::from_fn(move |req| {
            let pos = queue
                .iter()
                .position(|r| r.when.iter().all(|w| req.user.contains(w.as_str())))
                .ok_or(BackendError::ScriptExhausted { served })?;
            served += 1;
            let reply = if queue[pos].keep { queue[pos].clone() } else { queue.remove(pos).unwrap() };
            Ok(reply)
        })
    }

    pub fn from_fn(f: impl FnMut(&Request) -> Result<ScriptedReply, BackendError> + Send + 'static) -> Self {
        ScriptedBackend { model: "scripted".into(), responder: Mutex::new(Box::new(f)), log: Mutex::new(Vec::new()) }
    }

    /// One JSON reply object per line; blank lines are skipped.
    pub fn from_jsonl(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut replies = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: ScriptedReply =
                serde_json::from_str(line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?;
            replies.push(r);
        }
        Ok(Self::from_replies(replies))
    }

    pub fn with_model_id(mut self, id: impl Into<String>) -> Self {
        self.model = id.into();
        self
    }

    pub fn requests(&self) -> Vec<Request> {
        self.log.lock().unwrap().clone()
    }
}

impl Backend for ScriptedBackend {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, req: &Request) -> Result<Completion, BackendError> {
        self.log.lock().unwrap().push(req.clone());
        let r = (self.responder.lock().unwrap())(req)?;
        let prompt_text = format!("{}{}", req.system, req.user);
        Ok(Completion {
            prompt_tokens: r.prompt_tokens.unwrap_or_else(|| estimate_tokens(&prompt_text)),
            completion_tokens: r.completion_tokens.unwrap_or_else(|| estimate_tokens(&r.text)),
            usage_estimated: r.prompt_tokens.is_none() || r.completion_tokens.is_none(),
            text: r.text,
            latency: Duration::ZERO,
        })
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpBackend {
    url: String,
    model: String,
    key_var: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// Reads the API key from `key_var`.
    pub fn from_env(base_url: &str, model: &str, key_var: &str, timeout: Duration) -> Result<Self, BackendError> {
        let api_key = std::env::var(key_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::MissingKey { env_var: key_var.to_string() })?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            model: model.to_string(),
            key_var: key_var.to_string(),
            api_key,
            agent,
        })
    }

    fn body(&self, req: &Request) -> serde_json::Value {
        let mut messages = Vec::new();
        if !req.system.is_empty() {
            messages.push(serde_json::json!({ "role": "system", "content": req.system }));
        }
        messages.push(serde_json::json!({ "role": "user", "content": req.user }));
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": req.params.temperature,
            "top_p": req.params.top_p,
            "frequency_penalty": req.params.frequency_penalty,
            "presence_penalty": req.params.presence_penalty,
            "n": 1,
        });
        if req.params.json_mode {
            body["response_format"] = serde_json::json!({ "type": "json_object" });
        }
        body
    }
}

impl Backend for HttpBackend {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, req: &Request) -> Result<Completion, BackendError> {
        let started = Instant::now();
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(self.body(req))
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::Auth { env_var: self.key_var.clone(), status }),
            408 | 429 | 500..=599 => return Err(BackendError::Transient(format!("HTTP {status}: {}", snippet(&text)))),
            _ => return Err(BackendError::Fatal(format!("HTTP {status}: {}", snippet(&text)))),
        }
        let latency = started.elapsed();
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| BackendError::Fatal(format!("malformed response body: {e}")))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| BackendError::Fatal("response has no choices[0].message.content".into()))?
            .to_string();
        let prompt = v["usage"]["prompt_tokens"].as_u64();
        let completion = v["usage"]["completion_tokens"].as_u64();
        Ok(Completion {
            prompt_tokens: prompt.unwrap_or_else(|| estimate_tokens(&format!("{}{}", req.system, req.user))),
            completion_tokens: completion.unwrap_or_else(|| estimate_tokens(&content)),
            usage_estimated: prompt.is_none() || completion.is_none(),
            text: content,
            latency,
        })
    }
}

fn snippet(s: &str) -> String {
    let s = s.trim();
    match s.char_indices().nth(200) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

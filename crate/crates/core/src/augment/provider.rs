//! LLM provider contract, retry/backoff, rate limiting and the HTTP
//! chat-completion client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::{Prompt, PromptKind};
use crate::error::ProviderError;

pub const ENV_URL: &str = "RELEVKIT_LLM_URL";
pub const ENV_KEY: &str = "RELEVKIT_LLM_KEY";
pub const ENV_MODEL: &str = "RELEVKIT_LLM_MODEL";

/// Something that turns a prompt into a completion. Implementations must
/// report failures as errors rather than returning placeholder text.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError>;
    fn name(&self) -> &str;
    fn model(&self) -> &str;
}

impl<P: LlmProvider + ?Sized> LlmProvider for &P {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        (**self).complete(prompt)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn model(&self) -> &str {
        (**self).model()
    }
}

impl<P: LlmProvider + ?Sized> LlmProvider for Box<P> {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        (**self).complete(prompt)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn model(&self) -> &str {
        (**self).model()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 1000,
            factor: 2,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let mult = u64::from(self.factor).saturating_pow(retry);
        Duration::from_millis(self.base_delay_ms.saturating_mul(mult))
    }
}

/// Token bucket shared by all workers of a run.
#[derive(Debug)]
pub struct TokenBucket {
    rate_per_sec: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate_per_sec: f64, burst: u32) -> Self {
        assert!(rate_per_sec > 0.0, "rate must be positive");
        let capacity = f64::from(burst.max(1));
        TokenBucket {
            rate_per_sec,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut st = self.state.lock().expect("token bucket poisoned");
                let now = Instant::now();
                let refill = now.duration_since(st.1).as_secs_f64() * self.rate_per_sec;
                st.0 = (st.0 + refill).min(self.capacity);
                st.1 = now;
                if st.0 >= 1.0 {
                    st.0 -= 1.0;
                    return;
                }
                (1.0 - st.0) / self.rate_per_sec
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Calls `provider`, retrying retryable errors with exponential backoff.
pub fn complete_with_retry(
    provider: &dyn LlmProvider,
    prompt: &Prompt,
    policy: &RetryPolicy,
    limiter: Option<&TokenBucket>,
) -> Result<String, ProviderError> {
    let attempts = policy.max_attempts.max(1);
    let mut retry = 0;
    loop {
        if let Some(l) = limiter {
            l.acquire();
        }
        match provider.complete(prompt) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && retry + 1 < attempts => {
                let delay = policy.delay(retry);
                log::warn!(
                    "{} call failed ({e}); retry {}/{} in {:?}",
                    provider.name(),
                    retry + 1,
                    attempts - 1,
                    delay
                );
                std::thread::sleep(delay);
                retry += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Chat completion endpoint; falls back to `RELEVKIT_LLM_URL`.
    pub url: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: None,
            model: "gpt-3.5-turbo".into(),
            timeout_secs: 30,
            api_key_env: ENV_KEY.into(),
        }
    }
}

/// OpenAI-style chat completion client.
pub struct HttpProvider {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    model: String,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider {
            agent,
            url: url.into(),
            api_key: api_key.into(),
            model: model.into(),
        }
    }

    /// Resolves the endpoint and key from `config` and the environment.
    /// The key itself never appears in configuration, only the name of
    /// the variable holding it.
    pub fn from_env(config: &HttpConfig) -> Result<Self, ProviderError> {
        let env = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        let key_var = config.api_key_env.as_str();
        let key = env(key_var).ok_or_else(|| ProviderError::Config(format!("{key_var} is not set")))?;
        let url = config
            .url
            .clone()
            .or_else(|| env(ENV_URL))
            .ok_or_else(|| ProviderError::Config(format!("{ENV_URL} is not set")))?;
        let model = env(ENV_MODEL).unwrap_or_else(|| config.model.clone());
        Ok(HttpProvider::new(url, key, model, Duration::from_secs(config.timeout_secs)))
    }

    pub fn request_body(&self, prompt: &Prompt) -> Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        })
    }
}

/// Content of `choices[0].message.content`.
pub fn parse_chat_response(body: &str) -> Result<String, ProviderError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| ProviderError::Response(format!("invalid JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Response("missing choices[0].message.content".into()))
}

impl LlmProvider for HttpProvider {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(self.request_body(prompt))
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body });
        }
        parse_chat_response(&body)
    }

    fn name(&self) -> &str {
        "http"
    }

    fn model(&self) -> &str {
        &self.model
    }
}

/// Returns fixed completions per prompt kind. Handy for tests and demos.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    pub synonym: String,
    pub antonym: String,
    pub keywords: String,
}

impl ScriptedProvider {
    pub fn new(synonym: &str, antonym: &str, keywords: &str) -> Self {
        ScriptedProvider {
            synonym: synonym.into(),
            antonym: antonym.into(),
            keywords: keywords.into(),
        }
    }
}

impl LlmProvider for ScriptedProvider {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        Ok(match prompt.kind {
            PromptKind::Synonym => self.synonym.clone(),
            PromptKind::Antonym => self.antonym.clone(),
            PromptKind::Keywords => self.keywords.clone(),
        })
    }

    fn name(&self) -> &str {
        "scripted"
    }

    fn model(&self) -> &str {
        "scripted"
    }
}

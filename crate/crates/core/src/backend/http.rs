use std::env;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendError};
use crate::prompt::PlannerPrompt;

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "PLANNER_API_KEY";

const EXCERPT_CHARS: usize = 200;

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

/// Counting semaphore bounding concurrent requests.
struct Slots {
    free: Mutex<usize>,
    released: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.released.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.released.notify_one();
    }
}

enum Attempt {
    Done(String),
    Retry { error: BackendError, wait: Option<Duration> },
    Fatal(BackendError),
}

/// Chat-completions client with bounded concurrency and exponential backoff.
pub struct HttpClient {
    client: Client,
    url: String,
    model: String,
    temperature: f64,
    max_retries: u32,
    backoff_base: Duration,
    backoff_max: Duration,
    api_key: Option<String>,
    slots: Slots,
}

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_CHARS).collect()
}

impl HttpClient {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url: format!("{}/chat/completions", cfg.endpoint_url.trim_end_matches('/')),
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            max_retries: cfg.max_retries,
            backoff_base: Duration::from_millis(cfg.backoff_base_ms),
            backoff_max: Duration::from_millis(cfg.backoff_max_ms),
            api_key: cfg.api_key.clone().or_else(|| env::var(API_KEY_ENV).ok()),
            slots: Slots::new(cfg.max_in_flight),
        })
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry).unwrap_or(u32::MAX);
        self.backoff_base.saturating_mul(factor).min(self.backoff_max)
    }

    fn attempt(&self, request: &ChatRequest<'_>, attempts: u32) -> Attempt {
        let _slot = self.slots.acquire();
        let mut builder = self.client.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return Attempt::Retry {
                    error: BackendError::Timeout { attempts },
                    wait: None,
                }
            }
            Err(e) => {
                return Attempt::Retry {
                    error: BackendError::Transport {
                        attempts,
                        message: e.to_string(),
                    },
                    wait: None,
                }
            }
        };
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = match response.text() {
            Ok(b) => b,
            Err(e) if e.is_timeout() => {
                return Attempt::Retry {
                    error: BackendError::Timeout { attempts },
                    wait: None,
                }
            }
            Err(e) => {
                return Attempt::Retry {
                    error: BackendError::Transport {
                        attempts,
                        message: e.to_string(),
                    },
                    wait: None,
                }
            }
        };
        if !status.is_success() {
            let error = BackendError::Status {
                status: status.as_u16(),
                excerpt: excerpt(&body),
            };
            return if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
                Attempt::Retry {
                    error,
                    wait: retry_after,
                }
            } else {
                Attempt::Fatal(error)
            };
        }
        let parsed: ChatResponse = match serde_json::from_str(&body) {
            Ok(p) => p,
            Err(e) => return Attempt::Fatal(BackendError::BadResponse(format!("{e}: {}", excerpt(&body)))),
        };
        match parsed.choices.into_iter().next().and_then(|c| c.message.content) {
            Some(text) => Attempt::Done(text),
            None => Attempt::Fatal(BackendError::BadResponse("no message content in first choice".into())),
        }
    }

    /// Sends the prompt as system, exemplar pairs, then user, and returns the
    /// first choice's message content verbatim.
    pub fn complete(&self, prompt: &PlannerPrompt) -> Result<String, BackendError> {
        let mut messages = vec![Message {
            role: "system",
            content: &prompt.system_text,
        }];
        for ex in &prompt.exemplars {
            messages.push(Message {
                role: "user",
                content: &ex.user_text,
            });
            messages.push(Message {
                role: "assistant",
                content: &ex.assistant_text,
            });
        }
        messages.push(Message {
            role: "user",
            content: &prompt.user_text,
        });
        let request = ChatRequest {
            model: &self.model,
            messages,
            temperature: self.temperature,
        };

        let mut retry = 0u32;
        loop {
            match self.attempt(&request, retry + 1) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry { error, wait } => {
                    if retry >= self.max_retries {
                        return Err(error);
                    }
                    let pause = wait.map_or_else(|| self.backoff(retry), |w| w.min(self.backoff_max));
                    thread::sleep(pause);
                    retry += 1;
                }
            }
        }
    }
}

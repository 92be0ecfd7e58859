//! Planner engines: a chat-completions HTTP client and two deterministic
//! offline stubs, plus the fine-tuning dataset exporter.

mod export;
mod http;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{serialize_trajectory, CodecConfig, CodecError};
use crate::prompt::PlannerPrompt;
use crate::reasoning::{
    compose_reasoning_for, find_critical_objects, make_finetune_example, rollout_hypothetical, OracleConfig,
    TRAJECTORY_LABEL,
};
use crate::scenario::Scenario;

pub use export::{export_finetune_jsonl, finetune_record, import_finetune_jsonl, ChatMessage, ChatRecord};
pub use http::{HttpClient, API_KEY_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendMode {
    Remote,
    /// Answers with the supervision target: a perfect planner.
    StubReplayGt,
    /// Answers with the interference-free rollout.
    StubHypothetical,
}

impl BackendMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendMode::Remote => "remote",
            BackendMode::StubReplayGt => "stub_replay_gt",
            BackendMode::StubHypothetical => "stub_hypothetical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// Base URL; requests go to `{endpoint_url}/chat/completions`.
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    /// Per-request timeout, seconds.
    pub request_timeout_s: f64,
    pub max_in_flight: usize,
    pub mode: BackendMode,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Bearer token. Read from the environment when unset.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8000/v1".into(),
            model_name: "gpt-3.5-turbo".into(),
            temperature: 0.0,
            max_retries: 3,
            request_timeout_s: 60.0,
            max_in_flight: 4,
            mode: BackendMode::StubReplayGt,
            backoff_base_ms: 500,
            backoff_max_ms: 8_000,
            api_key: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::Config(m.to_string()));
        if self.max_in_flight < 1 {
            return bad("max_in_flight must be at least 1");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be >= 0");
        }
        if !(self.request_timeout_s.is_finite() && self.request_timeout_s > 0.0) {
            return bad("request_timeout_s must be > 0");
        }
        if self.mode == BackendMode::Remote && self.endpoint_url.trim().is_empty() {
            return bad("endpoint_url is required in remote mode");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_s)
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("endpoint returned {status}: {excerpt}")]
    Status { status: u16, excerpt: String },
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Text-in, text-out planner engine. Shareable across threads; in remote
/// mode at most `max_in_flight` requests run at once.
pub struct Backend {
    cfg: BackendConfig,
    oracle: OracleConfig,
    codec: CodecConfig,
    http: Option<HttpClient>,
}

impl Backend {
    pub fn new(cfg: BackendConfig, oracle: OracleConfig, codec: CodecConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        codec.validate()?;
        let http = match cfg.mode {
            BackendMode::Remote => Some(HttpClient::new(&cfg)?),
            _ => None,
        };
        Ok(Self {
            cfg,
            oracle,
            codec,
            http,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    /// Raw completion for `prompt`. The stubs ignore the prompt and answer
    /// from `scenario`.
    pub fn complete(&self, prompt: &PlannerPrompt, scenario: &Scenario) -> Result<String, BackendError> {
        match self.cfg.mode {
            BackendMode::Remote => self
                .http
                .as_ref()
                .expect("remote backend has a client")
                .complete(prompt),
            BackendMode::StubReplayGt => Ok(make_finetune_example(scenario, &self.oracle, &self.codec)?.assistant_text()),
            BackendMode::StubHypothetical => {
                let hypo = rollout_hypothetical(&scenario.ego, &self.oracle.horizon);
                let critical = find_critical_objects(scenario, &hypo, self.oracle.lateral_threshold);
                let trace = compose_reasoning_for(scenario, &critical, &hypo, &hypo, &self.oracle, &self.codec)?;
                Ok(format!(
                    "{}\n{TRAJECTORY_LABEL} {}",
                    trace.render(),
                    serialize_trajectory(&hypo, &self.codec)?
                ))
            }
        }
    }
}

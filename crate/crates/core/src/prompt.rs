//! Planner prompts: a fixed system context plus a per-scenario description
//! built from detections, predictions and the ego state.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{format_fixed, serialize_waypoint, serialize_waypoints, CodecConfig, CodecError};
use crate::reasoning::{FineTuneExample, TRAJECTORY_LABEL};
use crate::scenario::{Horizon, Scenario};

const SYSTEM_TEMPLATE: &str = include_str!("../templates/system.txt");
const USER_TEMPLATE: &str = include_str!("../templates/user.txt");

/// Exemplar cap for in-context prompting.
pub const MAX_EXEMPLARS: usize = 5;

/// Marker that starts every object sentence.
pub const OBJECT_MARKER: &str = "- Object ";
/// Marker that starts every prediction sentence.
pub const PREDICTION_MARKER: &str = "- Prediction for ";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("{requested} exemplars requested, at most {cap} allowed")]
    TooManyExemplars { requested: usize, cap: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub user_text: String,
    pub assistant_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerPrompt {
    pub system_text: String,
    pub user_text: String,
    /// Solved examples shown before the query, oldest first.
    pub exemplars: Vec<Exemplar>,
}

/// The output line the planner must end with, e.g.
/// `Trajectory: [(x1,y1), (x2,y2), ..., (x6,y6)]`.
pub fn output_format_instruction(steps: usize) -> String {
    let pair = |i: usize| format!("(x{i},y{i})");
    let body = match steps {
        0 => String::new(),
        1 => pair(1),
        2 => format!("{}, {}", pair(1), pair(2)),
        n => format!("{}, {}, ..., {}", pair(1), pair(2), pair(n)),
    };
    format!("{TRAJECTORY_LABEL} [{body}]")
}

pub fn build_system_prompt(horizon: &Horizon) -> String {
    SYSTEM_TEMPLATE
        .replace("{horizon}", &format!("{:.1}", horizon.duration()))
        .replace("{steps}", &horizon.steps.to_string())
        .replace("{dt}", &horizon.dt.to_string())
        .replace("{output_format}", &output_format_instruction(horizon.steps))
}

pub fn build_user_prompt(s: &Scenario, cfg: &CodecConfig) -> Result<String, CodecError> {
    let num = |v: f64| format_fixed(v, cfg.decimals);

    let mut perception = Vec::with_capacity(s.objects.len().max(1));
    for o in &s.objects {
        perception.push(format!(
            "{OBJECT_MARKER}{}: {} at {}, heading {} rad, size {} m x {} m.",
            o.id,
            o.class_name,
            serialize_waypoint(&o.center, cfg)?,
            num(o.heading)?,
            num(o.length)?,
            num(o.width)?
        ));
    }
    if perception.is_empty() {
        perception.push("- No objects detected.".to_string());
    }

    let mut prediction = Vec::with_capacity(s.predictions.len().max(1));
    for p in &s.predictions {
        prediction.push(format!(
            "{PREDICTION_MARKER}{}: {}.",
            p.object_id,
            serialize_waypoints(&p.future, cfg)?
        ));
    }
    if prediction.is_empty() {
        prediction.push("- No predictions available.".to_string());
    }

    let history = if s.ego.history.is_empty() {
        "none".to_string()
    } else {
        serialize_waypoints(&s.ego.history, cfg)?
    };
    let ego = format!(
        "- Velocity {} m/s, acceleration {} m/s^2, heading rate {} rad/s.\n- Past positions: {history}.",
        num(s.ego.velocity)?,
        num(s.ego.acceleration)?,
        num(s.ego.heading_rate)?
    );

    Ok(USER_TEMPLATE
        .replace("{perception}", &perception.join("\n"))
        .replace("{prediction}", &prediction.join("\n"))
        .replace("{ego}", &ego)
        .trim_end()
        .to_string())
}

pub fn build_prompt(s: &Scenario, horizon: &Horizon, cfg: &CodecConfig) -> Result<PlannerPrompt, CodecError> {
    Ok(PlannerPrompt {
        system_text: build_system_prompt(horizon),
        user_text: build_user_prompt(s, cfg)?,
        exemplars: Vec::new(),
    })
}

/// Attaches the first `k` examples of `pool`, in pool order.
pub fn pack_exemplars(base: PlannerPrompt, pool: &[FineTuneExample], k: usize) -> Result<PlannerPrompt, PromptError> {
    pack_exemplars_capped(base, pool, k, MAX_EXEMPLARS)
}

pub fn pack_exemplars_capped(
    mut base: PlannerPrompt,
    pool: &[FineTuneExample],
    k: usize,
    cap: usize,
) -> Result<PlannerPrompt, PromptError> {
    if k > cap {
        return Err(PromptError::TooManyExemplars { requested: k, cap });
    }
    base.exemplars = pool
        .iter()
        .take(k)
        .map(|ex| Exemplar {
            user_text: ex.prompt.user_text.clone(),
            assistant_text: ex.assistant_text(),
        })
        .collect();
    Ok(base)
}

/// SHA-256 of the frozen templates, hex encoded.
pub fn template_hash() -> String {
    let mut h = Sha256::new();
    h.update(SYSTEM_TEMPLATE.as_bytes());
    h.update([0u8]);
    h.update(USER_TEMPLATE.as_bytes());
    hex::encode(h.finalize())
}

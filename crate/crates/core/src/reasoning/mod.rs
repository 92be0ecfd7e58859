//! Chain-of-thought supervision targets.
//!
//! Targets are derived without manual annotation: the ego vehicle is rolled
//! out under its current velocity and acceleration as if nothing were in the
//! way, objects whose current or predicted positions come close to that
//! rollout are flagged as critical, and the decision is read off the
//! difference between the logged human trajectory and the rollout.

mod compose;
mod critical;
mod example;
mod rollout;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scenario::Horizon;

pub use compose::{classify_decision, compose_reasoning, compose_reasoning_for};
pub use critical::find_critical_objects;
pub use example::{make_finetune_example, FineTuneExample};
pub use rollout::{rollout_hypothetical, MIN_CURVATURE_SPEED};

/// High-level driving decision vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    KeepSpeed,
    Accelerate,
    Decelerate,
    Stop,
    TurnLeft,
    TurnRight,
    ChangeLaneLeft,
    ChangeLaneRight,
}

impl Decision {
    pub const ALL: [Decision; 8] = [
        Decision::KeepSpeed,
        Decision::Accelerate,
        Decision::Decelerate,
        Decision::Stop,
        Decision::TurnLeft,
        Decision::TurnRight,
        Decision::ChangeLaneLeft,
        Decision::ChangeLaneRight,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::KeepSpeed => "keep_speed",
            Decision::Accelerate => "accelerate",
            Decision::Decelerate => "decelerate",
            Decision::Stop => "stop",
            Decision::TurnLeft => "turn_left",
            Decision::TurnRight => "turn_right",
            Decision::ChangeLaneLeft => "change_lane_left",
            Decision::ChangeLaneRight => "change_lane_right",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Decision::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown decision '{s}'"))
    }
}

/// How a critical object relates to the ego lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AheadInLane,
    Crossing,
    Oncoming,
    StaticObstacle,
}

impl Relation {
    pub fn describe(&self) -> &'static str {
        match self {
            Relation::AheadInLane => "moving ahead in the ego direction",
            Relation::Crossing => "crossing the ego path",
            Relation::Oncoming => "oncoming",
            Relation::StaticObstacle => "static",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalObject {
    pub object_id: String,
    /// 1-based horizon step of the first conflict.
    pub first_conflict_step: usize,
    pub min_distance: f64,
    pub relation: Relation,
}

/// The three-part reasoning that precedes a planned trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningTrace {
    pub critical_objects: Vec<CriticalObject>,
    /// Body of the critical-objects section.
    pub critical_text: String,
    /// Body of the interaction section: when, where and how each critical
    /// object affects the ego vehicle.
    pub interaction_text: String,
    pub decision: Decision,
    pub decision_text: String,
}

/// Section labels shared by the system prompt, the targets and the parser.
pub const CRITICAL_LABEL: &str = "Critical objects:";
pub const INTERACTION_LABEL: &str = "Interaction analysis:";
pub const DECISION_LABEL: &str = "Decision:";
pub const TRAJECTORY_LABEL: &str = "Trajectory:";

impl ReasoningTrace {
    /// Renders the three labeled sections; the text ends with the decision
    /// line and no trailing newline.
    pub fn render(&self) -> String {
        format!(
            "{CRITICAL_LABEL}\n{}\n{INTERACTION_LABEL}\n{}\n{DECISION_LABEL} {}. {}",
            self.critical_text, self.interaction_text, self.decision, self.decision_text
        )
    }
}

/// Thresholds of the supervision generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub horizon: Horizon,
    /// Center distance below which an object overlaps the rollout, meters.
    pub lateral_threshold: f64,
    /// Human/rollout arc-length ratio below which the decision is decelerate.
    pub decelerate_ratio: f64,
    /// Ratio above which the decision is accelerate.
    pub accelerate_ratio: f64,
    /// Ratio below which the decision is stop.
    pub stop_ratio: f64,
    /// Net heading change for a turn, degrees.
    pub turn_degrees: f64,
    /// Net lateral offset for a lane change, meters.
    pub lane_change_offset: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            horizon: Horizon::default(),
            lateral_threshold: 3.0,
            decelerate_ratio: 0.85,
            accelerate_ratio: 1.15,
            stop_ratio: 0.05,
            turn_degrees: 15.0,
            lane_change_offset: 1.5,
        }
    }
}

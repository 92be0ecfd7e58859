//! JSON scenario files.
//!
//! ```text
//! {"scenarios":[{
//!   "id": "...",
//!   "ego": {"velocity":v, "acceleration":a, "heading_rate":w, "history":[[x,y],...]},
//!   "objects": [{"id":..., "class":"car", "center":[x,y], "heading":h, "length":l, "width":w}],
//!   "predictions": [{"object_id":..., "future":[[x,y],...]}],
//!   "human_trajectory": [[x,y],...],
//!   "gt_object_boxes": [[{"center":[x,y], "heading":h, "length":l, "width":w}, ...], ...]
//! }]}
//! ```
//!
//! Every number is quantized on ingest so that text round-trips downstream are
//! exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate_scenario, DetectedObject, EgoState, Horizon, PredictedMotion, Scenario, Trajectory,
    Violation, Waypoint,
};
use crate::eval::obb::OrientedBox;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scenario '{scenario_id}': {}", join(.violations))]
    Schema {
        scenario_id: String,
        violations: Vec<Violation>,
    },
}

fn join(vs: &[Violation]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    scenarios: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct ScenarioFileOut<'a> {
    scenarios: Vec<ScenarioRecord<'a>>,
}

/// Object ids may be written as strings or integers.
#[derive(Deserialize)]
#[serde(untagged)]
enum Id {
    Text(String),
    Int(i64),
}

impl From<Id> for String {
    fn from(id: Id) -> Self {
        match id {
            Id::Text(s) => s,
            Id::Int(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct ScenarioIn {
    id: Id,
    ego: EgoIn,
    #[serde(default)]
    objects: Vec<ObjectIn>,
    #[serde(default)]
    predictions: Vec<PredictionIn>,
    human_trajectory: Vec<Waypoint>,
    gt_object_boxes: Vec<Vec<OrientedBox>>,
}

#[derive(Deserialize)]
struct EgoIn {
    velocity: f64,
    acceleration: f64,
    heading_rate: f64,
    #[serde(default)]
    history: Vec<Waypoint>,
}

#[derive(Deserialize)]
struct ObjectIn {
    id: Id,
    class: String,
    center: Waypoint,
    heading: f64,
    length: f64,
    width: f64,
}

#[derive(Deserialize)]
struct PredictionIn {
    object_id: Id,
    future: Vec<Waypoint>,
}

#[derive(Serialize)]
struct ScenarioRecord<'a> {
    id: &'a str,
    ego: EgoRecord<'a>,
    objects: Vec<ObjectRecord<'a>>,
    predictions: Vec<PredictionRecord<'a>>,
    human_trajectory: &'a [Waypoint],
    gt_object_boxes: &'a [Vec<OrientedBox>],
}

#[derive(Serialize)]
struct EgoRecord<'a> {
    velocity: f64,
    acceleration: f64,
    heading_rate: f64,
    history: &'a [Waypoint],
}

#[derive(Serialize)]
struct ObjectRecord<'a> {
    id: &'a str,
    class: &'a str,
    center: Waypoint,
    heading: f64,
    length: f64,
    width: f64,
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    object_id: &'a str,
    future: &'a [Waypoint],
}

impl<'a> From<&'a Scenario> for ScenarioRecord<'a> {
    fn from(s: &'a Scenario) -> Self {
        ScenarioRecord {
            id: &s.id,
            ego: EgoRecord {
                velocity: s.ego.velocity,
                acceleration: s.ego.acceleration,
                heading_rate: s.ego.heading_rate,
                history: &s.ego.history,
            },
            objects: s
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    id: &o.id,
                    class: &o.class_name,
                    center: o.center,
                    heading: o.heading,
                    length: o.length,
                    width: o.width,
                })
                .collect(),
            predictions: s
                .predictions
                .iter()
                .map(|p| PredictionRecord {
                    object_id: &p.object_id,
                    future: &p.future,
                })
                .collect(),
            human_trajectory: &s.human_trajectory.waypoints,
            gt_object_boxes: &s.gt_object_boxes,
        }
    }
}

impl ScenarioIn {
    fn into_scenario(self, dt: f64) -> Scenario {
        Scenario {
            id: self.id.into(),
            ego: EgoState {
                velocity: self.ego.velocity,
                acceleration: self.ego.acceleration,
                heading_rate: self.ego.heading_rate,
                history: self.ego.history,
            },
            objects: self
                .objects
                .into_iter()
                .map(|o| DetectedObject {
                    id: o.id.into(),
                    class_name: o.class,
                    center: o.center,
                    heading: o.heading,
                    length: o.length,
                    width: o.width,
                })
                .collect(),
            predictions: self
                .predictions
                .into_iter()
                .map(|p| PredictedMotion {
                    object_id: p.object_id.into(),
                    future: p.future,
                })
                .collect(),
            human_trajectory: Trajectory::new(self.human_trajectory, dt),
            gt_object_boxes: self.gt_object_boxes,
        }
    }
}

/// Parses and validates a scenario document, quantizing to `decimals`.
pub fn load_scenarios_str(
    text: &str,
    horizon: &Horizon,
    decimals: u32,
) -> Result<Vec<Scenario>, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    let mut out = Vec::with_capacity(file.scenarios.len());
    for (index, value) in file.scenarios.into_iter().enumerate() {
        let fallback_id = value
            .get("id")
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .unwrap_or_else(|| format!("#{index}"));
        let record: ScenarioIn =
            serde_json::from_value(value).map_err(|e| ScenarioError::Schema {
                scenario_id: fallback_id.clone(),
                violations: vec![Violation::new("<record>", e.to_string())],
            })?;
        let raw = record.into_scenario(horizon.dt);
        let scenario = raw.quantized(decimals).map_err(|e| ScenarioError::Schema {
            scenario_id: fallback_id.clone(),
            violations: vec![Violation::new("<numbers>", e.to_string())],
        })?;
        validate_scenario(&scenario, horizon).map_err(|violations| ScenarioError::Schema {
            scenario_id: scenario.id.clone(),
            violations,
        })?;
        out.push(scenario);
    }
    Ok(out)
}

/// Loads every scenario of a file in file order.
pub fn load_scenarios(
    path: impl AsRef<Path>,
    horizon: &Horizon,
    decimals: u32,
) -> Result<Vec<Scenario>, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_scenarios_str(&text, horizon, decimals)
}

/// Renders scenarios in the file schema, newline-terminated.
pub fn scenarios_to_json(scenarios: &[Scenario]) -> String {
    let file = ScenarioFileOut {
        scenarios: scenarios.iter().map(ScenarioRecord::from).collect(),
    };
    let mut text = serde_json::to_string(&file).expect("scenario records always serialize");
    text.push('\n');
    text
}

pub fn save_scenarios(path: impl AsRef<Path>, scenarios: &[Scenario]) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, scenarios_to_json(scenarios)).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

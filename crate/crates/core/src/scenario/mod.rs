//! Scenario data model, validation, file IO, splits and synthetic fixtures.
//!
//! All positions live in the ego-centric bird's-eye frame of the current
//! timestep: the ego vehicle sits at the origin, `+y` points forward and `+x`
//! points to the right. Headings are measured counter-clockwise from `+x`, so
//! the ego vehicle itself faces [`EGO_HEADING`].

mod io;
mod split;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{self, CodecError};
use crate::eval::obb::OrientedBox;

pub use io::{load_scenarios, load_scenarios_str, save_scenarios, scenarios_to_json, ScenarioError};
pub use split::{sample_split, split_count, SplitError};
pub use synth::{synth_scenario, synth_scenario_with, ScenarioKind};

/// Heading of the ego vehicle in its own frame (facing `+y`).
pub const EGO_HEADING: f64 = std::f64::consts::FRAC_PI_2;

/// Sanity bound on any coordinate, in meters.
pub const COORD_LIMIT: f64 = 200.0;

/// A 2D position in the ego frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub const ORIGIN: Waypoint = Waypoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Waypoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.x.abs() <= COORD_LIMIT
            && self.y.abs() <= COORD_LIMIT
    }

    pub fn quantized(&self, decimals: u32) -> Result<Waypoint, CodecError> {
        Ok(Waypoint {
            x: codec::quantize(self.x, decimals)?,
            y: codec::quantize(self.y, decimals)?,
        })
    }
}

impl From<[f64; 2]> for Waypoint {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Waypoint> for [f64; 2] {
    fn from(w: Waypoint) -> Self {
        [w.x, w.y]
    }
}

impl fmt::Display for Waypoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2},{:.2})", self.x, self.y)
    }
}

/// Number of planned waypoints and their spacing in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub steps: usize,
    pub dt: f64,
}

impl Default for Horizon {
    /// Six waypoints at 2 Hz: a 3 s horizon.
    fn default() -> Self {
        Self { steps: 6, dt: 0.5 }
    }
}

impl Horizon {
    pub fn new(steps: usize, dt: f64) -> Self {
        Self { steps, dt }
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Time of waypoint `index` (0-based), i.e. `(index + 1) * dt`.
    pub fn time_of(&self, index: usize) -> f64 {
        (index + 1) as f64 * self.dt
    }

    pub fn is_valid(&self) -> bool {
        self.steps >= 1 && self.dt.is_finite() && self.dt > 0.0
    }
}

/// Fixed-rate sequence of future waypoints. Waypoint `i` (0-based) is the
/// position at time `(i + 1) * dt`; the current position is the origin and is
/// not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub dt: f64,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>, dt: f64) -> Self {
        Self { waypoints, dt }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Polyline length starting from the origin.
    pub fn arc_length(&self) -> f64 {
        let mut prev = Waypoint::ORIGIN;
        let mut total = 0.0;
        for w in &self.waypoints {
            total += prev.distance(w);
            prev = *w;
        }
        total
    }

    pub fn quantized(&self, decimals: u32) -> Result<Trajectory, CodecError> {
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| w.quantized(decimals))
            .collect::<Result<_, _>>()?;
        Ok(Trajectory { waypoints, dt: self.dt })
    }

    /// Checks the trajectory invariants against `horizon`, appending any
    /// violations under the field name `field`.
    fn check(&self, horizon: &Horizon, field: &str, out: &mut Vec<Violation>) {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            out.push(Violation::new(field, "dt > 0"));
        }
        if self.waypoints.len() != horizon.steps {
            out.push(Violation::new(
                field,
                format!(
                    "trajectory length {} does not match horizon {}",
                    self.waypoints.len(),
                    horizon.steps
                ),
            ));
        }
        check_waypoints(&self.waypoints, field, out);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoState {
    /// Speed along the heading, m/s.
    pub velocity: f64,
    /// m/s².
    pub acceleration: f64,
    /// rad/s, positive turns left.
    pub heading_rate: f64,
    /// Past positions, most recent last.
    pub history: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedObject {
    pub id: String,
    pub class_name: String,
    pub center: Waypoint,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl DetectedObject {
    pub fn to_box(&self) -> OrientedBox {
        OrientedBox::new(self.center, self.heading, self.length, self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedMotion {
    pub object_id: String,
    /// One position per horizon step.
    pub future: Vec<Waypoint>,
}

/// One planning frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub ego: EgoState,
    pub objects: Vec<DetectedObject>,
    pub predictions: Vec<PredictedMotion>,
    pub human_trajectory: Trajectory,
    /// Ground-truth object boxes, one list per horizon step.
    pub gt_object_boxes: Vec<Vec<OrientedBox>>,
}

impl Scenario {
    pub fn prediction_for(&self, object_id: &str) -> Option<&PredictedMotion> {
        self.predictions.iter().find(|p| p.object_id == object_id)
    }

    /// Rounds every numeric field to `decimals` fractional digits.
    pub fn quantized(&self, decimals: u32) -> Result<Scenario, CodecError> {
        let q = |v: f64| codec::quantize(v, decimals);
        let qs = |ws: &[Waypoint]| -> Result<Vec<Waypoint>, CodecError> {
            ws.iter().map(|w| w.quantized(decimals)).collect()
        };
        let qbox = |b: &OrientedBox| -> Result<OrientedBox, CodecError> {
            Ok(OrientedBox::new(
                b.center.quantized(decimals)?,
                q(b.heading)?,
                q(b.length)?,
                q(b.width)?,
            ))
        };
        Ok(Scenario {
            id: self.id.clone(),
            ego: EgoState {
                velocity: q(self.ego.velocity)?,
                acceleration: q(self.ego.acceleration)?,
                heading_rate: q(self.ego.heading_rate)?,
                history: qs(&self.ego.history)?,
            },
            objects: self
                .objects
                .iter()
                .map(|o| {
                    Ok(DetectedObject {
                        id: o.id.clone(),
                        class_name: o.class_name.clone(),
                        center: o.center.quantized(decimals)?,
                        heading: q(o.heading)?,
                        length: q(o.length)?,
                        width: q(o.width)?,
                    })
                })
                .collect::<Result<_, CodecError>>()?,
            predictions: self
                .predictions
                .iter()
                .map(|p| {
                    Ok(PredictedMotion {
                        object_id: p.object_id.clone(),
                        future: qs(&p.future)?,
                    })
                })
                .collect::<Result<_, CodecError>>()?,
            human_trajectory: self.human_trajectory.quantized(decimals)?,
            gt_object_boxes: self
                .gt_object_boxes
                .iter()
                .map(|step| step.iter().map(qbox).collect::<Result<Vec<_>, _>>())
                .collect::<Result<_, _>>()?,
        })
    }
}

/// A single broken invariant, located by scenario field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check_waypoints(ws: &[Waypoint], field: &str, out: &mut Vec<Violation>) {
    for (i, w) in ws.iter().enumerate() {
        if !(w.x.is_finite() && w.y.is_finite()) {
            out.push(Violation::new(format!("{field}[{i}]"), "coordinates must be finite"));
        } else if !w.is_valid() {
            out.push(Violation::new(
                format!("{field}[{i}]"),
                format!("|x| and |y| must be <= {COORD_LIMIT}"),
            ));
        }
    }
}

fn check_box(b: &OrientedBox, field: &str, out: &mut Vec<Violation>) {
    check_waypoints(std::slice::from_ref(&b.center), &format!("{field}.center"), out);
    if !b.heading.is_finite() {
        out.push(Violation::new(format!("{field}.heading"), "heading must be finite"));
    }
    if !(b.length > 0.0) {
        out.push(Violation::new(format!("{field}.length"), "length > 0"));
    }
    if !(b.width > 0.0) {
        out.push(Violation::new(format!("{field}.width"), "width > 0"));
    }
}

/// Checks every scenario invariant and lists all violations.
pub fn validate_scenario(s: &Scenario, horizon: &Horizon) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();

    let ego = &s.ego;
    if !(ego.velocity.is_finite() && ego.velocity >= 0.0) {
        out.push(Violation::new("ego.velocity", "velocity >= 0"));
    }
    if !ego.acceleration.is_finite() {
        out.push(Violation::new("ego.acceleration", "acceleration must be finite"));
    }
    if !ego.heading_rate.is_finite() {
        out.push(Violation::new("ego.heading_rate", "heading rate must be finite"));
    }
    check_waypoints(&ego.history, "ego.history", &mut out);

    for (i, o) in s.objects.iter().enumerate() {
        let field = format!("objects[{i}]");
        check_waypoints(std::slice::from_ref(&o.center), &format!("{field}.center"), &mut out);
        if !(o.length > 0.0) {
            out.push(Violation::new(format!("{field}.length"), "length > 0"));
        }
        if !(o.width > 0.0) {
            out.push(Violation::new(format!("{field}.width"), "width > 0"));
        }
        let pi = std::f64::consts::PI;
        if !(o.heading >= -pi && o.heading <= pi) {
            out.push(Violation::new(format!("{field}.heading"), "heading in [-pi, pi]"));
        }
        if s.objects[..i].iter().any(|prev| prev.id == o.id) {
            out.push(Violation::new(format!("{field}.id"), format!("duplicate object id '{}'", o.id)));
        }
    }

    for (i, p) in s.predictions.iter().enumerate() {
        let field = format!("predictions[{i}]");
        if !s.objects.iter().any(|o| o.id == p.object_id) {
            out.push(Violation::new(
                format!("{field}.object_id"),
                format!("prediction references unknown object id '{}'", p.object_id),
            ));
        }
        if p.future.len() != horizon.steps {
            out.push(Violation::new(
                format!("{field}.future"),
                format!(
                    "prediction length {} does not match horizon {}",
                    p.future.len(),
                    horizon.steps
                ),
            ));
        }
        check_waypoints(&p.future, &format!("{field}.future"), &mut out);
    }

    s.human_trajectory.check(horizon, "human_trajectory", &mut out);

    if s.gt_object_boxes.len() != horizon.steps {
        out.push(Violation::new(
            "gt_object_boxes",
            format!(
                "gt box list length {} does not match horizon {}",
                s.gt_object_boxes.len(),
                horizon.steps
            ),
        ));
    }
    for (step, boxes) in s.gt_object_boxes.iter().enumerate() {
        for (j, b) in boxes.iter().enumerate() {
            check_box(b, &format!("gt_object_boxes[{step}][{j}]"), &mut out);
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

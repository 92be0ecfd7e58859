use std::f64::consts::PI;

use super::{CriticalObject, Decision, OracleConfig, ReasoningTrace, Relation};
use crate::codec::{serialize_waypoint, CodecConfig, CodecError};
use crate::eval::heading_from_trajectory;
use crate::scenario::{Scenario, Trajectory, EGO_HEADING};

/// Arc length below which the rollout itself counts as standing still.
const STANDSTILL: f64 = 0.1;

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn speed_decision(plan: &Trajectory, hypo: &Trajectory, cfg: &OracleConfig) -> Decision {
    let planned = plan.arc_length();
    let reference = hypo.arc_length();
    if reference < STANDSTILL {
        return if planned < STANDSTILL {
            Decision::Stop
        } else {
            Decision::Accelerate
        };
    }
    let ratio = planned / reference;
    if ratio < cfg.stop_ratio {
        Decision::Stop
    } else if ratio < cfg.decelerate_ratio {
        Decision::Decelerate
    } else if ratio > cfg.accelerate_ratio {
        Decision::Accelerate
    } else {
        Decision::KeepSpeed
    }
}

/// Net heading change of `plan` relative to the ego heading, radians,
/// positive to the left.
fn heading_change(plan: &Trajectory) -> f64 {
    if plan.is_empty() {
        return 0.0;
    }
    wrap_angle(heading_from_trajectory(plan, plan.len() - 1, EGO_HEADING) - EGO_HEADING)
}

/// Decision label of `plan` against the interference-free rollout `hypo`.
///
/// Precedence: stop, then turns (net heading change beyond
/// `turn_degrees`), then lane changes (net lateral offset beyond
/// `lane_change_offset` with a small heading change), then the speed
/// decision from the arc-length ratio.
pub fn classify_decision(plan: &Trajectory, hypo: &Trajectory, cfg: &OracleConfig) -> Decision {
    let speed = speed_decision(plan, hypo, cfg);
    if speed == Decision::Stop {
        return speed;
    }
    let turn = heading_change(plan);
    let turn_limit = cfg.turn_degrees.to_radians();
    if turn > turn_limit {
        return Decision::TurnLeft;
    }
    if turn < -turn_limit {
        return Decision::TurnRight;
    }
    let offset = plan.waypoints.last().map_or(0.0, |w| w.x);
    if offset.abs() > cfg.lane_change_offset {
        // +x is to the right.
        return if offset < 0.0 {
            Decision::ChangeLaneLeft
        } else {
            Decision::ChangeLaneRight
        };
    }
    speed
}

fn decision_sentence(decision: Decision, speed: Decision) -> String {
    let base = match decision {
        Decision::KeepSpeed => "Keep the current speed and lane",
        Decision::Accelerate => "Speed up within the current lane",
        Decision::Decelerate => "Slow down and keep a safe gap",
        Decision::Stop => "Come to a halt and wait",
        Decision::TurnLeft => "Follow the road to the left",
        Decision::TurnRight => "Follow the road to the right",
        Decision::ChangeLaneLeft => "Move over into the lane on the left",
        Decision::ChangeLaneRight => "Move over into the lane on the right",
    };
    let modifier = match (decision, speed) {
        (
            Decision::TurnLeft | Decision::TurnRight | Decision::ChangeLaneLeft | Decision::ChangeLaneRight,
            Decision::Decelerate,
        ) => " while reducing speed",
        (
            Decision::TurnLeft | Decision::TurnRight | Decision::ChangeLaneLeft | Decision::ChangeLaneRight,
            Decision::Accelerate,
        ) => " while gaining speed",
        _ => "",
    };
    format!("{base}{modifier}.")
}

fn effect(relation: Relation) -> &'static str {
    match relation {
        Relation::AheadInLane => "it limits how closely the ego vehicle can follow",
        Relation::Crossing => "it may pass in front of the ego vehicle",
        Relation::Oncoming => "it approaches the ego vehicle head-on",
        Relation::StaticObstacle => "it blocks the path",
    }
}

/// Reasoning for the scenario's own human trajectory.
pub fn compose_reasoning(
    s: &Scenario,
    critical: &[CriticalObject],
    hypo: &Trajectory,
    cfg: &OracleConfig,
    codec: &CodecConfig,
) -> Result<ReasoningTrace, CodecError> {
    compose_reasoning_for(s, critical, hypo, &s.human_trajectory, cfg, codec)
}

/// Reasoning whose decision is derived from `plan` instead of the human
/// trajectory.
pub fn compose_reasoning_for(
    s: &Scenario,
    critical: &[CriticalObject],
    hypo: &Trajectory,
    plan: &Trajectory,
    cfg: &OracleConfig,
    codec: &CodecConfig,
) -> Result<ReasoningTrace, CodecError> {
    let class_of = |id: &str| {
        s.objects
            .iter()
            .find(|o| o.id == id)
            .map_or("object", |o| o.class_name.as_str())
    };

    let mut critical_lines = Vec::with_capacity(critical.len());
    let mut interaction_lines = Vec::with_capacity(critical.len());
    for c in critical {
        let class = class_of(&c.object_id);
        let center = s
            .objects
            .iter()
            .find(|o| o.id == c.object_id)
            .map(|o| serialize_waypoint(&o.center, codec))
            .transpose()?
            .unwrap_or_default();
        critical_lines.push(format!(
            "- {class} ({}) at {center}: {}, closest approach {:.2} m.",
            c.object_id,
            c.relation.describe(),
            c.min_distance
        ));
        let near = hypo
            .waypoints
            .get(c.first_conflict_step - 1)
            .map(|w| serialize_waypoint(w, codec))
            .transpose()?
            .unwrap_or_default();
        interaction_lines.push(format!(
            "- {class} ({}): from {:.1} s (step {}) it comes within {:.2} m of the unchanged-speed path near {near}; {}.",
            c.object_id,
            cfg.horizon.dt * c.first_conflict_step as f64,
            c.first_conflict_step,
            c.min_distance,
            effect(c.relation)
        ));
    }
    if critical_lines.is_empty() {
        critical_lines.push("- none".to_string());
        interaction_lines.push(format!(
            "- Nothing interferes with the ego vehicle within the next {:.1} s.",
            cfg.horizon.duration()
        ));
    }

    let decision = classify_decision(plan, hypo, cfg);
    let speed = speed_decision(plan, hypo, cfg);
    Ok(ReasoningTrace {
        critical_objects: critical.to_vec(),
        critical_text: critical_lines.join("\n"),
        interaction_text: interaction_lines.join("\n"),
        decision,
        decision_text: decision_sentence(decision, speed),
    })
}

//! Deterministic synthetic scenarios for tests and demos.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DetectedObject, EgoState, Horizon, PredictedMotion, Scenario, Trajectory, Waypoint};
use crate::eval::obb::OrientedBox;
use crate::reasoning::rollout_hypothetical;

// Default ego footprint; the synthetic human trajectories keep clear of it.
const EGO_HALF_LENGTH: f64 = 2.042;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    EmptyRoad,
    LeadVehicle,
    CrossingPedestrian,
    StationaryObstacle,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::EmptyRoad,
        ScenarioKind::LeadVehicle,
        ScenarioKind::CrossingPedestrian,
        ScenarioKind::StationaryObstacle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::EmptyRoad => "empty_road",
            ScenarioKind::LeadVehicle => "lead_vehicle",
            ScenarioKind::CrossingPedestrian => "crossing_pedestrian",
            ScenarioKind::StationaryObstacle => "stationary_obstacle",
        }
    }

    fn salt(&self) -> u64 {
        match self {
            ScenarioKind::EmptyRoad => 0x11,
            ScenarioKind::LeadVehicle => 0x22,
            ScenarioKind::CrossingPedestrian => 0x33,
            ScenarioKind::StationaryObstacle => 0x44,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scenario kind '{s}'"))
    }
}

/// Synthetic scenario on the default 6 x 0.5 s horizon.
pub fn synth_scenario(kind: ScenarioKind, seed: u64) -> Scenario {
    synth_scenario_with(kind, seed, &Horizon::default())
}

pub fn synth_scenario_with(kind: ScenarioKind, seed: u64, horizon: &Horizon) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ kind.salt());
    let raw = match kind {
        ScenarioKind::EmptyRoad => empty_road(&mut rng, horizon),
        ScenarioKind::LeadVehicle => lead_vehicle(&mut rng, horizon),
        ScenarioKind::CrossingPedestrian => crossing_pedestrian(&mut rng, horizon),
        ScenarioKind::StationaryObstacle => stationary_obstacle(&mut rng, horizon),
    };
    let mut s = raw
        .quantized(2)
        .expect("synthetic values are finite");
    s.id = format!("{}-{seed:06}", kind.as_str());
    s
}

fn straight_history(v: f64, dt: f64) -> Vec<Waypoint> {
    (1..=4).rev().map(|k| Waypoint::new(0.0, -v * k as f64 * dt)).collect()
}

fn ego(v: f64, a: f64, dt: f64) -> EgoState {
    EgoState {
        velocity: v,
        acceleration: a,
        heading_rate: 0.0,
        history: straight_history(v, dt),
    }
}

/// Straight-line distance covered after `t` seconds when braking at `decel`
/// (> 0) from `v` down to `floor_speed` and holding it.
fn braked_distance(v: f64, decel: f64, floor_speed: f64, t: f64) -> f64 {
    let t_floor = (v - floor_speed) / decel;
    if t <= t_floor {
        v * t - 0.5 * decel * t * t
    } else {
        v * t_floor - 0.5 * decel * t_floor * t_floor + floor_speed * (t - t_floor)
    }
}

fn linear_motion(start: Waypoint, velocity: (f64, f64), horizon: &Horizon) -> Vec<Waypoint> {
    (0..horizon.steps)
        .map(|i| {
            let t = horizon.time_of(i);
            Waypoint::new(start.x + velocity.0 * t, start.y + velocity.1 * t)
        })
        .collect()
}

fn boxes_along(object: &DetectedObject, future: &[Waypoint]) -> Vec<Vec<OrientedBox>> {
    future
        .iter()
        .map(|c| vec![OrientedBox::new(*c, object.heading, object.length, object.width)])
        .collect()
}

fn empty_road(rng: &mut ChaCha8Rng, horizon: &Horizon) -> Scenario {
    let v = rng.gen_range(3.0..12.0);
    let a = rng.gen_range(-0.3..0.3);
    let ego = ego(v, a, horizon.dt);
    let human = rollout_hypothetical(&ego, horizon);
    Scenario {
        id: String::new(),
        ego,
        objects: Vec::new(),
        predictions: Vec::new(),
        human_trajectory: human,
        gt_object_boxes: vec![Vec::new(); horizon.steps],
    }
}

/// A slower car ahead in the ego lane. Keeping the current speed closes the
/// gap within the horizon; the human driver brakes down to the lead speed.
fn lead_vehicle(rng: &mut ChaCha8Rng, horizon: &Horizon) -> Scenario {
    let v = rng.gen_range(7.0..9.0);
    let lead_speed = rng.gen_range(1.0..2.0);
    let gap = rng.gen_range(10.0..15.0);
    let lateral = rng.gen_range(-0.5..0.5);
    let car = DetectedObject {
        id: "car-0".into(),
        class_name: "car".into(),
        center: Waypoint::new(lateral, gap),
        heading: FRAC_PI_2,
        length: 4.5,
        width: 1.9,
    };
    let future = linear_motion(car.center, (0.0, lead_speed), horizon);
    let clearance = gap - car.length / 2.0 - EGO_HALF_LENGTH - 1.0;
    let decel = (v - lead_speed).powi(2) / (2.0 * clearance);
    let human = (0..horizon.steps)
        .map(|i| Waypoint::new(0.0, braked_distance(v, decel, lead_speed, horizon.time_of(i))))
        .collect();
    Scenario {
        id: String::new(),
        ego: ego(v, 0.0, horizon.dt),
        gt_object_boxes: boxes_along(&car, &future),
        objects: vec![car],
        predictions: vec![PredictedMotion {
            object_id: "car-0".into(),
            future,
        }],
        human_trajectory: Trajectory::new(human, horizon.dt),
    }
}

/// A pedestrian walking across the road ahead; the human driver brakes to a
/// stop before the crossing line.
fn crossing_pedestrian(rng: &mut ChaCha8Rng, horizon: &Horizon) -> Scenario {
    let v = rng.gen_range(5.0..8.0);
    let side = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
    let start_x = side * rng.gen_range(2.5..4.5);
    let crossing_y = rng.gen_range(10.0..15.0);
    let walk = rng.gen_range(1.2..1.6);
    let ped = DetectedObject {
        id: "ped-0".into(),
        class_name: "pedestrian".into(),
        center: Waypoint::new(start_x, crossing_y),
        heading: if side < 0.0 { 0.0 } else { std::f64::consts::PI },
        length: 0.7,
        width: 0.7,
    };
    let future = linear_motion(ped.center, (-side * walk, 0.0), horizon);
    let stop_at = crossing_y - ped.length / 2.0 - EGO_HALF_LENGTH - 2.0;
    let decel = v * v / (2.0 * stop_at);
    let human = (0..horizon.steps)
        .map(|i| Waypoint::new(0.0, braked_distance(v, decel, 0.0, horizon.time_of(i))))
        .collect();
    Scenario {
        id: String::new(),
        ego: ego(v, 0.0, horizon.dt),
        gt_object_boxes: boxes_along(&ped, &future),
        objects: vec![ped],
        predictions: vec![PredictedMotion {
            object_id: "ped-0".into(),
            future,
        }],
        human_trajectory: Trajectory::new(human, horizon.dt),
    }
}

/// A barrier blocking the ego lane; the human driver changes into the left
/// lane at constant speed.
fn stationary_obstacle(rng: &mut ChaCha8Rng, horizon: &Horizon) -> Scenario {
    let v = rng.gen_range(6.0..8.0);
    let barrier = DetectedObject {
        id: "barrier-0".into(),
        class_name: "barrier".into(),
        center: Waypoint::new(rng.gen_range(-0.3..0.3), rng.gen_range(12.0..17.0)),
        heading: 0.0,
        length: 2.0,
        width: 0.5,
    };
    let future = vec![barrier.center; horizon.steps];
    let lane_offset = -3.5;
    let manoeuvre = 1.5;
    let human = (0..horizon.steps)
        .map(|i| {
            let t = horizon.time_of(i);
            let u = (t / manoeuvre).min(1.0);
            let smooth = u * u * (3.0 - 2.0 * u);
            Waypoint::new(lane_offset * smooth, v * t)
        })
        .collect();
    Scenario {
        id: String::new(),
        ego: ego(v, 0.0, horizon.dt),
        gt_object_boxes: boxes_along(&barrier, &future),
        objects: vec![barrier],
        predictions: vec![PredictedMotion {
            object_id: "barrier-0".into(),
            future,
        }],
        human_trajectory: Trajectory::new(human, horizon.dt),
    }
}

use crate::codec::quantize;
use crate::scenario::{EgoState, Horizon, Trajectory, Waypoint};

/// Below this speed the heading rate is not converted into a curvature and
/// the rollout is a straight line.
pub const MIN_CURVATURE_SPEED: f64 = 0.1;

/// Distance travelled after `t` seconds under constant acceleration, with the
/// speed clamped at zero.
fn travelled(v: f64, a: f64, t: f64) -> f64 {
    if a < 0.0 {
        let t_stop = -v / a;
        if t >= t_stop {
            return v * t_stop + 0.5 * a * t_stop * t_stop;
        }
    }
    v * t + 0.5 * a * t * t
}

/// Interference-free rollout of the ego vehicle: constant acceleration with
/// no reversing, laid along the constant-curvature arc `heading_rate /
/// velocity` (straight when the heading rate is zero). Waypoints are quantized
/// to centimeters.
pub fn rollout_hypothetical(ego: &EgoState, horizon: &Horizon) -> Trajectory {
    let v = ego.velocity.max(0.0);
    let curvature = if v > MIN_CURVATURE_SPEED {
        ego.heading_rate / v
    } else {
        0.0
    };
    let waypoints = (0..horizon.steps)
        .map(|i| {
            let s = travelled(v, ego.acceleration, horizon.time_of(i));
            let (x, y) = if curvature.abs() < 1e-12 {
                (0.0, s)
            } else {
                let turned = curvature * s;
                ((turned.cos() - 1.0) / curvature, turned.sin() / curvature)
            };
            Waypoint::new(
                quantize(x, 2).expect("finite rollout"),
                quantize(y, 2).expect("finite rollout"),
            )
        })
        .collect();
    Trajectory::new(waypoints, horizon.dt)
}

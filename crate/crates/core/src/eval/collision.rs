use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::obb::{obb_intersects, OrientedBox};
use crate::scenario::{Trajectory, Waypoint};

/// Segments shorter than this keep the previous heading, meters.
const MIN_SEGMENT: f64 = 0.01;

/// Footprint of the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoDims {
    pub length: f64,
    pub width: f64,
}

impl Default for EgoDims {
    fn default() -> Self {
        Self {
            length: 4.084,
            width: 1.730,
        }
    }
}

impl EgoDims {
    pub fn is_valid(&self) -> bool {
        self.length > 0.0 && self.width > 0.0 && self.length.is_finite() && self.width.is_finite()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("{boxes} box lists for a {steps}-step trajectory")]
    Misaligned { steps: usize, boxes: usize },
}

/// Heading of the segment ending at waypoint `i`. The segment of waypoint 0
/// starts at the origin; degenerate segments carry the previous heading,
/// starting from `initial_heading`.
pub fn heading_from_trajectory(t: &Trajectory, i: usize, initial_heading: f64) -> f64 {
    let mut heading = initial_heading;
    let mut prev = Waypoint::ORIGIN;
    for w in t.waypoints.iter().take(i + 1) {
        let (dx, dy) = (w.x - prev.x, w.y - prev.y);
        if dx.hypot(dy) >= MIN_SEGMENT {
            heading = dy.atan2(dx);
        }
        prev = *w;
    }
    heading
}

/// Ego box at every waypoint, oriented along the trajectory.
pub fn ego_boxes(t: &Trajectory, ego: &EgoDims, initial_heading: f64) -> Vec<OrientedBox> {
    (0..t.len())
        .map(|i| {
            OrientedBox::new(
                t.waypoints[i],
                heading_from_trajectory(t, i, initial_heading),
                ego.length,
                ego.width,
            )
        })
        .collect()
}

/// Per-step collision flags: the ego box at step `i` against every
/// ground-truth box of step `i`.
pub fn collision_steps(
    planned: &Trajectory,
    gt_object_boxes: &[Vec<OrientedBox>],
    ego: &EgoDims,
    initial_heading: f64,
) -> Result<Vec<bool>, CollisionError> {
    if gt_object_boxes.len() != planned.len() {
        return Err(CollisionError::Misaligned {
            steps: planned.len(),
            boxes: gt_object_boxes.len(),
        });
    }
    Ok(ego_boxes(planned, ego, initial_heading)
        .iter()
        .zip(gt_object_boxes)
        .map(|(e, boxes)| boxes.iter().any(|b| obb_intersects(e, b)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::EGO_HEADING;
    use proptest::prelude::*;

    fn traj(points: &[(f64, f64)]) -> Trajectory {
        Trajectory::new(points.iter().map(|&(x, y)| Waypoint::new(x, y)).collect(), 0.5)
    }

    #[test]
    fn straight_ahead_keeps_initial() {
        let t = traj(&[(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)]);
        for i in 0..3 {
            assert!((heading_from_trajectory(&t, i, EGO_HEADING) - EGO_HEADING).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_uses_initial() {
        let t = traj(&[(0.0, 0.0); 6]);
        for i in 0..6 {
            assert_eq!(heading_from_trajectory(&t, i, 0.7), 0.7);
        }
    }

    #[test]
    fn right_turn_against_circle_tangent() {
        // Circle of radius 10 centered at (10, 0), traversed clockwise from the
        // origin; the chord to the point at angle a has direction pi/2 - a/2
        // relative to the previous point's.
        let r: f64 = 10.0;
        let angles: Vec<f64> = (1..=6).map(|k| (k as f64 * 15.0).to_radians()).collect();
        let points: Vec<(f64, f64)> = angles.iter().map(|a| (r - r * a.cos(), r * a.sin())).collect();
        let t = traj(&points);
        let mut prev_angle = 0.0;
        let mut prev_heading = f64::INFINITY;
        for (i, a) in angles.iter().enumerate() {
            let h = heading_from_trajectory(&t, i, EGO_HEADING);
            let chord = std::f64::consts::FRAC_PI_2 - (prev_angle + a) / 2.0;
            assert!((h - chord).abs() < 1e-9, "step {i}: {h} vs {chord}");
            assert!(h < prev_heading);
            prev_heading = h;
            prev_angle = *a;
        }
    }

    #[test]
    fn no_boxes_no_collision() {
        let t = traj(&[(0.0, 1.0), (0.0, 2.0)]);
        let flags = collision_steps(&t, &[vec![], vec![]], &EgoDims::default(), EGO_HEADING).unwrap();
        assert_eq!(flags, vec![false, false]);
    }

    #[test]
    fn same_size_box_on_waypoint() {
        let t = traj(&[(0.0, 1.0), (0.0, 2.0)]);
        let e = EgoDims::default();
        let other = OrientedBox::new(Waypoint::new(0.0, 2.0), EGO_HEADING, e.length, e.width);
        let flags = collision_steps(&t, &[vec![], vec![other]], &e, EGO_HEADING).unwrap();
        assert_eq!(flags, vec![false, true]);
    }

    #[test]
    fn misaligned() {
        let t = traj(&[(0.0, 1.0), (0.0, 2.0)]);
        assert_eq!(
            collision_steps(&t, &[vec![]], &EgoDims::default(), EGO_HEADING),
            Err(CollisionError::Misaligned { steps: 2, boxes: 1 })
        );
    }

    proptest! {
        #[test]
        fn inflation_is_monotone(
            pts in proptest::collection::vec((-5.0f64..5.0, 0.0f64..20.0), 6),
            objs in proptest::collection::vec((-5.0f64..5.0, 0.0f64..20.0, -3.0f64..3.0), 6),
            grow_l in 0.0f64..2.0,
            grow_w in 0.0f64..2.0,
        ) {
            let t = traj(&pts);
            let boxes: Vec<Vec<OrientedBox>> = objs
                .iter()
                .map(|&(x, y, h)| vec![OrientedBox::new(Waypoint::new(x, y), h, 4.0, 1.8)])
                .collect();
            let small = EgoDims::default();
            let big = EgoDims { length: small.length + grow_l, width: small.width + grow_w };
            let a = collision_steps(&t, &boxes, &small, EGO_HEADING).unwrap();
            let b = collision_steps(&t, &boxes, &big, EGO_HEADING).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(!*x || *y);
            }
        }
    }
}

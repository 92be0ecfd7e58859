//! Oriented rectangles and their separating-axis intersection test.

use serde::{Deserialize, Serialize};

use crate::scenario::Waypoint;

/// A rectangle with `length` along `heading` and `width` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Waypoint,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Waypoint, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            length,
            width,
        }
    }

    /// Unit vectors along the length and the width.
    pub fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.heading.sin_cos();
        [(c, s), (-s, c)]
    }

    pub fn corners(&self) -> [Waypoint; 4] {
        let [(ux, uy), (vx, vy)] = self.axes();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let c = self.center;
        [
            Waypoint::new(c.x + ux * hl + vx * hw, c.y + uy * hl + vy * hw),
            Waypoint::new(c.x - ux * hl + vx * hw, c.y - uy * hl + vy * hw),
            Waypoint::new(c.x - ux * hl - vx * hw, c.y - uy * hl - vy * hw),
            Waypoint::new(c.x + ux * hl - vx * hw, c.y + uy * hl - vy * hw),
        ]
    }

    /// Half-extent of the box projected onto a unit axis.
    fn radius_along(&self, axis: (f64, f64)) -> f64 {
        let [u, v] = self.axes();
        let dot = |a: (f64, f64), b: (f64, f64)| a.0 * b.0 + a.1 * b.1;
        self.length / 2.0 * dot(u, axis).abs() + self.width / 2.0 * dot(v, axis).abs()
    }
}

/// Largest gap between the projections of `a` and `b` over the four face
/// normals. Positive means separated by at least that much along some axis;
/// zero or negative means the boxes touch or overlap.
pub fn separation(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let d = (b.center.x - a.center.x, b.center.y - a.center.y);
    a.axes()
        .into_iter()
        .chain(b.axes())
        .map(|axis| {
            let dist = (d.0 * axis.0 + d.1 * axis.1).abs();
            dist - a.radius_along(axis) - b.radius_along(axis)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True iff the rectangles overlap; touching edges count.
pub fn obb_intersects(a: &OrientedBox, b: &OrientedBox) -> bool {
    separation(a, b) <= 0.0
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::Trajectory;

/// How errors up to a horizon are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Convention {
    /// Error of the single waypoint at the horizon.
    AtStep,
    /// Mean error over all waypoints up to and including the horizon.
    CumulativeMean,
}

impl L2Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            L2Convention::AtStep => "at_step",
            L2Convention::CumulativeMean => "cumulative_mean",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum L2Error {
    #[error("trajectory lengths differ: planned {planned}, ground truth {gt}")]
    LengthMismatch { planned: usize, gt: usize },
    #[error("time steps differ: planned {planned} s, ground truth {gt} s")]
    DtMismatch { planned: f64, gt: f64 },
    #[error("horizon {horizon_s} s is not a waypoint time of a {steps} x {dt} s trajectory")]
    BadHorizon { horizon_s: f64, steps: usize, dt: f64 },
}

/// Euclidean error of every waypoint.
pub fn per_step_errors(planned: &Trajectory, gt: &Trajectory) -> Result<Vec<f64>, L2Error> {
    if planned.len() != gt.len() {
        return Err(L2Error::LengthMismatch {
            planned: planned.len(),
            gt: gt.len(),
        });
    }
    if (planned.dt - gt.dt).abs() > 1e-9 {
        return Err(L2Error::DtMismatch {
            planned: planned.dt,
            gt: gt.dt,
        });
    }
    Ok(planned
        .waypoints
        .iter()
        .zip(&gt.waypoints)
        .map(|(p, g)| p.distance(g))
        .collect())
}

/// Number of waypoints up to `horizon_s`.
pub fn steps_within(horizon_s: f64, steps: usize, dt: f64) -> Result<usize, L2Error> {
    let k = horizon_s / dt;
    let rounded = k.round();
    if !k.is_finite() || (k - rounded).abs() > 1e-9 || rounded < 1.0 || rounded as usize > steps {
        return Err(L2Error::BadHorizon { horizon_s, steps, dt });
    }
    Ok(rounded as usize)
}

pub fn aggregate(errors: &[f64], k: usize, convention: L2Convention) -> f64 {
    match convention {
        L2Convention::AtStep => errors[k - 1],
        L2Convention::CumulativeMean => errors[..k].iter().sum::<f64>() / k as f64,
    }
}

pub fn l2_at_horizon(
    planned: &Trajectory,
    gt: &Trajectory,
    horizon_s: f64,
    convention: L2Convention,
) -> Result<f64, L2Error> {
    let errors = per_step_errors(planned, gt)?;
    let k = steps_within(horizon_s, gt.len(), gt.dt)?;
    Ok(aggregate(&errors, k, convention))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Waypoint;
    use proptest::prelude::*;

    fn traj(points: Vec<(f64, f64)>) -> Trajectory {
        Trajectory::new(points.into_iter().map(|(x, y)| Waypoint::new(x, y)).collect(), 0.5)
    }

    fn lateral_errors() -> (Trajectory, Trajectory) {
        let gt = traj((1..=6).map(|k| (0.0, 2.0 * k as f64)).collect());
        let planned = traj((1..=6).map(|k| (0.3 * k as f64, 2.0 * k as f64)).collect());
        (planned, gt)
    }

    #[test]
    fn identity() {
        let (_, gt) = lateral_errors();
        for h in [0.5, 1.0, 2.0, 3.0] {
            for c in [L2Convention::AtStep, L2Convention::CumulativeMean] {
                assert_eq!(l2_at_horizon(&gt, &gt, h, c).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn hand_computed_conventions() {
        let (planned, gt) = lateral_errors();
        let at = |h| l2_at_horizon(&planned, &gt, h, L2Convention::AtStep).unwrap();
        let cum = |h| l2_at_horizon(&planned, &gt, h, L2Convention::CumulativeMean).unwrap();
        // Errors 0.3, 0.6, ..., 1.8: the step value and the running mean.
        assert!((at(1.0) - 0.6).abs() < 1e-9);
        assert!((at(2.0) - 1.2).abs() < 1e-9);
        assert!((at(3.0) - 1.8).abs() < 1e-9);
        assert!((cum(1.0) - 0.45).abs() < 1e-9);
        assert!((cum(2.0) - 0.75).abs() < 1e-9);
        assert!((cum(3.0) - 1.05).abs() < 1e-9);
    }

    #[test]
    fn constant_offset() {
        let (_, gt) = lateral_errors();
        let shifted = traj(gt.waypoints.iter().map(|w| (w.x + 1.0, w.y)).collect());
        for h in [1.0, 2.0, 3.0] {
            for c in [L2Convention::AtStep, L2Convention::CumulativeMean] {
                assert!((l2_at_horizon(&shifted, &gt, h, c).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        let (planned, gt) = lateral_errors();
        assert!(matches!(
            l2_at_horizon(&planned, &gt, 3.5, L2Convention::AtStep),
            Err(L2Error::BadHorizon { .. })
        ));
        assert!(matches!(
            l2_at_horizon(&planned, &gt, 0.75, L2Convention::AtStep),
            Err(L2Error::BadHorizon { .. })
        ));
        let short = traj(vec![(0.0, 1.0)]);
        assert_eq!(
            l2_at_horizon(&short, &gt, 0.5, L2Convention::AtStep),
            Err(L2Error::LengthMismatch { planned: 1, gt: 6 })
        );
    }

    fn arb_traj() -> impl Strategy<Value = Trajectory> {
        proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 6).prop_map(traj)
    }

    proptest! {
        #[test]
        fn translation_consistent(a in arb_traj(), b in arb_traj(), dx in -20.0f64..20.0, dy in -20.0f64..20.0) {
            let shift = |t: &Trajectory| traj(t.waypoints.iter().map(|w| (w.x + dx, w.y + dy)).collect());
            for c in [L2Convention::AtStep, L2Convention::CumulativeMean] {
                let before = l2_at_horizon(&a, &b, 3.0, c).unwrap();
                let after = l2_at_horizon(&shift(&a), &shift(&b), 3.0, c).unwrap();
                prop_assert!((before - after).abs() < 1e-9);
            }
        }

        #[test]
        fn mean_between_extremes(a in arb_traj(), b in arb_traj()) {
            let errors = per_step_errors(&a, &b).unwrap();
            let mean = l2_at_horizon(&a, &b, 3.0, L2Convention::CumulativeMean).unwrap();
            let lo = errors.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-9 <= mean && mean <= hi + 1e-9);
            prop_assert!(mean >= 0.0);
        }
    }
}

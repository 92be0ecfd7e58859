use super::{CriticalObject, Relation};
use crate::scenario::{DetectedObject, PredictedMotion, Scenario, Trajectory, Waypoint};

/// Displacement below which a predicted object is treated as static, meters.
const STATIC_DISPLACEMENT: f64 = 0.5;
/// |cos| of the motion direction against the ego heading that separates
/// along-lane motion from crossing motion.
const ALONG_LANE_COS: f64 = 0.7;

fn relation(object: &DetectedObject, prediction: Option<&PredictedMotion>) -> Relation {
    let last = prediction.and_then(|p| p.future.last()).copied();
    let Some(last) = last else {
        return Relation::StaticObstacle;
    };
    let (dx, dy) = (last.x - object.center.x, last.y - object.center.y);
    let moved = dx.hypot(dy);
    if moved < STATIC_DISPLACEMENT {
        return Relation::StaticObstacle;
    }
    let cos = dy / moved;
    if cos >= ALONG_LANE_COS {
        Relation::AheadInLane
    } else if cos <= -ALONG_LANE_COS {
        Relation::Oncoming
    } else {
        Relation::Crossing
    }
}

/// Position of `object` at 0-based step `i`: the prediction when one exists,
/// otherwise the current center.
fn position_at(object: &DetectedObject, prediction: Option<&PredictedMotion>, i: usize) -> Waypoint {
    prediction
        .and_then(|p| p.future.get(i))
        .copied()
        .unwrap_or(object.center)
}

/// Objects that come within `lateral_threshold` of the hypothetical rollout
/// at the same horizon step, ordered by first conflict step, then minimum
/// distance, then id.
pub fn find_critical_objects(s: &Scenario, hypo: &Trajectory, lateral_threshold: f64) -> Vec<CriticalObject> {
    let mut out: Vec<CriticalObject> = s
        .objects
        .iter()
        .filter_map(|object| {
            let prediction = s.prediction_for(&object.id);
            let distances: Vec<f64> = hypo
                .waypoints
                .iter()
                .enumerate()
                .map(|(i, w)| position_at(object, prediction, i).distance(w))
                .collect();
            let first = distances.iter().position(|d| *d < lateral_threshold)?;
            let min_distance = distances.iter().copied().fold(f64::INFINITY, f64::min);
            Some(CriticalObject {
                object_id: object.id.clone(),
                first_conflict_step: first + 1,
                min_distance,
                relation: relation(object, prediction),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.first_conflict_step
            .cmp(&b.first_conflict_step)
            .then(a.min_distance.total_cmp(&b.min_distance))
            .then_with(|| a.object_id.cmp(&b.object_id))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::rollout_hypothetical;
    use crate::scenario::{synth_scenario, EgoState, Horizon, ScenarioKind};
    use proptest::prelude::*;

    fn object(id: &str, x: f64, y: f64) -> DetectedObject {
        DetectedObject {
            id: id.into(),
            class_name: "car".into(),
            center: Waypoint::new(x, y),
            heading: 0.0,
            length: 4.0,
            width: 2.0,
        }
    }

    fn scenario(objects: Vec<DetectedObject>, predictions: Vec<PredictedMotion>) -> Scenario {
        let mut s = synth_scenario(ScenarioKind::EmptyRoad, 0);
        s.objects = objects;
        s.predictions = predictions;
        s
    }

    fn hypo_2_5_per_step() -> Trajectory {
        let ego = EgoState {
            velocity: 5.0,
            acceleration: 0.0,
            heading_rate: 0.0,
            history: Vec::new(),
        };
        rollout_hypothetical(&ego, &Horizon::default())
    }

    /// Brute-force table of distances for every (object, step) pair.
    fn distance_table(s: &Scenario, hypo: &Trajectory) -> Vec<Vec<f64>> {
        s.objects
            .iter()
            .map(|o| {
                let p = s.predictions.iter().find(|p| p.object_id == o.id);
                hypo.waypoints
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let pos = p.map(|p| p.future[i]).unwrap_or(o.center);
                        ((pos.x - w.x).powi(2) + (pos.y - w.y).powi(2)).sqrt()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn stationary_object_on_path() {
        // v = 2, a = 6: waypoints at y = 1.75, 5.00, ... so the hypothetical
        // path passes through (0, 5) at step 2 and is 3.25 m away at step 1.
        let ego = EgoState {
            velocity: 2.0,
            acceleration: 6.0,
            heading_rate: 0.0,
            history: Vec::new(),
        };
        let hypo = rollout_hypothetical(&ego, &Horizon::default());
        assert_eq!(hypo.waypoints[1], Waypoint::new(0.0, 5.0));
        let s = scenario(vec![object("o", 0.0, 5.0)], vec![]);
        let table = distance_table(&s, &hypo);
        let first = table[0].iter().position(|d| *d < 3.0).unwrap() + 1;
        let min = table[0].iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(first, 2);
        let found = find_critical_objects(&s, &hypo, 3.0);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].first_conflict_step, first);
        assert_eq!(found[0].min_distance, min);
        assert_eq!(found[0].relation, Relation::StaticObstacle);
    }

    #[test]
    fn brute_force_agreement() {
        for seed in 0..40 {
            for kind in ScenarioKind::ALL {
                let s = synth_scenario(kind, seed);
                let hypo = rollout_hypothetical(&s.ego, &Horizon::default());
                let table = distance_table(&s, &hypo);
                let found = find_critical_objects(&s, &hypo, 3.0);
                for (o, row) in s.objects.iter().zip(&table) {
                    let hit = found.iter().find(|c| c.object_id == o.id);
                    match row.iter().position(|d| *d < 3.0) {
                        Some(i) => assert_eq!(hit.unwrap().first_conflict_step, i + 1),
                        None => assert!(hit.is_none()),
                    }
                }
            }
        }
    }

    #[test]
    fn far_field_object() {
        let hypo = hypo_2_5_per_step();
        let s = scenario(
            vec![object("far", 30.0, 30.0)],
            vec![PredictedMotion {
                object_id: "far".into(),
                future: vec![Waypoint::new(30.0, 30.0); 6],
            }],
        );
        assert!(find_critical_objects(&s, &hypo, 3.0).is_empty());
    }

    #[test]
    fn empty_road() {
        let s = synth_scenario(ScenarioKind::EmptyRoad, 4);
        let hypo = rollout_hypothetical(&s.ego, &Horizon::default());
        assert!(find_critical_objects(&s, &hypo, 3.0).is_empty());
    }

    #[test]
    fn prediction_is_time_aligned() {
        let hypo = hypo_2_5_per_step();
        // Object moves away faster than ego: current position is close to
        // the path but no predicted position coincides in time.
        let future = (1..=6).map(|k| Waypoint::new(0.0, 6.0 + 6.0 * k as f64)).collect();
        let s = scenario(
            vec![object("runner", 0.0, 6.0)],
            vec![PredictedMotion { object_id: "runner".into(), future }],
        );
        assert!(find_critical_objects(&s, &hypo, 3.0).is_empty());
    }

    #[test]
    fn relations() {
        let o = object("x", 0.0, 10.0);
        let pred = |dx: f64, dy: f64| PredictedMotion {
            object_id: "x".into(),
            future: vec![Waypoint::new(dx, 10.0 + dy); 6],
        };
        assert_eq!(relation(&o, None), Relation::StaticObstacle);
        assert_eq!(relation(&o, Some(&pred(0.1, 0.1))), Relation::StaticObstacle);
        assert_eq!(relation(&o, Some(&pred(0.0, 5.0))), Relation::AheadInLane);
        assert_eq!(relation(&o, Some(&pred(0.0, -5.0))), Relation::Oncoming);
        assert_eq!(relation(&o, Some(&pred(4.0, 0.5))), Relation::Crossing);
    }

    fn arb_scenario() -> impl Strategy<Value = Scenario> {
        proptest::collection::vec((-10.0f64..10.0, 0.0f64..30.0), 0..6).prop_map(|centers| {
            let objects = centers
                .iter()
                .enumerate()
                .map(|(i, (x, y))| object(&format!("o{i}"), *x, *y))
                .collect();
            scenario(objects, vec![])
        })
    }

    proptest! {
        #[test]
        fn order_invariant(s in arb_scenario(), rot in 0usize..6) {
            let hypo = hypo_2_5_per_step();
            let mut shuffled = s.clone();
            if !shuffled.objects.is_empty() {
                let k = rot % shuffled.objects.len();
                shuffled.objects.rotate_left(k);
                shuffled.objects.reverse();
            }
            prop_assert_eq!(find_critical_objects(&s, &hypo, 3.0), find_critical_objects(&shuffled, &hypo, 3.0));
        }

        #[test]
        fn monotone_in_threshold(s in arb_scenario(), small in 0.1f64..5.0, extra in 0.0f64..5.0) {
            let hypo = hypo_2_5_per_step();
            let a = find_critical_objects(&s, &hypo, small);
            let b = find_critical_objects(&s, &hypo, small + extra);
            for c in &a {
                prop_assert!(b.iter().any(|d| d.object_id == c.object_id));
            }
        }
    }
}

//! Open-loop metrics: L2 error against the human trajectory and collision
//! rate of the ego box against ground-truth object boxes.

mod collision;
mod l2;
pub mod obb;
mod report;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::plan::{ParseQuality, PlanOutput};
use crate::reasoning::rollout_hypothetical;
use crate::scenario::{Horizon, Scenario, EGO_HEADING};

pub use collision::{collision_steps, ego_boxes, heading_from_trajectory, CollisionError, EgoDims};
pub use l2::{l2_at_horizon, per_step_errors, steps_within, L2Convention, L2Error};
pub use report::{EvaluationReport, ScenarioMetrics, ScenarioStatus};

/// What happens to scenarios whose completion could not be parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackPolicy {
    /// Leave them out of L2 and collision statistics.
    Exclude,
    /// Evaluate the interference-free rollout in their place.
    SubstituteHypothetical,
}

impl FallbackPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            FallbackPolicy::Exclude => "exclude",
            FallbackPolicy::SubstituteHypothetical => "substitute_hypothetical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub horizon: Horizon,
    pub ego: EgoDims,
    pub fallback: FallbackPolicy,
    /// Ignore steps at which the human trajectory itself collides.
    pub mask_gt_collisions: bool,
    /// Reported horizons, seconds.
    pub report_horizons: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::for_horizon(Horizon::default())
    }
}

impl EvalConfig {
    /// Defaults with one report column per whole second of `horizon`.
    pub fn for_horizon(horizon: Horizon) -> Self {
        let whole = (horizon.duration() + 1e-9).floor() as usize;
        let mut report_horizons: Vec<f64> = (1..=whole).map(|s| s as f64).collect();
        if report_horizons.is_empty() {
            report_horizons.push(horizon.duration());
        }
        Self {
            horizon,
            ego: EgoDims::default(),
            fallback: FallbackPolicy::SubstituteHypothetical,
            mask_gt_collisions: false,
            report_horizons,
        }
    }

    /// SHA-256 of the JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no results to evaluate")]
    Empty,
    #[error("no scenario could be evaluated ({failed} failed parses excluded)")]
    NothingEvaluated { failed: usize },
    #[error("invalid ego dimensions")]
    EgoDims,
    #[error("scenario {scenario_id}: {source}")]
    L2 { scenario_id: String, source: L2Error },
    #[error("scenario {scenario_id}: {source}")]
    Collision {
        scenario_id: String,
        source: CollisionError,
    },
}

fn evaluate_one(
    s: &Scenario,
    out: &PlanOutput,
    cfg: &EvalConfig,
    steps: &[usize],
) -> Result<ScenarioMetrics, EvalError> {
    let failed = out.parse_quality == ParseQuality::Failed;
    let planned = match (&out.trajectory, failed, cfg.fallback) {
        (_, true, FallbackPolicy::Exclude) | (None, false, _) => {
            return Ok(ScenarioMetrics::excluded(s, out.parse_quality));
        }
        (_, true, FallbackPolicy::SubstituteHypothetical) => rollout_hypothetical(&s.ego, &cfg.horizon),
        (Some(t), false, _) => t.clone(),
    };

    let l2_err = |source| EvalError::L2 {
        scenario_id: s.id.clone(),
        source,
    };
    let coll_err = |source| EvalError::Collision {
        scenario_id: s.id.clone(),
        source,
    };
    let errors = per_step_errors(&planned, &s.human_trajectory).map_err(l2_err)?;
    let mut flags = collision_steps(&planned, &s.gt_object_boxes, &cfg.ego, EGO_HEADING).map_err(coll_err)?;
    if cfg.mask_gt_collisions {
        let gt_flags =
            collision_steps(&s.human_trajectory, &s.gt_object_boxes, &cfg.ego, EGO_HEADING).map_err(coll_err)?;
        for (f, g) in flags.iter_mut().zip(gt_flags) {
            *f = *f && !g;
        }
    }

    Ok(ScenarioMetrics {
        scenario_id: s.id.clone(),
        parse_quality: out.parse_quality,
        status: if failed {
            ScenarioStatus::Substituted
        } else {
            ScenarioStatus::Evaluated
        },
        l2_at_step: steps
            .iter()
            .map(|&k| l2::aggregate(&errors, k, L2Convention::AtStep))
            .collect(),
        l2_cumulative_mean: steps
            .iter()
            .map(|&k| l2::aggregate(&errors, k, L2Convention::CumulativeMean))
            .collect(),
        collided: steps.iter().map(|&k| flags[..k].iter().any(|f| *f)).collect(),
    })
}

/// Aggregates per-scenario metrics over a dataset. The result does not
/// depend on the order of `results`.
pub fn evaluate_dataset(results: &[(Scenario, PlanOutput)], cfg: &EvalConfig) -> Result<EvaluationReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    if !cfg.ego.is_valid() {
        return Err(EvalError::EgoDims);
    }
    let steps: Vec<usize> = cfg
        .report_horizons
        .iter()
        .map(|&h| steps_within(h, cfg.horizon.steps, cfg.horizon.dt))
        .collect::<Result<_, _>>()
        .map_err(|source| EvalError::L2 {
            scenario_id: String::new(),
            source,
        })?;

    let mut order: Vec<&(Scenario, PlanOutput)> = results.iter().collect();
    order.sort_by(|a, b| a.0.id.cmp(&b.0.id).then_with(|| a.1.raw_text.cmp(&b.1.raw_text)));

    let per_scenario = order
        .iter()
        .map(|(s, out)| evaluate_one(s, out, cfg, &steps))
        .collect::<Result<Vec<_>, _>>()?;
    EvaluationReport::aggregate(per_scenario, cfg)
}

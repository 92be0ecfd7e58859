use super::{compose_reasoning, find_critical_objects, rollout_hypothetical, OracleConfig, TRAJECTORY_LABEL};
use crate::codec::{serialize_trajectory, CodecConfig, CodecError};
use crate::prompt::{build_prompt, PlannerPrompt};
use crate::scenario::Scenario;

/// One supervised fine-tuning record: the planner prompt and the reasoning
/// plus trajectory the model should answer with.
#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneExample {
    pub scenario_id: String,
    pub prompt: PlannerPrompt,
    pub target_reasoning: String,
    pub target_trajectory_text: String,
}

impl FineTuneExample {
    /// The full assistant message.
    pub fn assistant_text(&self) -> String {
        format!(
            "{}\n{TRAJECTORY_LABEL} {}",
            self.target_reasoning, self.target_trajectory_text
        )
    }
}

/// Builds the fine-tuning record for `s`, whose target trajectory is the
/// human trajectory.
pub fn make_finetune_example(
    s: &Scenario,
    oracle: &OracleConfig,
    codec: &CodecConfig,
) -> Result<FineTuneExample, CodecError> {
    let hypo = rollout_hypothetical(&s.ego, &oracle.horizon);
    let critical = find_critical_objects(s, &hypo, oracle.lateral_threshold);
    let trace = compose_reasoning(s, &critical, &hypo, oracle, codec)?;
    Ok(FineTuneExample {
        scenario_id: s.id.clone(),
        prompt: build_prompt(s, &oracle.horizon, codec)?,
        target_reasoning: trace.render(),
        target_trajectory_text: serialize_trajectory(&s.human_trajectory, codec)?,
    })
}

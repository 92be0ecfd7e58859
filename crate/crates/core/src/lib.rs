//! Motion planning as language modeling.
//!
//! Driving scenarios are rendered into text prompts, a chat-completion backend
//! (or an offline stub) answers with a reasoning trace followed by a trajectory
//! in a fixed decimal text format, and the parsed plans are scored with
//! open-loop L2 and collision metrics.
//!
//! The crate is organised along the pipeline:
//!
//! * [`scenario`] - data model, JSON ingest, dataset splits, synthetic fixtures
//! * [`codec`] - fixed-precision trajectory text format and its parser
//! * [`prompt`] - system and user prompt rendering, in-context exemplars
//! * [`reasoning`] - supervision targets (hypothetical rollout, critical objects)
//! * [`backend`] - chat-completion client, stubs, fine-tune JSONL export
//! * [`plan`] - completion text back to a structured plan
//! * [`eval`] - L2, oriented-box collision, dataset reports

pub mod backend;
pub mod codec;
pub mod eval;
pub mod plan;
pub mod prompt;
pub mod reasoning;
pub mod scenario;

pub use codec::{parse_trajectory, quantize, serialize_trajectory, CodecConfig, CodecError};
pub use eval::obb::{obb_intersects, OrientedBox};
pub use plan::{parse_plan_output, ParseQuality, PlanOutput};
pub use prompt::PlannerPrompt;
pub use reasoning::{Decision, FineTuneExample, ReasoningTrace};
pub use scenario::{
    DetectedObject, EgoState, Horizon, PredictedMotion, Scenario, Trajectory, Waypoint,
};

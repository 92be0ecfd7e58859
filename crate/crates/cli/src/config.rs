use std::fs;
use std::path::{Path, PathBuf};

use lmplanner_core::backend::BackendConfig;
use lmplanner_core::eval::{EgoDims, EvalConfig, FallbackPolicy};
use lmplanner_core::reasoning::OracleConfig;
use lmplanner_core::{CodecConfig, Horizon};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fraction: f64,
    pub seed: u64,
}

/// Everything a pipeline run depends on. Serializable so a run can be
/// reproduced from a single JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub backend: BackendConfig,
    pub codec: CodecConfig,
    pub horizon_steps: usize,
    pub dt: f64,
    pub split: Option<SplitSpec>,
    pub fallback_policy: FallbackPolicy,
    pub output_dir: PathBuf,
    /// In-context exemplars per prompt, 0 for plain prompting.
    pub exemplars: usize,
    /// Scenarios the exemplars are drawn from, in file order.
    pub exemplar_scenarios: Option<PathBuf>,
    pub ego: EgoDims,
    pub mask_gt_collisions: bool,
    /// `evaluate` fails when the share of failed parses exceeds this.
    pub max_failure_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = Horizon::default();
        Self {
            scenario_path: PathBuf::from("scenarios.json"),
            backend: BackendConfig::default(),
            codec: CodecConfig::default(),
            horizon_steps: h.steps,
            dt: h.dt,
            split: None,
            fallback_policy: FallbackPolicy::SubstituteHypothetical,
            output_dir: PathBuf::from("out"),
            exemplars: 0,
            exemplar_scenarios: None,
            ego: EgoDims::default(),
            mask_gt_collisions: false,
            max_failure_rate: 0.25,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn horizon(&self) -> Horizon {
        Horizon::new(self.horizon_steps, self.dt)
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig {
            horizon: self.horizon(),
            ..OracleConfig::default()
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            ego: self.ego,
            fallback: self.fallback_policy,
            mask_gt_collisions: self.mask_gt_collisions,
            ..EvalConfig::for_horizon(self.horizon())
        }
    }

    pub fn results_path(&self) -> PathBuf {
        self.output_dir.join("results.jsonl")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.horizon().is_valid() {
            return Err(CliError::Config("horizon_steps must be >= 1 and dt > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return Err(CliError::Config("max_failure_rate must be in [0, 1]".into()));
        }
        if !self.ego.is_valid() {
            return Err(CliError::Config("ego dimensions must be positive".into()));
        }
        self.codec.validate()?;
        self.backend.validate()?;
        Ok(())
    }
}

//! Pipeline commands behind the `lmplanner` binary.

mod config;
mod results;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use lmplanner_core::backend::{export_finetune_jsonl, Backend, BackendError, BackendMode};
use lmplanner_core::eval::{evaluate_dataset, EvalError, EvaluationReport, FallbackPolicy};
use lmplanner_core::prompt::{build_prompt, pack_exemplars, template_hash, PromptError};
use lmplanner_core::reasoning::{make_finetune_example, rollout_hypothetical};
use lmplanner_core::scenario::{
    load_scenarios, sample_split, save_scenarios, synth_scenario_with, ScenarioError, ScenarioKind, SplitError,
};
use lmplanner_core::{parse_plan_output, CodecError, FineTuneExample, ParseQuality, PlanOutput, Scenario};
use serde::Serialize;
use thiserror::Error;

pub use config::{RunConfig, SplitSpec};
pub use results::{read_results, write_results, ResultRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no scenarios in {0}")]
    NoScenarios(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: corrupt result record: {message}")]
    Results { path: PathBuf, line: usize, message: String },
    #[error("result for unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))
}

/// Loads the configured scenarios and applies the split, if any.
fn load_selected(cfg: &RunConfig) -> Result<Vec<Scenario>, CliError> {
    let all = load_scenarios(&cfg.scenario_path, &cfg.horizon(), cfg.codec.decimals)?;
    if all.is_empty() {
        return Err(CliError::NoScenarios(cfg.scenario_path.clone()));
    }
    match cfg.split {
        Some(split) => Ok(sample_split(&all, split.fraction, split.seed)?),
        None => Ok(all),
    }
}

fn exemplar_pool(cfg: &RunConfig) -> Result<Vec<FineTuneExample>, CliError> {
    if cfg.exemplars == 0 {
        return Ok(Vec::new());
    }
    let path = cfg
        .exemplar_scenarios
        .as_ref()
        .ok_or_else(|| CliError::Config("exemplars requested without exemplar_scenarios".into()))?;
    load_scenarios(path, &cfg.horizon(), cfg.codec.decimals)?
        .iter()
        .map(|s| make_finetune_example(s, &cfg.oracle(), &cfg.codec).map_err(CliError::from))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PlanSummary {
    pub scenarios: usize,
    pub clean: usize,
    pub recovered: usize,
    pub failed: usize,
    pub fallbacks: usize,
}

fn plan_one(
    cfg: &RunConfig,
    backend: &Backend,
    pool: &[FineTuneExample],
    s: &Scenario,
) -> Result<ResultRecord, CliError> {
    let horizon = cfg.horizon();
    let prompt = pack_exemplars(build_prompt(s, &horizon, &cfg.codec)?, pool, cfg.exemplars)?;
    // Stubs are deterministic, so only remote completions are worth asking again.
    let attempts = match cfg.backend.mode {
        BackendMode::Remote => 1 + cfg.backend.max_retries,
        _ => 1,
    };
    let mut out: Option<PlanOutput> = None;
    for _ in 0..attempts {
        let text = backend.complete(&prompt, s)?;
        let parsed = parse_plan_output(&text, &horizon, &cfg.codec);
        let done = parsed.parse_quality != ParseQuality::Failed;
        out = Some(parsed);
        if done {
            break;
        }
    }
    let out = out.expect("at least one attempt");
    let trajectory = match (out.parse_quality, cfg.fallback_policy) {
        (ParseQuality::Failed, FallbackPolicy::SubstituteHypothetical) => {
            Some(rollout_hypothetical(&s.ego, &horizon).waypoints)
        }
        (ParseQuality::Failed, FallbackPolicy::Exclude) => None,
        _ => out.trajectory.map(|t| t.waypoints),
    };
    Ok(ResultRecord {
        scenario_id: s.id.clone(),
        raw_text: out.raw_text,
        parse_quality: out.parse_quality,
        trajectory,
    })
}

/// Plans every selected scenario and writes `results.jsonl` in input order.
pub fn cmd_plan(cfg: &RunConfig) -> Result<(Vec<ResultRecord>, PlanSummary), CliError> {
    cfg.validate()?;
    let scenarios = load_selected(cfg)?;
    let pool = exemplar_pool(cfg)?;
    let backend = Backend::new(cfg.backend.clone(), cfg.oracle(), cfg.codec.clone())?;
    ensure_output_dir(cfg)?;

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<ResultRecord, CliError>>>> =
        scenarios.iter().map(|_| Mutex::new(None)).collect();
    let workers = cfg.backend.max_in_flight.min(scenarios.len()).max(1);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= scenarios.len() {
                    break;
                }
                let r = plan_one(cfg, &backend, &pool, &scenarios[i]);
                let failed = r.is_err();
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
                if failed {
                    // Stop handing out work; the first error is reported.
                    next.store(scenarios.len(), Ordering::SeqCst);
                }
            });
        }
    });

    let mut records = Vec::with_capacity(scenarios.len());
    for slot in slots {
        match slot.into_inner().unwrap_or_else(|e| e.into_inner()) {
            Some(r) => records.push(r?),
            None => continue,
        }
    }
    let mut summary = PlanSummary {
        scenarios: records.len(),
        ..PlanSummary::default()
    };
    for r in &records {
        match r.parse_quality {
            ParseQuality::Clean => summary.clean += 1,
            ParseQuality::Recovered => summary.recovered += 1,
            ParseQuality::Failed => {
                summary.failed += 1;
                if r.trajectory.is_some() {
                    summary.fallbacks += 1;
                }
            }
        }
    }
    write_results(&cfg.results_path(), &records)?;
    Ok((records, summary))
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub report: EvaluationReport,
    pub markdown_path: PathBuf,
    pub csv_path: PathBuf,
    /// The parse-failure rate is above `max_failure_rate`.
    pub failure_ceiling_exceeded: bool,
}

/// Scores a results file against the configured scenarios and writes
/// `report.md` and `report.csv`.
pub fn cmd_evaluate(results_path: &Path, cfg: &RunConfig) -> Result<EvaluateOutcome, CliError> {
    cfg.validate()?;
    let records = read_results(results_path)?;
    let scenarios = load_scenarios(&cfg.scenario_path, &cfg.horizon(), cfg.codec.decimals)?;
    let by_id: HashMap<&str, &Scenario> = scenarios.iter().map(|s| (s.id.as_str(), s)).collect();
    let horizon = cfg.horizon();

    let mut joined = Vec::with_capacity(records.len());
    for r in &records {
        let s = by_id
            .get(r.scenario_id.as_str())
            .ok_or_else(|| CliError::UnknownScenario(r.scenario_id.clone()))?;
        let reparsed = parse_plan_output(&r.raw_text, &horizon, &cfg.codec);
        let out = PlanOutput {
            reasoning: reparsed.reasoning,
            trajectory: r.trajectory(horizon.dt),
            raw_text: r.raw_text.clone(),
            parse_quality: r.parse_quality,
        };
        joined.push(((*s).clone(), out));
    }

    let report = evaluate_dataset(&joined, &cfg.eval())?;
    ensure_output_dir(cfg)?;
    let markdown_path = cfg.output_dir.join("report.md");
    let csv_path = cfg.output_dir.join("report.csv");
    fs::write(&markdown_path, report.to_markdown()).map_err(io_err(&markdown_path))?;
    fs::write(&csv_path, report.to_csv()).map_err(io_err(&csv_path))?;
    let failure_ceiling_exceeded = report.parse_failure_rate() > cfg.max_failure_rate;
    Ok(EvaluateOutcome {
        report,
        markdown_path,
        csv_path,
        failure_ceiling_exceeded,
    })
}

#[derive(Debug, Serialize)]
struct ExportMeta<'a> {
    template_hash: String,
    examples: usize,
    horizon_steps: usize,
    dt: f64,
    codec: &'a lmplanner_core::CodecConfig,
    split: Option<SplitSpec>,
}

/// Writes `finetune.jsonl` and its `finetune.jsonl.meta.json` sidecar;
/// returns the example count.
pub fn cmd_export_finetune(cfg: &RunConfig) -> Result<(PathBuf, usize), CliError> {
    cfg.validate()?;
    let scenarios = load_selected(cfg)?;
    let examples = scenarios
        .iter()
        .map(|s| make_finetune_example(s, &cfg.oracle(), &cfg.codec))
        .collect::<Result<Vec<_>, _>>()?;
    ensure_output_dir(cfg)?;
    let path = cfg.output_dir.join("finetune.jsonl");
    let count = export_finetune_jsonl(&examples, &path).map_err(io_err(&path))?;
    let meta = ExportMeta {
        template_hash: template_hash(),
        examples: count,
        horizon_steps: cfg.horizon_steps,
        dt: cfg.dt,
        codec: &cfg.codec,
        split: cfg.split,
    };
    let meta_path = cfg.output_dir.join("finetune.jsonl.meta.json");
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    text.push('\n');
    fs::write(&meta_path, text).map_err(io_err(&meta_path))?;
    Ok((path, count))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitManifest {
    pub fraction: f64,
    pub seed: u64,
    pub count: usize,
    pub scenario_ids: Vec<String>,
}

/// Writes `split.json` listing the sampled scenario ids.
pub fn cmd_split(cfg: &RunConfig) -> Result<(PathBuf, SplitManifest), CliError> {
    let split = cfg
        .split
        .ok_or_else(|| CliError::Config("split fraction and seed are required".into()))?;
    let selected = load_selected(cfg)?;
    let manifest = SplitManifest {
        fraction: split.fraction,
        seed: split.seed,
        count: selected.len(),
        scenario_ids: selected.into_iter().map(|s| s.id).collect(),
    };
    ensure_output_dir(cfg)?;
    let path = cfg.output_dir.join("split.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok((path, manifest))
}

/// Generates `count` synthetic scenarios. Without a kind the four kinds are
/// interleaved; scenario `i` uses seed `seed + i`.
pub fn cmd_synth(
    kind: Option<ScenarioKind>,
    count: usize,
    seed: u64,
    cfg: &RunConfig,
    path: &Path,
) -> Result<Vec<Scenario>, CliError> {
    let horizon = cfg.horizon();
    if !horizon.is_valid() {
        return Err(CliError::Config("horizon_steps must be >= 1 and dt > 0".into()));
    }
    let scenarios: Vec<Scenario> = (0..count)
        .map(|i| {
            let k = kind.unwrap_or(ScenarioKind::ALL[i % ScenarioKind::ALL.len()]);
            synth_scenario_with(k, seed + i as u64, &horizon)
        })
        .collect();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    save_scenarios(path, &scenarios)?;
    Ok(scenarios)
}

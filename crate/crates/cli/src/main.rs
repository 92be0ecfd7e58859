use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lmplanner::{cmd_evaluate, cmd_export_finetune, cmd_plan, cmd_split, cmd_synth, RunConfig, SplitSpec};
use lmplanner_core::backend::BackendMode;
use lmplanner_core::eval::FallbackPolicy;
use lmplanner_core::scenario::ScenarioKind;

#[derive(Parser)]
#[command(name = "lmplanner", version, about = "Language-model motion planning pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prompt the backend for every scenario and parse the completions.
    Plan(Common),
    /// Score a results file.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Defaults to <output-dir>/results.jsonl.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Write chat fine-tuning data from the supervision targets.
    ExportFinetune(Common),
    /// Write the id manifest of a seeded split.
    Split(Common),
    /// Generate synthetic scenarios.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<ScenarioKind>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; defaults to the scenario path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Remote,
    StubReplayGt,
    StubHypothetical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    Exclude,
    SubstituteHypothetical,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    horizon_steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    decimals: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_retries: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long, value_enum)]
    fallback: Option<Fallback>,
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long)]
    exemplars: Option<usize>,
    #[arg(long)]
    exemplar_scenarios: Option<PathBuf>,
    #[arg(long)]
    max_failure_rate: Option<f64>,
    #[arg(long)]
    ego_length: Option<f64>,
    #[arg(long)]
    ego_width: Option<f64>,
    #[arg(long)]
    mask_gt_collisions: bool,
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse()
}

impl Common {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.scenario_path, self.scenarios);
        set!(cfg.output_dir, self.output_dir);
        set!(cfg.horizon_steps, self.horizon_steps);
        set!(cfg.dt, self.dt);
        set!(cfg.codec.decimals, self.decimals);
        set!(cfg.backend.endpoint_url, self.endpoint);
        set!(cfg.backend.model_name, self.model);
        set!(cfg.backend.temperature, self.temperature);
        set!(cfg.backend.max_retries, self.max_retries);
        set!(cfg.backend.request_timeout_s, self.timeout);
        set!(cfg.backend.max_in_flight, self.max_in_flight);
        set!(cfg.exemplars, self.exemplars);
        set!(cfg.max_failure_rate, self.max_failure_rate);
        set!(cfg.ego.length, self.ego_length);
        set!(cfg.ego.width, self.ego_width);
        if let Some(m) = self.mode {
            cfg.backend.mode = match m {
                Mode::Remote => BackendMode::Remote,
                Mode::StubReplayGt => BackendMode::StubReplayGt,
                Mode::StubHypothetical => BackendMode::StubHypothetical,
            };
        }
        if let Some(f) = self.fallback {
            cfg.fallback_policy = match f {
                Fallback::Exclude => FallbackPolicy::Exclude,
                Fallback::SubstituteHypothetical => FallbackPolicy::SubstituteHypothetical,
            };
        }
        if let Some(fraction) = self.split_fraction {
            cfg.split = Some(SplitSpec {
                fraction,
                seed: self.split_seed,
            });
        }
        if self.exemplar_scenarios.is_some() {
            cfg.exemplar_scenarios = self.exemplar_scenarios;
        }
        if self.mask_gt_collisions {
            cfg.mask_gt_collisions = true;
        }
        Ok(cfg)
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Plan(common) => {
            let cfg = common.into_config()?;
            let (_, s) = cmd_plan(&cfg).context("plan")?;
            println!(
                "planned {} scenarios: {} clean, {} recovered, {} failed, {} fallback substitutions",
                s.scenarios, s.clean, s.recovered, s.failed, s.fallbacks
            );
            println!("results: {}", cfg.results_path().display());
        }
        Command::Evaluate { common, results } => {
            let cfg = common.into_config()?;
            let path = results.unwrap_or_else(|| cfg.results_path());
            let outcome = cmd_evaluate(&path, &cfg).context("evaluate")?;
            print!("{}", outcome.report.to_markdown());
            println!("report: {}", outcome.markdown_path.display());
            if outcome.failure_ceiling_exceeded {
                eprintln!(
                    "parse-failure rate {:.3} exceeds the ceiling {:.3}",
                    outcome.report.parse_failure_rate(),
                    cfg.max_failure_rate
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::ExportFinetune(common) => {
            let cfg = common.into_config()?;
            let (path, n) = cmd_export_finetune(&cfg).context("export-finetune")?;
            println!("wrote {n} examples to {}", path.display());
        }
        Command::Split(common) => {
            let cfg = common.into_config()?;
            let (path, m) = cmd_split(&cfg).context("split")?;
            println!("wrote {} ids to {}", m.count, path.display());
        }
        Command::Synth {
            common,
            kind,
            count,
            seed,
            out,
        } => {
            let cfg = common.into_config()?;
            let path = out.unwrap_or_else(|| cfg.scenario_path.clone());
            let s = cmd_synth(kind, count, seed, &cfg, &path).context("synth")?;
            println!("wrote {} scenarios to {}", s.len(), path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

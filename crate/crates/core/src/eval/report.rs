use std::fmt::Write as _;

use super::{EvalConfig, EvalError, L2Convention};
use crate::plan::ParseQuality;
use crate::prompt::template_hash;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioStatus {
    Evaluated,
    /// Failed parse replaced by the fallback trajectory.
    Substituted,
    /// Left out of the statistics.
    Excluded,
}

impl ScenarioStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioStatus::Evaluated => "evaluated",
            ScenarioStatus::Substituted => "substituted",
            ScenarioStatus::Excluded => "excluded",
        }
    }
}

/// Metrics of one scenario, one entry per report horizon. Empty when the
/// scenario was excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMetrics {
    pub scenario_id: String,
    pub parse_quality: ParseQuality,
    pub status: ScenarioStatus,
    pub l2_at_step: Vec<f64>,
    pub l2_cumulative_mean: Vec<f64>,
    /// Whether any step up to the horizon collides.
    pub collided: Vec<bool>,
}

impl ScenarioMetrics {
    pub(super) fn excluded(s: &Scenario, parse_quality: ParseQuality) -> Self {
        Self {
            scenario_id: s.id.clone(),
            parse_quality,
            status: ScenarioStatus::Excluded,
            l2_at_step: Vec::new(),
            l2_cumulative_mean: Vec::new(),
            collided: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub config: EvalConfig,
    pub horizons: Vec<f64>,
    /// Dataset means per horizon, meters.
    pub l2_at_step: Vec<f64>,
    pub l2_cumulative_mean: Vec<f64>,
    /// Percentage of evaluated scenarios with a collision up to each horizon.
    pub collision_rate: Vec<f64>,
    pub scenario_count: usize,
    pub evaluated_count: usize,
    pub recovered_count: usize,
    pub parse_failure_count: usize,
    pub fallback_count: usize,
    pub config_hash: String,
    pub template_hash: String,
    pub per_scenario: Vec<ScenarioMetrics>,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

impl EvaluationReport {
    pub(super) fn aggregate(per_scenario: Vec<ScenarioMetrics>, cfg: &EvalConfig) -> Result<Self, EvalError> {
        let evaluated: Vec<&ScenarioMetrics> = per_scenario
            .iter()
            .filter(|m| m.status != ScenarioStatus::Excluded)
            .collect();
        let parse_failure_count = per_scenario
            .iter()
            .filter(|m| m.parse_quality == ParseQuality::Failed)
            .count();
        if evaluated.is_empty() {
            return Err(EvalError::NothingEvaluated {
                failed: parse_failure_count,
            });
        }
        let n = evaluated.len() as f64;
        let columns = cfg.report_horizons.len();

        let mut l2_at_step = vec![0.0; columns];
        let mut l2_cumulative_mean = vec![0.0; columns];
        let mut collisions = vec![0usize; columns];
        for m in &evaluated {
            for j in 0..columns {
                l2_at_step[j] += m.l2_at_step[j];
                l2_cumulative_mean[j] += m.l2_cumulative_mean[j];
                collisions[j] += usize::from(m.collided[j]);
            }
        }
        for j in 0..columns {
            l2_at_step[j] /= n;
            l2_cumulative_mean[j] /= n;
        }
        let collision_rate = collisions.iter().map(|&c| 100.0 * c as f64 / n).collect();

        Ok(Self {
            config: cfg.clone(),
            horizons: cfg.report_horizons.clone(),
            l2_at_step,
            l2_cumulative_mean,
            collision_rate,
            scenario_count: per_scenario.len(),
            evaluated_count: evaluated.len(),
            recovered_count: per_scenario
                .iter()
                .filter(|m| m.parse_quality == ParseQuality::Recovered)
                .count(),
            parse_failure_count,
            fallback_count: per_scenario
                .iter()
                .filter(|m| m.status == ScenarioStatus::Substituted)
                .count(),
            config_hash: cfg.hash(),
            template_hash: template_hash(),
            per_scenario,
        })
    }

    pub fn l2(&self, convention: L2Convention) -> &[f64] {
        match convention {
            L2Convention::AtStep => &self.l2_at_step,
            L2Convention::CumulativeMean => &self.l2_cumulative_mean,
        }
    }

    /// Mean over the report horizons.
    pub fn avg_l2(&self, convention: L2Convention) -> f64 {
        mean(self.l2(convention))
    }

    pub fn avg_collision_rate(&self) -> f64 {
        mean(&self.collision_rate)
    }

    pub fn parse_failure_rate(&self) -> f64 {
        self.parse_failure_count as f64 / self.scenario_count as f64
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let heads: Vec<String> = self.horizons.iter().map(|h| format!("{h}s")).collect();
        let row = |out: &mut String, name: &str, values: &[f64], avg: f64| {
            let cells: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
            let _ = writeln!(out, "| {name} | {} | {avg:.2} |", cells.join(" | "));
        };

        out.push_str("# Open-loop evaluation\n\n");
        let _ = writeln!(out, "| Metric | {} | Avg. |", heads.join(" | "));
        let _ = writeln!(out, "|---|{}---|", "---|".repeat(heads.len()));
        row(
            &mut out,
            "L2 (m), cumulative_mean (ST-P3 style)",
            &self.l2_cumulative_mean,
            self.avg_l2(L2Convention::CumulativeMean),
        );
        row(
            &mut out,
            "L2 (m), at_step (UniAD style)",
            &self.l2_at_step,
            self.avg_l2(L2Convention::AtStep),
        );
        row(&mut out, "Collision (%)", &self.collision_rate, self.avg_collision_rate());

        out.push('\n');
        let _ = writeln!(out, "- scenarios: {}", self.scenario_count);
        let _ = writeln!(out, "- evaluated: {}", self.evaluated_count);
        let _ = writeln!(out, "- recovered parses: {}", self.recovered_count);
        let _ = writeln!(out, "- parse failures: {}", self.parse_failure_count);
        let _ = writeln!(out, "- fallback substitutions: {}", self.fallback_count);
        let _ = writeln!(out, "- fallback policy: {}", self.config.fallback.as_str());
        let _ = writeln!(
            out,
            "- ego box: {:.3} m x {:.3} m",
            self.config.ego.length, self.config.ego.width
        );
        let _ = writeln!(
            out,
            "- ground-truth collision masking: {}",
            if self.config.mask_gt_collisions { "on" } else { "off" }
        );
        let _ = writeln!(out, "- config hash: {}", self.config_hash);
        let _ = writeln!(out, "- template hash: {}", self.template_hash);
        out
    }

    /// One row per scenario followed by an `ALL` summary row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["scenario_id".to_string(), "parse_quality".into(), "status".into()];
        for prefix in ["l2_at_step", "l2_cumulative_mean", "collision"] {
            for h in &self.horizons {
                header.push(format!("{prefix}_{h}s"));
            }
        }
        w.write_record(&header).expect("in-memory csv");

        for m in &self.per_scenario {
            let mut rec = vec![
                m.scenario_id.clone(),
                m.parse_quality.as_str().to_string(),
                m.status.as_str().to_string(),
            ];
            if m.status == ScenarioStatus::Excluded {
                rec.extend(std::iter::repeat_n(String::new(), 3 * self.horizons.len()));
            } else {
                rec.extend(m.l2_at_step.iter().map(|v| format!("{v:.4}")));
                rec.extend(m.l2_cumulative_mean.iter().map(|v| format!("{v:.4}")));
                rec.extend(m.collided.iter().map(|c| u8::from(*c).to_string()));
            }
            w.write_record(&rec).expect("in-memory csv");
        }

        let mut summary = vec![
            "ALL".to_string(),
            format!("failed={}", self.parse_failure_count),
            format!("evaluated={}", self.evaluated_count),
        ];
        summary.extend(self.l2_at_step.iter().map(|v| format!("{v:.4}")));
        summary.extend(self.l2_cumulative_mean.iter().map(|v| format!("{v:.4}")));
        summary.extend(self.collision_rate.iter().map(|v| format!("{v:.4}")));
        w.write_record(&summary).expect("in-memory csv");

        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_dataset, EvalConfig};
    use crate::plan::{PartialReasoning, PlanOutput};
    use crate::scenario::{synth_scenario, ScenarioKind};

    fn report() -> EvaluationReport {
        let data: Vec<_> = (0..4)
            .map(|seed| {
                let s = synth_scenario(ScenarioKind::LeadVehicle, seed);
                let out = PlanOutput {
                    reasoning: PartialReasoning::default(),
                    trajectory: Some(s.human_trajectory.clone()),
                    raw_text: String::new(),
                    parse_quality: ParseQuality::Clean,
                };
                (s, out)
            })
            .collect();
        evaluate_dataset(&data, &EvalConfig::default()).unwrap()
    }

    #[test]
    fn markdown_layout() {
        let md = report().to_markdown();
        assert!(md.contains("| Metric | 1s | 2s | 3s | Avg. |"));
        assert!(md.contains("| L2 (m), cumulative_mean (ST-P3 style) | 0.00 | 0.00 | 0.00 | 0.00 |"));
        assert!(md.contains("| L2 (m), at_step (UniAD style) | 0.00 | 0.00 | 0.00 | 0.00 |"));
        assert!(md.contains("- template hash: "));
    }

    #[test]
    fn csv_rows() {
        let r = report();
        let csv = r.to_csv();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(&rows[4][0], "ALL");
        assert_eq!(reader.headers().unwrap().len(), 12);
    }
}

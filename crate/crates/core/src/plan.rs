//! Completion text back to reasoning sections and waypoints.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::codec::{parse_list_at, parse_trajectory, CodecConfig};
use crate::reasoning::{Decision, CRITICAL_LABEL, DECISION_LABEL, INTERACTION_LABEL, TRAJECTORY_LABEL};
use crate::scenario::{Horizon, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseQuality {
    /// All reasoning sections and a well-formed trajectory line.
    Clean,
    /// Only a coordinate list of the right length was found.
    Recovered,
    Failed,
}

impl ParseQuality {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParseQuality::Clean => "clean",
            ParseQuality::Recovered => "recovered",
            ParseQuality::Failed => "failed",
        }
    }
}

/// Whatever reasoning could be read from a completion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialReasoning {
    pub critical_text: Option<String>,
    pub interaction_text: Option<String>,
    pub decision: Option<Decision>,
    /// Full body of the decision section, keyword included.
    pub decision_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub reasoning: PartialReasoning,
    /// Present unless `parse_quality` is `Failed`.
    pub trajectory: Option<Trajectory>,
    pub raw_text: String,
    pub parse_quality: ParseQuality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Critical,
    Interaction,
    Decision,
    Trajectory,
}

const LABELS: [(Label, &str); 4] = [
    (Label::Critical, CRITICAL_LABEL),
    (Label::Interaction, INTERACTION_LABEL),
    (Label::Decision, DECISION_LABEL),
    (Label::Trajectory, TRAJECTORY_LABEL),
];

struct Mark {
    label: Label,
    /// Byte offset of the line holding the label.
    line_start: usize,
    /// Byte offset just past the label.
    body_start: usize,
}

fn is_decoration(c: char) -> bool {
    c.is_whitespace() || matches!(c, '*' | '#' | '>')
}

/// Labels that open a line, ignoring leading whitespace and markdown
/// decoration, compared case-insensitively.
fn find_labels(text: &str) -> Vec<Mark> {
    let mut marks = Vec::new();
    let mut line_start = 0usize;
    for line in text.split_inclusive('\n') {
        let stripped = line.trim_start_matches(is_decoration);
        let offset = line_start + (line.len() - stripped.len());
        let bytes = stripped.as_bytes();
        for (label, name) in LABELS {
            if bytes.len() >= name.len() && bytes[..name.len()].eq_ignore_ascii_case(name.as_bytes()) {
                marks.push(Mark {
                    label,
                    line_start,
                    body_start: offset + name.len(),
                });
                break;
            }
        }
        line_start += line.len();
    }
    marks
}

fn section_body(text: &str, marks: &[Mark], index: usize) -> String {
    let end = marks.get(index + 1).map_or(text.len(), |m| m.line_start);
    text[marks[index].body_start..end]
        .trim_matches(is_decoration)
        .to_string()
}

fn decision_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(keep[_ ]speed|accelerate|decelerate|stop|turn[_ ]left|turn[_ ]right|change[_ ]lanes?[_ ](?:to[_ ]the[_ ])?left|change[_ ]lanes?[_ ](?:to[_ ]the[_ ])?right)\b",
        )
        .expect("valid decision pattern")
    })
}

fn keyword_decision(section: &str) -> Option<Decision> {
    let m = decision_pattern().find(section)?;
    let word = m.as_str().to_ascii_lowercase().replace(' ', "_");
    let decision = if word.starts_with("change") {
        if word.ends_with("left") {
            Decision::ChangeLaneLeft
        } else {
            Decision::ChangeLaneRight
        }
    } else {
        word.parse().ok()?
    };
    Some(decision)
}

/// The first decision keyword inside the first labeled decision section.
pub fn extract_decision(text: &str) -> Option<Decision> {
    let marks = find_labels(text);
    let i = marks.iter().position(|m| m.label == Label::Decision)?;
    keyword_decision(&section_body(text, &marks, i))
}

/// Parses a completion. Never fails; problems are reported through
/// `parse_quality`.
pub fn parse_plan_output(text: &str, horizon: &Horizon, cfg: &CodecConfig) -> PlanOutput {
    let marks = find_labels(text);
    let first = |label: Label| marks.iter().position(|m| m.label == label);

    let mut reasoning = PartialReasoning {
        critical_text: first(Label::Critical).map(|i| section_body(text, &marks, i)),
        interaction_text: first(Label::Interaction).map(|i| section_body(text, &marks, i)),
        decision: None,
        decision_text: first(Label::Decision).map(|i| section_body(text, &marks, i)),
    };
    reasoning.decision = reasoning.decision_text.as_deref().and_then(keyword_decision);

    let sections_present =
        reasoning.critical_text.is_some() && reasoning.interaction_text.is_some() && reasoning.decision_text.is_some();
    let labeled = marks
        .iter()
        .rev()
        .find(|m| m.label == Label::Trajectory)
        .and_then(|m| {
            let rest = &text[m.body_start..];
            let skip = rest.len() - rest.trim_start_matches(is_decoration).len();
            parse_list_at(text, m.body_start + skip, horizon, cfg).ok()
        });

    let (trajectory, parse_quality) = match labeled {
        Some(t) if sections_present => (Some(t), ParseQuality::Clean),
        _ => match parse_trajectory(text, horizon, cfg) {
            Ok(t) => (Some(t), ParseQuality::Recovered),
            Err(_) => (None, ParseQuality::Failed),
        },
    };

    PlanOutput {
        reasoning,
        trajectory,
        raw_text: text.to_string(),
        parse_quality,
    }
}

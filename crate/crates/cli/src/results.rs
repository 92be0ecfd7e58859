use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use lmplanner_core::{ParseQuality, Trajectory, Waypoint};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One line of the planned-results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario_id: String,
    pub raw_text: String,
    pub parse_quality: ParseQuality,
    /// Parsed trajectory, or the fallback for failed parses; null when
    /// failed parses are excluded.
    pub trajectory: Option<Vec<Waypoint>>,
}

impl ResultRecord {
    pub fn trajectory(&self, dt: f64) -> Option<Trajectory> {
        self.trajectory.clone().map(|w| Trajectory::new(w, dt))
    }
}

pub fn write_results(path: &Path, records: &[ResultRecord]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("result records serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Results {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let records = vec![
            ResultRecord {
                scenario_id: "a".into(),
                raw_text: "line one\nline \"two\"".into(),
                parse_quality: ParseQuality::Clean,
                trajectory: Some(vec![Waypoint::new(0.0, 1.25)]),
            },
            ResultRecord {
                scenario_id: "b".into(),
                raw_text: String::new(),
                parse_quality: ParseQuality::Failed,
                trajectory: None,
            },
        ];
        write_results(&path, &records).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(r#""parse_quality":"failed","trajectory":null"#));
        assert_eq!(read_results(&path).unwrap(), records);
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        fs::write(&path, "{\"scenario_id\":\"a\"}\n").unwrap();
        match read_results(&path) {
            Err(CliError::Results { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }
}

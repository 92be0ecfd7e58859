use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::reasoning::FineTuneExample;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// One JSONL line of a chat fine-tuning file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub messages: Vec<ChatMessage>,
}

impl ChatRecord {
    fn content_of(&self, role: &str) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == role)
            .map(|m| m.content.as_str())
    }

    pub fn system(&self) -> Option<&str> {
        self.content_of("system")
    }

    pub fn user(&self) -> Option<&str> {
        self.content_of("user")
    }

    pub fn assistant(&self) -> Option<&str> {
        self.content_of("assistant")
    }
}

pub fn finetune_record(ex: &FineTuneExample) -> ChatRecord {
    let msg = |role: &str, content: String| ChatMessage {
        role: role.to_string(),
        content,
    };
    ChatRecord {
        messages: vec![
            msg("system", ex.prompt.system_text.clone()),
            msg("user", ex.prompt.user_text.clone()),
            msg("assistant", ex.assistant_text()),
        ],
    }
}

/// Writes one compact JSON object per line and returns the line count.
pub fn export_finetune_jsonl(examples: &[FineTuneExample], path: impl AsRef<Path>) -> io::Result<usize> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for ex in examples {
        serde_json::to_writer(&mut out, &finetune_record(ex))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(examples.len())
}

pub fn import_finetune_jsonl(path: impl AsRef<Path>) -> io::Result<Vec<ChatRecord>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(io::Error::from))
        .collect()
}

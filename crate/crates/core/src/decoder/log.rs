//! Date-stamped JSON-lines recognizer logs.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Local};
use serde::{Deserialize, Serialize};

use super::{DecoderError, EndpointKind, WordSpan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    /// Header line describing the recognizer configuration.
    Session {
        label: String,
        readback: f64,
        frame_rate: f64,
        stability_frames: u32,
        timeout: f64,
    },
    Result {
        start: f64,
        end: f64,
        text: String,
        kind: EndpointKind,
        score: f64,
        grammar: String,
        words: Vec<WordSpan>,
    },
    GrammarAck {
        id: String,
        t: f64,
    },
    Aborted {
        reason: String,
        partial: String,
        t: f64,
    },
    Gate {
        robot_speaking: bool,
        t: f64,
    },
}

/// `asr_YYYYMMDD_HHMMSS.jsonl` for the given wall-clock time.
pub fn log_file_name(at: DateTime<Local>) -> String {
    format!("asr_{}.jsonl", at.format("%Y%m%d_%H%M%S"))
}

#[derive(Debug)]
pub struct AsrLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl AsrLog {
    /// Creates a new date-stamped log in `dir`, adding a numeric suffix when
    /// a log with the same second already exists.
    pub fn create_in(dir: &Path) -> Result<Self, DecoderError> {
        std::fs::create_dir_all(dir)?;
        let base = log_file_name(Local::now());
        let stem = base.trim_end_matches(".jsonl");
        let mut n = 0;
        loop {
            let name = if n == 0 {
                base.clone()
            } else {
                format!("{stem}_{n}.jsonl")
            };
            let path = dir.join(name);
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(file) => {
                    return Ok(Self {
                        path,
                        out: BufWriter::new(file),
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one event with a `wall` timestamp field.
    pub fn write(&mut self, event: &LogEvent) -> Result<(), DecoderError> {
        let mut value = serde_json::to_value(event).expect("log event serializes");
        value["wall"] = Local::now().to_rfc3339().into();
        writeln!(self.out, "{value}")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a log file; the `wall` field is ignored.
pub fn read_log(path: &Path) -> Result<Vec<LogEvent>, DecoderError> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| DecoderError::MalformedRecord {
            line: n + 1,
            message: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}

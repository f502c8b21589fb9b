//! Session record: JSON lines of frames interleaved with gate and grammar
//! events. A record replays through the recognizer exactly like the live run
//! that produced it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::{DecoderError, ObservationFrame};

#[derive(Debug, Clone, PartialEq)]
pub enum RecordEntry {
    Frame(ObservationFrame),
    Gate { robot_speaking: bool, t: f64 },
    Grammar { id: String, t: f64 },
}

impl RecordEntry {
    pub fn to_json(&self) -> Value {
        match self {
            RecordEntry::Frame(f) => serde_json::to_value(f).expect("frame serializes"),
            RecordEntry::Gate { robot_speaking, t } => {
                json!({"ev": "gate", "robot_speaking": robot_speaking, "t": t})
            }
            RecordEntry::Grammar { id, t } => json!({"ev": "grammar", "id": id, "t": t}),
        }
    }

    pub fn to_line(&self) -> String {
        self.to_json().to_string()
    }

    /// Parses one record line. Event kinds other than `gate` and `grammar`
    /// (timeline annotations such as `say` or `state`) yield `None`.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Option<Self>, DecoderError> {
        let bad = |message: String| DecoderError::MalformedRecord {
            line: line_no,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let Some(ev) = value.get("ev") else {
            let frame: ObservationFrame =
                serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
            return Ok(Some(RecordEntry::Frame(frame)));
        };
        let t = || {
            value
                .get("t")
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("missing numeric 't'".into()))
        };
        match ev.as_str() {
            Some("gate") => {
                let robot_speaking = value
                    .get("robot_speaking")
                    .and_then(Value::as_bool)
                    .ok_or_else(|| bad("missing boolean 'robot_speaking'".into()))?;
                Ok(Some(RecordEntry::Gate {
                    robot_speaking,
                    t: t()?,
                }))
            }
            Some("grammar") => {
                let id = value
                    .get("id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("missing string 'id'".into()))?;
                Ok(Some(RecordEntry::Grammar {
                    id: id.to_string(),
                    t: t()?,
                }))
            }
            Some(_) => Ok(None),
            None => Err(bad("'ev' must be a string".into())),
        }
    }
}

/// Appends record lines to a file.
#[derive(Debug)]
pub struct SessionRecorder {
    out: BufWriter<File>,
}

impl SessionRecorder {
    pub fn create(path: &Path) -> Result<Self, DecoderError> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write(&mut self, entry: &RecordEntry) -> Result<(), DecoderError> {
        writeln!(self.out, "{}", entry.to_line())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), DecoderError> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_record(path: &Path) -> Result<Vec<RecordEntry>, DecoderError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DecoderError::MissingFile(path.to_path_buf()),
        _ => DecoderError::Io(e),
    })?;
    let mut entries = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(e) = RecordEntry::parse_line(&line, n + 1)? {
            entries.push(e);
        }
    }
    Ok(entries)
}

//! Payload formats carried on the well-known topics.
//!
//! - `/SpeechRecognition/Sentence`: the recognized text.
//! - `/Robot/SpeechStatus`: `start` or `end`.
//! - `/Robot/Say`, `/Display/Text`: plain text.
//! - `/Dialogue/Grammar`: grammar id.
//! - `/Dialogue/State`: state name such as `Question1`.
//! - `/Operator/Command`: `wizard <text>` or `abort`.
//! - `/Audio/Frames`: one observation frame as JSON.

pub const SPEECH_START: &str = "start";
pub const SPEECH_END: &str = "end";

/// Operator instruction to the dialogue manager.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorCommand {
    /// Text to be treated exactly like a recognition result.
    Wizard(String),
    Abort,
}

impl OperatorCommand {
    pub fn to_payload(&self) -> String {
        match self {
            OperatorCommand::Wizard(text) => format!("wizard {text}"),
            OperatorCommand::Abort => "abort".to_string(),
        }
    }

    pub fn parse_payload(payload: &str) -> Option<Self> {
        let payload = payload.trim();
        if payload == "abort" {
            return Some(OperatorCommand::Abort);
        }
        let text = payload.strip_prefix("wizard ")?.trim();
        (!text.is_empty()).then(|| OperatorCommand::Wizard(text.to_string()))
    }
}

/// Robot speech status payload: `true` for `start`.
pub fn parse_speech_status(payload: &str) -> Option<bool> {
    match payload.trim() {
        SPEECH_START => Some(true),
        SPEECH_END => Some(false),
        _ => None,
    }
}

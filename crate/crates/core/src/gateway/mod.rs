//! JSON bridge between portnet topics and operator consoles.
//!
//! Bridged topics become [`GatewayEvent`] frames; console frames are decoded
//! into [`OperatorCommand`]s, wizard text being checked against the grammar
//! most recently published on `/Dialogue/Grammar`.

mod server;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::grammar::{enumerate_language, GrammarError, GrammarFst, GrammarLibrary};
use crate::messages::{parse_speech_status, OperatorCommand};
use crate::portnet::{PortError, PortMessage};
use crate::{topics, SILENCE};

pub use server::{Gateway, GatewayConfig, GatewayHandle};

pub const DEFAULT_GATEWAY_PORT: u16 = 7602;

/// Topics forwarded to consoles.
pub const BRIDGED_TOPICS: [&str; 6] = [
    topics::ASR_SENTENCE,
    topics::DIALOGUE_STATE,
    topics::DIALOGUE_GRAMMAR,
    topics::ROBOT_SAY,
    topics::ROBOT_SPEECH_STATUS,
    topics::DISPLAY_TEXT,
];

const LANGUAGE_LIMIT: usize = 10_000;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("topic '{0}' is not bridged")]
    UnbridgedTopic(String),
    #[error("malformed json: {0}")]
    MalformedJson(String),
    #[error("unknown command type '{0}'")]
    UnknownType(String),
    #[error("'{text}' is not accepted by the active grammar{}", grammar.as_deref().map(|g| format!(" '{g}'")).unwrap_or_default())]
    NotInGrammar { text: String, grammar: Option<String> },
    #[error("bad payload on {topic}: '{payload}'")]
    BadPayload { topic: String, payload: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Port(#[from] PortError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    /// Short machine-readable code used in error frames.
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::UnbridgedTopic(_) => "unbridged_topic",
            GatewayError::MalformedJson(_) => "malformed_json",
            GatewayError::UnknownType(_) => "unknown_type",
            GatewayError::NotInGrammar { .. } => "utterance_not_in_grammar",
            GatewayError::BadPayload { .. } => "bad_payload",
            GatewayError::Grammar(_) => "unknown_grammar",
            GatewayError::Port(_) | GatewayError::Io(_) => "internal",
        }
    }
}

/// One frame sent to a console.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GatewayEvent {
    Asr {
        text: String,
        t: f64,
    },
    State {
        name: String,
        t: f64,
    },
    /// `text` for `/Robot/Say`, `status` for `/Robot/SpeechStatus`.
    RobotSpeech {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        status: Option<String>,
        t: f64,
    },
    Display {
        text: String,
        t: f64,
    },
    /// Grammar switch; `sentences` lists the wizard answers, silence excluded.
    Grammar {
        id: String,
        sentences: Vec<String>,
        t: f64,
    },
    /// Reply to a rejected console command, sent to that console only.
    Error {
        code: String,
        message: String,
    },
}

impl GatewayEvent {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gateway event serializes")
    }

    pub fn from_error(e: &GatewayError) -> Self {
        GatewayEvent::Error {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// Maps a bridged message to its event. Grammar events carry no sentences;
/// [`Bridge::encode`] fills them in.
pub fn encode_event(msg: &PortMessage) -> Result<GatewayEvent, GatewayError> {
    let t = msg.timestamp;
    let text = msg.payload.clone();
    Ok(match msg.topic.as_str() {
        topics::ASR_SENTENCE => GatewayEvent::Asr { text, t },
        topics::DIALOGUE_STATE => GatewayEvent::State { name: text, t },
        topics::DISPLAY_TEXT => GatewayEvent::Display { text, t },
        topics::ROBOT_SAY => GatewayEvent::RobotSpeech {
            text: Some(text),
            status: None,
            t,
        },
        topics::ROBOT_SPEECH_STATUS => {
            if parse_speech_status(&text).is_none() {
                return Err(GatewayError::BadPayload {
                    topic: msg.topic.to_string(),
                    payload: text,
                });
            }
            GatewayEvent::RobotSpeech {
                text: None,
                status: Some(text.trim().to_string()),
                t,
            }
        }
        topics::DIALOGUE_GRAMMAR => GatewayEvent::Grammar {
            id: text.trim().to_string(),
            sentences: Vec::new(),
            t,
        },
        other => return Err(GatewayError::UnbridgedTopic(other.to_string())),
    })
}

/// Sentences a wizard may inject while a grammar is active.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveGrammar {
    pub id: String,
    pub sentences: BTreeSet<String>,
}

impl ActiveGrammar {
    pub fn new(id: &str, fst: &GrammarFst) -> Result<Self, GrammarError> {
        let mut sentences = enumerate_language(fst, LANGUAGE_LIMIT)?;
        sentences.remove(SILENCE);
        Ok(Self {
            id: id.to_string(),
            sentences,
        })
    }

    pub fn accepts(&self, text: &str) -> bool {
        self.sentences.contains(&normalize(text))
    }
}

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses one console frame. Wizard text is normalised to lower case with
/// single spaces and must be a sentence of `active`.
pub fn decode_command(json: &str, active: Option<&ActiveGrammar>) -> Result<OperatorCommand, GatewayError> {
    let value: Value = serde_json::from_str(json).map_err(|e| GatewayError::MalformedJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| GatewayError::MalformedJson("frame is not an object".into()))?;
    let kind = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::MalformedJson("missing string field 'type'".into()))?;
    match kind {
        "abort" => Ok(OperatorCommand::Abort),
        "wizard_utterance" => {
            let text = obj
                .get("text")
                .and_then(Value::as_str)
                .ok_or_else(|| GatewayError::MalformedJson("missing string field 'text'".into()))?;
            match active {
                Some(g) if g.accepts(text) => Ok(OperatorCommand::Wizard(normalize(text))),
                _ => Err(GatewayError::NotInGrammar {
                    text: text.to_string(),
                    grammar: active.map(|g| g.id.clone()),
                }),
            }
        }
        other => Err(GatewayError::UnknownType(other.to_string())),
    }
}

/// Stateful encoder: resolves grammar ids against a library, remembers the
/// active grammar for command validation and the latest state and grammar
/// events for consoles that connect mid-session.
#[derive(Debug, Clone)]
pub struct Bridge {
    library: GrammarLibrary,
    active: Option<ActiveGrammar>,
    last_state: Option<GatewayEvent>,
    last_grammar: Option<GatewayEvent>,
}

impl Bridge {
    pub fn new(library: GrammarLibrary) -> Self {
        Self {
            library,
            active: None,
            last_state: None,
            last_grammar: None,
        }
    }

    pub fn active(&self) -> Option<&ActiveGrammar> {
        self.active.as_ref()
    }

    pub fn encode(&mut self, msg: &PortMessage) -> Result<GatewayEvent, GatewayError> {
        let mut event = encode_event(msg)?;
        match &mut event {
            GatewayEvent::Grammar { id, sentences, .. } => {
                let fst = self.library.get(id)?;
                let active = ActiveGrammar::new(id, &fst)?;
                *sentences = active.sentences.iter().cloned().collect();
                self.active = Some(active);
                self.last_grammar = Some(event.clone());
            }
            GatewayEvent::State { .. } => self.last_state = Some(event.clone()),
            _ => {}
        }
        Ok(event)
    }

    pub fn decode(&self, json: &str) -> Result<OperatorCommand, GatewayError> {
        decode_command(json, self.active.as_ref())
    }

    /// Latest state and grammar events, for a console that just connected.
    pub fn snapshot(&self) -> Vec<GatewayEvent> {
        self.last_state.iter().chain(&self.last_grammar).cloned().collect()
    }
}

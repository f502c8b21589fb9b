//! Online grammar-constrained recognizer over symbolic observation frames.
//!
//! Frames carry a posterior distribution over word symbols (the silence word
//! included) and stand in for an acoustic model. The [`Recognizer`] owns an
//! [`AudioRing`] of recent frames, a token-passing [`Search`] over the active
//! grammar, robot-speech gating with read-back, endpointing and the session
//! record / log writers.

mod log;
mod node;
mod record;
mod recognizer;
mod ring;
mod search;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::GrammarError;

pub use log::{log_file_name, read_log, AsrLog, LogEvent};
pub use node::AsrNode;

pub use record::{read_record, RecordEntry, SessionRecorder};
pub use recognizer::{DecodeResult, DecodeWindow, EndpointKind, Recognizer, RecognizerConfig, Source};
pub use ring::AudioRing;
pub use search::{Hypothesis, Search, SearchConfig, WordSpan};

#[derive(Debug, Error)]
pub enum DecoderError {
    #[error("frame {got} is out of order (expected {expected})")]
    OutOfOrderFrame { expected: u64, got: u64 },
    #[error("frame {got} skips ahead of the stream (expected {expected})")]
    FrameGap { expected: u64, got: u64 },
    #[error("frame {index} is not in the ring (readable {floor}..{cursor})")]
    Unreadable { index: u64, floor: u64, cursor: u64 },
    #[error("invalid frame {index}: {message}")]
    InvalidFrame { index: u64, message: String },
    #[error("robot speech start while already gated")]
    DoubleGateStart,
    #[error("robot speech end while not gated")]
    DoubleGateEnd,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("session record not found: {0}")]
    MissingFile(PathBuf),
    #[error("malformed session record line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One frame of the symbolic acoustic front-end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    #[serde(rename = "i")]
    pub index: u64,
    #[serde(rename = "p")]
    pub posteriors: BTreeMap<String, f64>,
}

impl ObservationFrame {
    pub fn new(index: u64, posteriors: BTreeMap<String, f64>) -> Self {
        Self { index, posteriors }
    }

    /// A frame where `symbol` has all the mass.
    pub fn one_hot(index: u64, symbol: &str) -> Self {
        Self::new(index, BTreeMap::from([(symbol.to_string(), 1.0)]))
    }

    /// Posterior of `symbol`; absent symbols have probability zero.
    pub fn prob(&self, symbol: &str) -> f64 {
        self.posteriors.get(symbol).copied().unwrap_or(0.0)
    }

    /// Symbol with the highest posterior (first in symbol order on ties).
    pub fn argmax(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (s, &p) in &self.posteriors {
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((s, p));
            }
        }
        best.map(|(s, _)| s)
    }

    pub fn validate(&self) -> Result<(), DecoderError> {
        let invalid = |message: String| DecoderError::InvalidFrame {
            index: self.index,
            message,
        };
        let mut sum = 0.0;
        for (s, &p) in &self.posteriors {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("P({s}) = {p} outside [0, 1]")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() >= 1e-6 {
            return Err(invalid(format!("posteriors sum to {sum}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_validation() {
        assert!(ObservationFrame::one_hot(0, "yes").validate().is_ok());
        let f = ObservationFrame::new(1, BTreeMap::from([("a".into(), 0.5), ("b".into(), 0.4)]));
        assert!(f.validate().is_err());
        let f = ObservationFrame::new(1, BTreeMap::from([("a".into(), 1.5), ("b".into(), -0.5)]));
        assert!(f.validate().is_err());
        let f = ObservationFrame::new(1, BTreeMap::from([("a".into(), 0.6), ("b".into(), 0.4)]));
        assert_eq!(f.argmax(), Some("a"));
        assert_eq!(f.prob("c"), 0.0);
    }

    #[test]
    fn frame_json_shape() {
        let f = ObservationFrame::one_hot(7, "!SIL");
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"i":7,"p":{"!SIL":1.0}}"#);
    }
}

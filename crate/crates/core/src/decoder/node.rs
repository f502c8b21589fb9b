//! The recognizer as a portnet node.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::messages::parse_speech_status;
use crate::portnet::{subscribe, OutPort, PortError, SessionClock, Subscription};
use crate::topics;

use super::{DecodeResult, DecoderError, ObservationFrame, RecordEntry, Recognizer};

/// Subscribes to `/Audio/Frames`, `/Robot/SpeechStatus` and
/// `/Dialogue/Grammar`; publishes recognized text on
/// `/SpeechRecognition/Sentence` stamped with the utterance end.
///
/// Control messages queued at each step are applied before frames, with
/// their own timestamps as event times.
pub struct AsrNode {
    recognizer: Recognizer,
    frames: Subscription,
    status: Subscription,
    grammar: Subscription,
    out: OutPort,
}

impl AsrNode {
    pub fn connect(broker: &str, recognizer: Recognizer) -> Result<Self, PortError> {
        Ok(Self {
            frames: subscribe(broker, topics::AUDIO_FRAMES)?,
            status: subscribe(broker, topics::ROBOT_SPEECH_STATUS)?,
            grammar: subscribe(broker, topics::DIALOGUE_GRAMMAR)?,
            out: OutPort::open(broker, topics::ASR_SENTENCE, SessionClock::start())?,
            recognizer,
        })
    }

    pub fn recognizer(&self) -> &Recognizer {
        &self.recognizer
    }

    pub fn into_recognizer(self) -> Recognizer {
        self.recognizer
    }

    /// Applies everything queued; returns the results published.
    pub fn step(&mut self) -> Result<Vec<DecodeResult>, DecoderError> {
        let mut entries = Vec::new();
        while let Some(m) = self.grammar.try_next().map_err(port)? {
            entries.push(RecordEntry::Grammar {
                id: m.payload.trim().to_string(),
                t: m.timestamp,
            });
        }
        while let Some(m) = self.status.try_next().map_err(port)? {
            if let Some(robot_speaking) = parse_speech_status(&m.payload) {
                entries.push(RecordEntry::Gate {
                    robot_speaking,
                    t: m.timestamp,
                });
            }
        }
        while let Some(m) = self.frames.try_next().map_err(port)? {
            match serde_json::from_str::<ObservationFrame>(&m.payload) {
                Ok(f) => entries.push(RecordEntry::Frame(f)),
                Err(e) => {
                    return Err(DecoderError::MalformedRecord {
                        line: 0,
                        message: e.to_string(),
                    })
                }
            }
        }
        let mut out = Vec::new();
        for entry in entries {
            let result = match self.recognizer.process(entry) {
                Ok(r) => r,
                // A repeated status message changes nothing.
                Err(DecoderError::DoubleGateStart | DecoderError::DoubleGateEnd) => None,
                Err(e) => return Err(e),
            };
            if let Some(r) = result {
                self.out.publish_at(r.text(), r.segment.end).map_err(port)?;
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Steps until `stop` is set, then flushes the record and log.
    pub fn run(&mut self, stop: &AtomicBool) -> Result<(), DecoderError> {
        while !stop.load(Ordering::Relaxed) {
            if self.step()?.is_empty() {
                std::thread::sleep(std::time::Duration::from_millis(2));
            }
        }
        self.recognizer.flush()
    }
}

fn port(e: PortError) -> DecoderError {
    DecoderError::Io(std::io::Error::other(e.to_string()))
}

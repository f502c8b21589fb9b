//! Spoken-interaction stack for a child/robot tutoring session.
//!
//! The crate is organised by subsystem:
//!
//! - [`portnet`]: named-port publish/subscribe middleware over TCP.
//! - [`grammar`]: JSGF-subset parser, grammar-to-FST compiler, lexicon.
//! - [`decoder`]: online grammar-constrained Viterbi recognizer with gating,
//!   read-back, endpointing, grammar switching and session recording.
//! - [`augment`]: SNR-controlled noise mixing for WAV corpora.
//! - [`dialogue`]: the scripted tutoring interaction as a state machine.
//! - [`simulator`]: closed-loop synthetic sessions with gold annotations.
//! - [`evalkit`]: fluency/expectedness labelling, segment matching,
//!   segmentation-error taxonomy, accuracy and WER.
//! - [`gateway`]: JSON bridge between portnet topics and an operator console.
//!
//! Runnable walkthroughs for each subsystem live in `examples/`.

pub mod augment;
pub mod decoder;
pub mod dialogue;
pub mod evalkit;
pub mod gateway;
pub mod grammar;
pub mod messages;
pub mod portnet;
mod segment;
pub mod simulator;

pub use segment::{SegmentSource, UtteranceSegment};

/// Word symbol standing for silence / non-speech.
pub const SILENCE: &str = "!SIL";

/// Well-known port names shared by the nodes.
pub mod topics {
    pub const ASR_SENTENCE: &str = "/SpeechRecognition/Sentence";
    pub const ROBOT_SPEECH_STATUS: &str = "/Robot/SpeechStatus";
    pub const ROBOT_SAY: &str = "/Robot/Say";
    pub const DIALOGUE_GRAMMAR: &str = "/Dialogue/Grammar";
    pub const DIALOGUE_STATE: &str = "/Dialogue/State";
    pub const DISPLAY_TEXT: &str = "/Display/Text";
    pub const OPERATOR_COMMAND: &str = "/Operator/Command";
    pub const AUDIO_FRAMES: &str = "/Audio/Frames";
}

//! Synthetic sessions standing in for the microphone, the robot and the
//! child: observation streams with seeded confusion noise and disfluencies,
//! robot speech with delayed end-of-speech messages, and gold annotations,
//! all in virtual time.

mod corpus;
mod noise;
mod session;

use std::path::PathBuf;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::{DecoderError, RecognizerConfig};
use crate::dialogue::DialogueError;
use crate::evalkit::EvalError;

pub use corpus::{decode_corpus, synthetic_corpus, CorpusOutcome, CorpusUtterance};
pub use noise::{corrupt_observations, spread_posteriors, ConfusionModel};
pub use session::{
    generate_session, read_timeline, simulate_session, write_timeline, ChildUtterance, Disfluency, GoldAnnotation,
    SessionOutput, TimelineEntry,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Delay between the robot finishing speech and the end message arriving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EosDelay {
    Fixed { seconds: f64 },
    Uniform { min: f64, max: f64 },
}

impl EosDelay {
    pub fn fixed(seconds: f64) -> Self {
        EosDelay::Fixed { seconds }
    }

    pub fn uniform(min: f64, max: f64) -> Self {
        EosDelay::Uniform { min, max }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match *self {
            EosDelay::Fixed { seconds } => seconds >= 0.0 && seconds.is_finite(),
            EosDelay::Uniform { min, max } => min >= 0.0 && min <= max && max.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!("bad end-of-speech delay {self:?}")))
        }
    }
}

impl Default for EosDelay {
    fn default() -> Self {
        EosDelay::uniform(0.3, 0.7)
    }
}

/// The `k`-th seeded draw from `dist`.
pub fn eos_delay_sample(dist: &EosDelay, seed: u64, k: u64) -> f64 {
    match *dist {
        EosDelay::Fixed { seconds } => seconds,
        EosDelay::Uniform { min, max } => {
            if min == max {
                return min;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng.random_range(min..=max)
        }
    }
}

/// Participant metadata carried into the outputs; it does not change the
/// simulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub age: String,
    pub fluency: String,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub label: String,
    pub seed: u64,
    /// Probability mass moved off the true symbol, and the per-word
    /// substitution probability.
    pub confusion_prob: f64,
    pub eos_delay: EosDelay,
    /// Probability that a child answer is disfluent.
    pub disfluency_prob: f64,
    pub frames_per_word: u32,
    /// Seconds between the robot finishing and the child starting to speak.
    pub response_delay: f64,
    /// Seconds between a dialogue decision and the robot starting to speak.
    pub robot_latency: f64,
    /// Robot speaking rate in words per second.
    pub speech_rate: f64,
    pub profile: Profile,
    pub recognizer: RecognizerConfig,
    /// Hard stop for the virtual clock.
    pub max_duration: f64,
    /// Joules reported per exercise session by the stub tracker are drawn
    /// with this seed.
    pub energy_seed: u64,
}

impl SessionConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            label: format!("sim_{seed}"),
            seed,
            confusion_prob: 0.0,
            eos_delay: EosDelay::default(),
            disfluency_prob: 0.0,
            frames_per_word: 40,
            response_delay: 0.4,
            robot_latency: 0.2,
            speech_rate: 2.5,
            profile: Profile::default(),
            recognizer: RecognizerConfig {
                ring_capacity: 3000,
                ..RecognizerConfig::default()
            },
            max_duration: 3600.0,
            energy_seed: seed,
        }
    }

    /// No noise, no disfluency, no end-of-speech delay and no read-back.
    pub fn clean(seed: u64) -> Self {
        let mut c = Self::new(seed);
        c.eos_delay = EosDelay::fixed(0.0);
        c.recognizer.readback = 0.0;
        c
    }

    pub fn with_record(mut self, path: impl Into<PathBuf>) -> Self {
        self.recognizer.record_path = Some(path.into());
        self
    }

    pub fn with_log_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.recognizer.log_dir = Some(dir.into());
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.confusion_prob) {
            return bad(format!("confusion probability {} outside [0, 1)", self.confusion_prob));
        }
        if !(0.0..=1.0).contains(&self.disfluency_prob) {
            return bad(format!("disfluency probability {} outside [0, 1]", self.disfluency_prob));
        }
        self.eos_delay.validate()?;
        if self.frames_per_word == 0 || !(self.speech_rate > 0.0) {
            return bad("rates must be positive".into());
        }
        if !(self.response_delay >= 0.0) || !(self.robot_latency >= 0.0) || !(self.max_duration > 0.0) {
            return bad("delays must be nonnegative".into());
        }
        self.recognizer.validate()?;
        Ok(())
    }

    pub(crate) fn fps(&self) -> f64 {
        self.recognizer.frame_rate
    }

    pub(crate) fn frames(&self, seconds: f64) -> u64 {
        (seconds * self.fps()).round().max(0.0) as u64
    }
}

/// Mixes `seed` with a label so independent streams do not collide.
pub(crate) fn sub_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

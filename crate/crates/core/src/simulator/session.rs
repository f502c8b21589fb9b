use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{corrupt_observations, eos_delay_sample, spread_posteriors, sub_seed, ConfusionModel, SessionConfig, SimError};
use crate::decoder::{DecodeResult, DecoderError, LogEvent, ObservationFrame, Recognizer, RecordEntry};
use crate::dialogue::{
    spoken_text, speech_duration, Dialogue, DialogueEvent, DialogueRunner, DialogueState, KinectStub, Script, StateName,
    TransitionAction,
};
use crate::evalkit::{
    classify_expected, classify_fluency, Fluency, GoldRow, SegmentationErrorLabel, SessionData, TranscribedUtterance,
    Vocabulary,
};
use crate::grammar::GrammarLibrary;
use crate::{UtteranceSegment, SILENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disfluency {
    /// False start on the first word, then the whole phrase.
    RepeatFirst,
    /// The last word is abandoned after its first letters.
    TruncateLast,
}

/// What the simulated child says in one turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildUtterance {
    /// The answer the child meant to give.
    pub phrase: String,
    /// Gold transcription, with markers for disfluencies.
    pub transcript: String,
    /// Words actually voiced, in order.
    pub spoken: Vec<String>,
    pub disfluency: Option<Disfluency>,
}

impl ChildUtterance {
    pub fn fluent(phrase: &str) -> Self {
        Self {
            phrase: phrase.to_string(),
            transcript: phrase.to_string(),
            spoken: phrase.split_whitespace().map(String::from).collect(),
            disfluency: None,
        }
    }

    pub fn disfluent(phrase: &str, kind: Disfluency) -> Self {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        let kind = if words.len() < 2 { Disfluency::RepeatFirst } else { kind };
        let (transcript, spoken): (String, Vec<String>) = match kind {
            Disfluency::RepeatFirst => {
                let mut spoken = vec![words[0].to_string()];
                spoken.extend(words.iter().map(|w| w.to_string()));
                (format!("{}- {}", words[0], phrase), spoken)
            }
            Disfluency::TruncateLast => {
                let last = words[words.len() - 1];
                let keep = last.chars().count().div_ceil(2);
                let fragment: String = last.chars().take(keep).collect();
                let head = &words[..words.len() - 1];
                (
                    format!("{} {fragment}-", head.join(" ")),
                    head.iter().map(|w| w.to_string()).collect(),
                )
            }
        };
        Self {
            phrase: phrase.to_string(),
            transcript,
            spoken,
            disfluency: Some(kind),
        }
    }

    /// Clean one-hot frames starting at `first`.
    pub fn frames(&self, first: u64, frames_per_word: u32) -> Vec<ObservationFrame> {
        self.spoken
            .iter()
            .flat_map(|w| std::iter::repeat_n(w.as_str(), frames_per_word as usize))
            .enumerate()
            .map(|(i, w)| ObservationFrame::one_hot(first + i as u64, w))
            .collect()
    }
}

/// Gold segments of the child's turns with their labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldAnnotation {
    pub segments: Vec<UtteranceSegment>,
    pub fluency: Vec<Fluency>,
    pub expected: Vec<bool>,
    /// The answer each turn was meant to be.
    pub intended: Vec<String>,
}

impl GoldAnnotation {
    pub fn rows(&self) -> Vec<GoldRow> {
        self.segments
            .iter()
            .map(|s| GoldRow {
                start: s.start,
                end: s.end,
                speaker: "child".into(),
                text: s.text.clone(),
            })
            .collect()
    }
}

/// One line of a session timeline. Frames, gate and grammar lines use the
/// session-record format; the other kinds are annotations that replay
/// skips.
#[derive(Debug, Clone, PartialEq)]
pub enum TimelineEntry {
    Header { label: String, seed: u64, age: String, fluency: String },
    Record(RecordEntry),
    Say { text: String, start: f64, end: f64 },
    State { name: String, t: f64 },
    Child { text: String, start: f64, end: f64 },
    Report { text: String, t: f64 },
}

impl TimelineEntry {
    pub fn to_json(&self) -> Value {
        match self {
            TimelineEntry::Header { label, seed, age, fluency } => {
                json!({"ev": "session", "label": label, "seed": seed, "age": age, "fluency": fluency})
            }
            TimelineEntry::Record(r) => r.to_json(),
            TimelineEntry::Say { text, start, end } => json!({"ev": "say", "text": text, "t": start, "end": end}),
            TimelineEntry::State { name, t } => json!({"ev": "state", "name": name, "t": t}),
            TimelineEntry::Child { text, start, end } => {
                json!({"ev": "child", "text": text, "t": start, "end": end})
            }
            TimelineEntry::Report { text, t } => json!({"ev": "report", "text": text, "t": t}),
        }
    }

    fn parse_line(line: &str, line_no: usize) -> Result<Self, DecoderError> {
        if let Some(r) = RecordEntry::parse_line(line, line_no)? {
            return Ok(TimelineEntry::Record(r));
        }
        let bad = |m: &str| DecoderError::MalformedRecord {
            line: line_no,
            message: m.to_string(),
        };
        let v: Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
        let s = |k: &str| v.get(k).and_then(Value::as_str).map(String::from).ok_or_else(|| bad(k));
        let f = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| bad(k));
        Ok(match v.get("ev").and_then(Value::as_str) {
            Some("session") => TimelineEntry::Header {
                label: s("label")?,
                seed: v.get("seed").and_then(Value::as_u64).ok_or_else(|| bad("seed"))?,
                age: s("age")?,
                fluency: s("fluency")?,
            },
            Some("say") => TimelineEntry::Say {
                text: s("text")?,
                start: f("t")?,
                end: f("end")?,
            },
            Some("state") => TimelineEntry::State {
                name: s("name")?,
                t: f("t")?,
            },
            Some("child") => TimelineEntry::Child {
                text: s("text")?,
                start: f("t")?,
                end: f("end")?,
            },
            Some("report") => TimelineEntry::Report {
                text: s("text")?,
                t: f("t")?,
            },
            _ => return Err(bad("unknown event kind")),
        })
    }
}

pub fn write_timeline(path: &Path, entries: &[TimelineEntry]) -> Result<(), SimError> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in entries {
        writeln!(out, "{}", e.to_json())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_timeline(path: &Path) -> Result<Vec<TimelineEntry>, SimError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SimError::Decoder(DecoderError::MissingFile(path.to_path_buf())),
        _ => SimError::Io(e),
    })?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(TimelineEntry::parse_line(&line, n + 1)?);
        }
    }
    Ok(out)
}

/// Everything a simulated session produced.
#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub label: String,
    pub timeline: Vec<TimelineEntry>,
    pub gold: GoldAnnotation,
    /// Boundary labels predicted from the read-back and the message delay,
    /// one per gold segment.
    pub oracle: Vec<SegmentationErrorLabel>,
    pub results: Vec<DecodeResult>,
    pub asr_events: Vec<LogEvent>,
    pub trace: Vec<DialogueState>,
    pub final_state: StateName,
    /// Events the dialogue rejected; empty for a well-formed session.
    pub dialogue_errors: Vec<String>,
    pub duration: f64,
    pub log_path: Option<PathBuf>,
}

impl SessionOutput {
    pub fn session_data(&self) -> SessionData {
        SessionData {
            label: self.label.clone(),
            gold: self.gold.segments.clone(),
            auto: self.results.iter().map(|r| r.segment.clone()).collect(),
        }
    }

    /// The recognizer's part of the timeline, for replay.
    pub fn record(&self) -> Vec<RecordEntry> {
        self.timeline
            .iter()
            .filter_map(|e| match e {
                TimelineEntry::Record(r) => Some(r.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn state_names(&self) -> Vec<StateName> {
        self.trace.iter().map(|s| s.name).collect()
    }
}

/// A robot utterance that has been scheduled or is under way.
struct RobotTurn {
    start: u64,
    end: u64,
    text: String,
    started: bool,
}

struct Driver<'a> {
    cfg: &'a SessionConfig,
    fps: f64,
    stability: u64,
    script: Script,
    vocabulary: Vocabulary,
    rec: Recognizer,
    runner: DialogueRunner<KinectStub>,
    model: ConfusionModel,
    silence: BTreeMap<String, f64>,
    answers: ChaCha8Rng,
    robot: Option<RobotTurn>,
    robot_turns: u64,
    gate_off: Option<u64>,
    child: Option<(u64, Vec<ObservationFrame>)>,
    timeline: Vec<TimelineEntry>,
    gold: GoldAnnotation,
    oracle: Vec<SegmentationErrorLabel>,
    /// Predicted automatic end frame of the latest gold segment.
    last_auto_end: Option<u64>,
    errors: Vec<String>,
}

/// Which state the child answers when the robot stops talking in `state`.
fn answer_state(state: StateName) -> StateName {
    match state {
        StateName::Intro => StateName::Adapt(1),
        s => s,
    }
}

fn choices(script: &Script, state: StateName) -> Vec<String> {
    match state {
        StateName::Adapt(k) => vec![script.adapt[k as usize - 1].phrase.clone()],
        StateName::QuizIntro => vec![script.quiz.phrase.clone()],
        StateName::Question(k) => script.questions[k as usize - 1].answers.clone(),
        StateName::Commands(k) => script.commands[k as usize - 1].options.clone(),
        _ => Vec::new(),
    }
}

impl Driver<'_> {
    fn t(&self, frame: u64) -> f64 {
        frame as f64 / self.fps
    }

    fn record(&mut self, entry: RecordEntry) -> Result<Option<DecodeResult>, SimError> {
        self.timeline.push(TimelineEntry::Record(entry.clone()));
        Ok(self.rec.process(entry)?)
    }

    fn deliver(&mut self, event: DialogueEvent, at: f64, at_frame: u64) -> Result<(), SimError> {
        let before = self.runner.dialogue().trace().len();
        match self.runner.handle(&event, at) {
            Ok(actions) => {
                self.note_states(before);
                self.apply(actions, at_frame)
            }
            Err(e) => {
                self.errors.push(e.to_string());
                Ok(())
            }
        }
    }

    fn note_states(&mut self, before: usize) {
        for s in &self.runner.dialogue().trace()[before..] {
            self.timeline.push(TimelineEntry::State {
                name: s.name.to_string(),
                t: s.entered_at,
            });
        }
    }

    fn apply(&mut self, actions: Vec<TransitionAction>, frame: u64) -> Result<(), SimError> {
        let t = self.t(frame);
        for a in &actions {
            match a {
                TransitionAction::SetGrammar(id) => {
                    self.record(RecordEntry::Grammar { id: id.clone(), t })?;
                }
                TransitionAction::Report(text) => self.timeline.push(TimelineEntry::Report { text: text.clone(), t }),
                _ => {}
            }
        }
        if let Some(text) = spoken_text(&actions) {
            let frames = self.cfg.frames(speech_duration(&text, self.cfg.speech_rate)).max(1);
            match &mut self.robot {
                Some(turn) => {
                    turn.text = format!("{} {text}", turn.text);
                    turn.end += frames;
                }
                None => {
                    let mut start = frame + self.cfg.frames(self.cfg.robot_latency);
                    if let Some(g) = self.gate_off {
                        start = start.max(g + 1);
                    }
                    self.robot = Some(RobotTurn {
                        start,
                        end: start + frames,
                        text,
                        started: false,
                    });
                }
            }
        }
        Ok(())
    }

    fn robot_start(&mut self, i: u64) -> Result<(), SimError> {
        let t = self.t(i);
        self.record(RecordEntry::Gate { robot_speaking: true, t })?;
        // The child's turn ends no later than the robot's next utterance.
        if let (Some(seg), Some(auto_end)) = (self.gold.segments.last_mut(), self.last_auto_end) {
            if seg.end > t {
                seg.end = t;
                let late = (auto_end as f64 - i as f64) / self.fps > self.tolerance();
                if let Some(l) = self.oracle.last_mut() {
                    l.late_end = late;
                }
            }
        }
        Ok(())
    }

    fn tolerance(&self) -> f64 {
        crate::evalkit::DEFAULT_TOLERANCE + 1e-9
    }

    fn robot_end(&mut self, i: u64) {
        let turn = self.robot.take().expect("robot turn");
        self.timeline.push(TimelineEntry::Say {
            text: turn.text,
            start: self.t(turn.start),
            end: self.t(i),
        });
        let delay = eos_delay_sample(&self.cfg.eos_delay, sub_seed(self.cfg.seed, "eos"), self.robot_turns);
        self.robot_turns += 1;
        let delay_frames = self.cfg.frames(delay);
        self.gate_off = Some(i + delay_frames);

        let state = answer_state(self.runner.state());
        if !state.expects_speech() {
            return;
        }
        let options = choices(&self.script, state);
        let pick = self.answers.random_range(0..options.len());
        let u: f64 = self.answers.random();
        let kind = if self.answers.random::<bool>() {
            Disfluency::RepeatFirst
        } else {
            Disfluency::TruncateLast
        };
        let utt = if u < self.cfg.disfluency_prob {
            ChildUtterance::disfluent(&options[pick], kind)
        } else {
            ChildUtterance::fluent(&options[pick])
        };
        let first = i + self.cfg.frames(self.cfg.response_delay);
        let clean = utt.frames(first, self.cfg.frames_per_word);
        let speech_end = first + clean.len() as u64;
        let noise_seed = sub_seed(self.cfg.seed, "noise").wrapping_add(self.gold.segments.len() as u64);
        let frames = corrupt_observations(&clean, self.cfg.confusion_prob, noise_seed, &self.model);
        self.child = Some((first, frames));

        let gold = UtteranceSegment::gold(self.t(i), self.t(speech_end + self.stability), utt.transcript.clone());
        let parsed = TranscribedUtterance::parse(gold.clone()).expect("generated markers are valid");
        self.gold.fluency.push(classify_fluency(&parsed));
        self.gold.expected.push(classify_expected(&utt.transcript, &self.vocabulary));
        self.gold.intended.push(utt.phrase.clone());
        self.gold.segments.push(gold);
        self.timeline.push(TimelineEntry::Child {
            text: utt.transcript,
            start: self.t(first),
            end: self.t(speech_end),
        });

        // The decode window opens `delay - readback` after the true end.
        let readback = self.cfg.frames(self.cfg.recognizer.readback) as i64;
        let shift = (delay_frames as i64 - readback).max(-(i as i64)) as f64 / self.fps;
        let tol = self.tolerance();
        self.oracle.push(SegmentationErrorLabel {
            early_start: -shift > tol,
            late_start: shift > tol,
            early_end: false,
            late_end: false,
        });
        self.last_auto_end = Some(speech_end + self.stability);
    }

    fn frame(&self, i: u64) -> ObservationFrame {
        if let Some((first, frames)) = &self.child {
            if i >= *first && i < first + frames.len() as u64 {
                return frames[(i - first) as usize].clone();
            }
        }
        ObservationFrame::new(i, self.silence.clone())
    }

    fn run(&mut self) -> Result<u64, SimError> {
        let start = self.runner.start(0.0);
        self.note_states(0);
        self.apply(start, 0)?;
        let max_frames = self.cfg.frames(self.cfg.max_duration);
        let mut stop_at: Option<u64> = None;
        let mut i = 0u64;
        while i < max_frames && stop_at.is_none_or(|s| i < s) {
            let t = self.t(i);
            if self.robot.as_ref().is_some_and(|r| !r.started && r.start <= i) {
                self.robot.as_mut().expect("robot").started = true;
                self.robot_start(i)?;
            }
            if self.robot.as_ref().is_some_and(|r| r.started && r.end <= i) {
                self.robot_end(i);
            }
            if self.gate_off.is_some_and(|g| g <= i) {
                self.gate_off = None;
                self.record(RecordEntry::Gate { robot_speaking: false, t })?;
                self.deliver(DialogueEvent::RobotSpeechEnded, t, i)?;
            }
            let before = self.runner.dialogue().trace().len();
            if let Some((_, result)) = self.runner.poll_timer(t) {
                match result {
                    Ok(actions) => {
                        self.note_states(before);
                        self.apply(actions, i)?;
                    }
                    Err(e) => self.errors.push(e.to_string()),
                }
            }
            let frame = self.frame(i);
            if let Some(result) = self.record(RecordEntry::Frame(frame))? {
                let at = self.t(i + 1);
                self.deliver(DialogueEvent::Recognized(result.segment.text.clone()), at, i + 1)?;
            }
            if stop_at.is_none()
                && self.runner.state().is_terminal()
                && self.robot.is_none()
                && self.gate_off.is_none()
            {
                stop_at = Some(i + self.cfg.frames(0.5).max(1));
            }
            i += 1;
        }
        self.rec.flush()?;
        Ok(i)
    }
}

/// Runs a closed-loop session in virtual time: the dialogue drives robot
/// speech, the simulated child answers, frames flow through the recognizer
/// and its results drive the dialogue.
pub fn simulate_session(
    config: &SessionConfig,
    script: &Script,
    library: &GrammarLibrary,
) -> Result<SessionOutput, SimError> {
    config.validate()?;
    let mut rec_config = config.recognizer.clone();
    rec_config.label = config.label.clone();
    let rec = Recognizer::new(rec_config, library.clone())?;
    let model = ConfusionModel::from_library(library);
    let silence = spread_posteriors(SILENCE, config.confusion_prob, model.confusables(SILENCE));
    let mut driver = Driver {
        cfg: config,
        fps: config.fps(),
        stability: config.recognizer.stability_frames as u64,
        script: script.clone(),
        vocabulary: Vocabulary::from_script(script),
        rec,
        runner: DialogueRunner::new(Dialogue::new(script.clone()), KinectStub::new(config.energy_seed)),
        model,
        silence,
        answers: ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "answers")),
        robot: None,
        robot_turns: 0,
        gate_off: None,
        child: None,
        timeline: vec![TimelineEntry::Header {
            label: config.label.clone(),
            seed: config.seed,
            age: config.profile.age.clone(),
            fluency: config.profile.fluency.clone(),
        }],
        gold: GoldAnnotation::default(),
        oracle: Vec::new(),
        last_auto_end: None,
        errors: Vec::new(),
    };
    let frames = driver.run()?;
    let dialogue = driver.runner.dialogue();
    Ok(SessionOutput {
        label: config.label.clone(),
        trace: dialogue.trace().to_vec(),
        final_state: dialogue.state().name,
        timeline: driver.timeline,
        gold: driver.gold,
        oracle: driver.oracle,
        results: driver.rec.results().to_vec(),
        asr_events: driver.rec.events().to_vec(),
        dialogue_errors: driver.errors,
        duration: frames as f64 / config.fps(),
        log_path: driver.rec.log_path().map(Path::to_path_buf),
    })
}

/// [`simulate_session`] with the built-in script and grammars.
pub fn generate_session(config: &SessionConfig) -> Result<SessionOutput, SimError> {
    simulate_session(config, &Script::builtin(), &GrammarLibrary::builtin())
}

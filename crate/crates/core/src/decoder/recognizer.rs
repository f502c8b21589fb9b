use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::log::{AsrLog, LogEvent};
use super::record::{read_record, RecordEntry, SessionRecorder};
use super::ring::AudioRing;
use super::search::{Hypothesis, Search, SearchConfig, WordSpan};
use super::{DecoderError, ObservationFrame};
use crate::grammar::{GrammarFst, GrammarLibrary};
use crate::{UtteranceSegment, SILENCE};

/// Slack for floating-point time comparisons.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Live,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RecognizerConfig {
    /// Seconds rewound into the ring when robot speech ends.
    pub readback: f64,
    pub frame_rate: f64,
    /// Frames the best complete hypothesis must stay unchanged before an
    /// early endpoint.
    pub stability_frames: u32,
    /// Seconds after ungating before a result is forced.
    pub timeout: f64,
    pub beam: usize,
    pub min_posterior: f64,
    pub ring_capacity: usize,
    pub source: Source,
    pub record_path: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    /// Free-form tag written to the log header, used to group reports.
    pub label: String,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        Self {
            readback: 0.5,
            frame_rate: 100.0,
            stability_frames: 30,
            timeout: 10.0,
            beam: 64,
            min_posterior: 1e-8,
            ring_capacity: 1000,
            source: Source::Live,
            record_path: None,
            log_dir: None,
            label: "default".to_string(),
        }
    }
}

impl RecognizerConfig {
    pub fn validate(&self) -> Result<(), DecoderError> {
        let bad = |m: &str| Err(DecoderError::InvalidConfig(m.to_string()));
        if !(self.readback >= 0.0 && self.readback.is_finite()) {
            return bad("readback must be >= 0");
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad("frame rate must be > 0");
        }
        if self.stability_frames < 1 {
            return bad("stability frames must be >= 1");
        }
        if !(self.timeout > 0.0) {
            return bad("timeout must be > 0");
        }
        if self.beam < 1 || self.ring_capacity < 1 {
            return bad("beam and ring capacity must be >= 1");
        }
        if !(self.min_posterior > 0.0 && self.min_posterior <= 1.0) {
            return bad("posterior floor must be in (0, 1]");
        }
        Ok(())
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            beam: self.beam,
            min_posterior: self.min_posterior,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Early,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub segment: UtteranceSegment,
    pub words: Vec<WordSpan>,
    /// Path cost including the final weight; 0 for the no-hypothesis fallback.
    pub score: f64,
    pub endpoint: EndpointKind,
    pub grammar_id: String,
}

impl DecodeResult {
    pub fn text(&self) -> &str {
        &self.segment.text
    }
}

/// Frames `[first_frame, end_frame)` decoded during one listening window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeWindow {
    pub grammar_id: String,
    pub ungate_time: f64,
    pub first_frame: u64,
    pub end_frame: u64,
}

#[derive(Debug)]
struct Listening {
    search: Search,
    ungate_time: f64,
    next_frame: u64,
    window: usize,
    stable: Option<Vec<String>>,
    stable_count: u32,
}

/// The online recognizer. Frames, gate events and grammar switches go in;
/// [`DecodeResult`]s come out of [`Recognizer::poll_result`].
#[derive(Debug)]
pub struct Recognizer {
    config: RecognizerConfig,
    library: GrammarLibrary,
    ring: AudioRing,
    active: Option<Arc<GrammarFst>>,
    gated: bool,
    listening: Option<Listening>,
    pending: Option<DecodeResult>,
    windows: Vec<DecodeWindow>,
    results: Vec<DecodeResult>,
    events: Vec<LogEvent>,
    recorder: Option<SessionRecorder>,
    log: Option<AsrLog>,
    source: Source,
    replay: VecDeque<RecordEntry>,
}

impl Recognizer {
    pub fn new(config: RecognizerConfig, library: GrammarLibrary) -> Result<Self, DecoderError> {
        config.validate()?;
        let recorder = match &config.record_path {
            Some(p) => Some(SessionRecorder::create(p)?),
            None => None,
        };
        let log = match &config.log_dir {
            Some(d) => Some(AsrLog::create_in(d)?),
            None => None,
        };
        let mut rec = Self {
            ring: AudioRing::new(config.ring_capacity),
            source: Source::Live,
            config,
            library,
            active: None,
            gated: false,
            listening: None,
            pending: None,
            windows: Vec::new(),
            results: Vec::new(),
            events: Vec::new(),
            recorder,
            log,
            replay: VecDeque::new(),
        };
        rec.emit(LogEvent::Session {
            label: rec.config.label.clone(),
            readback: rec.config.readback,
            frame_rate: rec.config.frame_rate,
            stability_frames: rec.config.stability_frames,
            timeout: rec.config.timeout,
        })?;
        let source = rec.config.source.clone();
        rec.select_source(source)?;
        Ok(rec)
    }

    pub fn config(&self) -> &RecognizerConfig {
        &self.config
    }

    pub fn ring(&self) -> &AudioRing {
        &self.ring
    }

    pub fn is_gated(&self) -> bool {
        self.gated
    }

    pub fn is_listening(&self) -> bool {
        self.listening.is_some()
    }

    pub fn active_grammar(&self) -> Option<&Arc<GrammarFst>> {
        self.active.as_ref()
    }

    pub fn library(&self) -> &GrammarLibrary {
        &self.library
    }

    /// Every result produced so far.
    pub fn results(&self) -> &[DecodeResult] {
        &self.results
    }

    /// Log events in order, without wall-clock fields.
    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    /// Audit of which frames went into the search.
    pub fn windows(&self) -> &[DecodeWindow] {
        &self.windows
    }

    pub fn log_path(&self) -> Option<&std::path::Path> {
        self.log.as_ref().map(|l| l.path())
    }

    fn emit(&mut self, event: LogEvent) -> Result<(), DecoderError> {
        if let Some(log) = &mut self.log {
            log.write(&event)?;
        }
        self.events.push(event);
        Ok(())
    }

    fn record(&mut self, entry: RecordEntry) -> Result<(), DecoderError> {
        if let Some(r) = &mut self.recorder {
            r.write(&entry)?;
        }
        Ok(())
    }

    /// Flushes the session record.
    pub fn flush(&mut self) -> Result<(), DecoderError> {
        if let Some(r) = &mut self.recorder {
            r.flush()?;
        }
        Ok(())
    }

    pub fn feed(&mut self, frames: impl IntoIterator<Item = ObservationFrame>) -> Result<(), DecoderError> {
        for f in frames {
            self.feed_frame(f)?;
        }
        Ok(())
    }

    pub fn feed_frame(&mut self, frame: ObservationFrame) -> Result<(), DecoderError> {
        frame.validate()?;
        if self.recorder.is_some() {
            self.record(RecordEntry::Frame(frame.clone()))?;
        }
        self.ring.push(frame)
    }

    fn abort(&mut self, reason: &str, at: f64) -> Result<(), DecoderError> {
        if let Some(l) = self.listening.take() {
            let partial = l.search.best().map(|h| h.text()).unwrap_or_default();
            self.emit(LogEvent::Aborted {
                reason: reason.to_string(),
                partial,
                t: at,
            })?;
        }
        Ok(())
    }

    /// Activates `fst` for the next utterance. Switching while an utterance
    /// is being decoded discards it.
    pub fn set_grammar(&mut self, fst: Arc<GrammarFst>, at: f64) -> Result<(), DecoderError> {
        if self
            .active
            .as_ref()
            .is_some_and(|a| a.grammar_id() == fst.grammar_id())
        {
            return Ok(());
        }
        self.record(RecordEntry::Grammar {
            id: fst.grammar_id().to_string(),
            t: at,
        })?;
        self.abort("grammar", at)?;
        let id = fst.grammar_id().to_string();
        self.active = Some(fst);
        self.emit(LogEvent::GrammarAck { id, t: at })
    }

    pub fn set_grammar_id(&mut self, id: &str, at: f64) -> Result<(), DecoderError> {
        let fst = self.library.get(id)?;
        self.set_grammar(fst, at)
    }

    /// Robot speech started (`true`) or ended (`false`) at `at` seconds.
    pub fn set_gate(&mut self, robot_speaking: bool, at: f64) -> Result<(), DecoderError> {
        match (self.gated, robot_speaking) {
            (true, true) => return Err(DecoderError::DoubleGateStart),
            (false, false) => return Err(DecoderError::DoubleGateEnd),
            _ => {}
        }
        self.record(RecordEntry::Gate { robot_speaking, t: at })?;
        self.gated = robot_speaking;
        self.emit(LogEvent::Gate { robot_speaking, t: at })?;
        if robot_speaking {
            self.pending = None;
            return self.abort("gate", at);
        }
        let Some(fst) = self.active.clone() else {
            return Ok(());
        };
        let rewound = ((at - self.config.readback) * self.config.frame_rate).round().max(0.0) as u64;
        let first = rewound.max(self.ring.floor());
        self.windows.push(DecodeWindow {
            grammar_id: fst.grammar_id().to_string(),
            ungate_time: at,
            first_frame: first,
            end_frame: first,
        });
        self.listening = Some(Listening {
            search: Search::new(fst, self.config.search(), first),
            ungate_time: at,
            next_frame: first,
            window: self.windows.len() - 1,
            stable: None,
            stable_count: 0,
        });
        Ok(())
    }

    /// Decodes every frame that has arrived since the last call and returns
    /// the current best partial hypothesis, or `None` when nothing was
    /// decoded.
    pub fn step(&mut self) -> Option<Hypothesis> {
        if self.gated || self.pending.is_some() {
            return None;
        }
        let floor = self.ring.floor();
        let cursor = self.ring.cursor();
        let l = self.listening.as_mut()?;
        if l.next_frame < floor {
            if l.search.frames_decoded() > 0 {
                // History we still needed was overwritten.
                let t = cursor as f64 / self.config.frame_rate;
                let _ = self.abort("overrun", t);
                return None;
            }
            let fst = Arc::clone(l.search.fst());
            l.search = Search::new(fst, self.config.search(), floor);
            l.next_frame = floor;
            self.windows[l.window].first_frame = floor;
            self.windows[l.window].end_frame = floor;
        }
        if l.next_frame >= cursor {
            return None;
        }
        let mut best = None;
        let mut fired = None;
        while l.next_frame < cursor {
            let frame = self.ring.get(l.next_frame).expect("frame within ring");
            l.search.advance(frame);
            l.next_frame += 1;
            self.windows[l.window].end_frame = l.next_frame;
            let hyp = l.search.best();
            let complete = hyp
                .as_ref()
                .filter(|h| h.in_final && !h.is_silence_only())
                .map(|h| h.words.clone());
            match complete {
                Some(words) if l.stable.as_ref() == Some(&words) => l.stable_count += 1,
                Some(words) => {
                    l.stable = Some(words);
                    l.stable_count = 1;
                }
                None => {
                    l.stable = None;
                    l.stable_count = 0;
                }
            }
            best = hyp;
            if l.stable_count >= self.config.stability_frames {
                fired = Some(l.next_frame as f64 / self.config.frame_rate);
                break;
            }
        }
        if let Some(end) = fired {
            let result = self.finish_utterance(best.clone(), end, EndpointKind::Early);
            self.pending = Some(result);
        }
        best
    }

    fn finish_utterance(&mut self, hyp: Option<Hypothesis>, end: f64, kind: EndpointKind) -> DecodeResult {
        let l = self.listening.take().expect("listening");
        let window = &self.windows[l.window];
        let start = (window.first_frame as f64 / self.config.frame_rate).min(end);
        let (text, words, score) = match hyp {
            Some(h) => (h.text(), h.spans, h.score),
            None => (SILENCE.to_string(), Vec::new(), 0.0),
        };
        DecodeResult {
            segment: UtteranceSegment::auto(start, end, text),
            words,
            score,
            endpoint: kind,
            grammar_id: window.grammar_id.clone(),
        }
    }

    /// Returns a finished result: an early endpoint found by
    /// [`Recognizer::step`], or a timeout once `now` is `timeout` seconds past
    /// the ungate.
    pub fn poll_result(&mut self, now: f64) -> Result<Option<DecodeResult>, DecoderError> {
        let result = match self.pending.take() {
            Some(r) => r,
            None => {
                let Some(l) = &self.listening else {
                    return Ok(None);
                };
                if self.gated || now - l.ungate_time < self.config.timeout - TIME_EPS {
                    return Ok(None);
                }
                let hyp = if l.search.frames_decoded() > 0 {
                    l.search.best_complete()
                } else {
                    None
                };
                self.finish_utterance(hyp, now, EndpointKind::Timeout)
            }
        };
        self.emit(LogEvent::Result {
            start: result.segment.start,
            end: result.segment.end,
            text: result.segment.text.clone(),
            kind: result.endpoint,
            score: result.score,
            grammar: result.grammar_id.clone(),
            words: result.words.clone(),
        })?;
        self.results.push(result.clone());
        Ok(Some(result))
    }

    /// Applies one record entry. Frames are fed, decoded and polled with
    /// `now` at the end of the frame, so a live run and its replay take the
    /// same path.
    pub fn process(&mut self, entry: RecordEntry) -> Result<Option<DecodeResult>, DecoderError> {
        match entry {
            RecordEntry::Frame(f) => {
                let now = (f.index + 1) as f64 / self.config.frame_rate;
                self.feed_frame(f)?;
                self.step();
                self.poll_result(now)
            }
            RecordEntry::Gate { robot_speaking, t } => {
                self.set_gate(robot_speaking, t)?;
                Ok(None)
            }
            RecordEntry::Grammar { id, t } => {
                self.set_grammar_id(&id, t)?;
                Ok(None)
            }
        }
    }

    /// Chooses where [`Recognizer::pump`] takes input from. A file source is
    /// read completely up front.
    pub fn select_source(&mut self, source: Source) -> Result<(), DecoderError> {
        self.replay = match &source {
            Source::Live => VecDeque::new(),
            Source::File(path) => read_record(path)?.into(),
        };
        self.source = source;
        Ok(())
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    /// Processes every pending entry of a file source. Live sources are fed
    /// through [`Recognizer::process`] by the caller.
    pub fn pump(&mut self) -> Result<Vec<DecodeResult>, DecoderError> {
        let mut out = Vec::new();
        while let Some(entry) = self.replay.pop_front() {
            if let Some(r) = self.process(entry)? {
                out.push(r);
            }
        }
        self.flush()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{compile_grammar, parse_jsgf};

    fn library() -> GrammarLibrary {
        let mut lib = GrammarLibrary::builtin();
        let ast = parse_jsgf("#JSGF V1.0; grammar yesno; public <a> = yes | no;").unwrap();
        lib.insert("yesno", compile_grammar(&ast, true).unwrap());
        lib
    }

    fn recognizer(config: RecognizerConfig) -> Recognizer {
        Recognizer::new(config, library()).unwrap()
    }

    /// One-hot frames for `(symbol, count)` runs starting at `first`.
    fn frames(first: u64, runs: &[(&str, u64)]) -> Vec<ObservationFrame> {
        let mut out = Vec::new();
        let mut i = first;
        for &(sym, n) in runs {
            for _ in 0..n {
                out.push(ObservationFrame::one_hot(i, sym));
                i += 1;
            }
        }
        out
    }

    fn run(rec: &mut Recognizer, frames: Vec<ObservationFrame>) -> Vec<(u64, DecodeResult)> {
        let mut out = Vec::new();
        for f in frames {
            let i = f.index;
            if let Some(r) = rec.process(RecordEntry::Frame(f)).unwrap() {
                out.push((i, r));
            }
        }
        out
    }

    fn listen(rec: &mut Recognizer, grammar: &str, at: f64) {
        rec.set_grammar_id(grammar, at).unwrap();
        rec.set_gate(true, at).unwrap();
        rec.set_gate(false, at).unwrap();
    }

    #[test]
    fn argmax_partial() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "yesno", 0.0);
        assert!(rec.step().is_none());
        let f = ObservationFrame::new(
            0,
            [("yes".to_string(), 0.9), ("no".to_string(), 0.1)].into(),
        );
        rec.feed_frame(f).unwrap();
        assert_eq!(rec.step().unwrap().text(), "yes");
        assert!(rec.step().is_none());
    }

    #[test]
    fn early_endpoint_fires_k_frames_after_stability() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "yesno", 0.0);
        // Speech ends at frame 119; the final-state condition holds from 120.
        let results = run(&mut rec, frames(0, &[("!SIL", 60), ("yes", 60), ("!SIL", 200)]));
        assert_eq!(results.len(), 1);
        let (at, r) = &results[0];
        assert_eq!(*at, 149);
        assert_eq!(r.endpoint, EndpointKind::Early);
        assert_eq!(r.text(), "yes");
        assert_eq!(r.segment.start, 0.0);
        assert_eq!(r.segment.end, 1.5);
        assert_eq!(r.words, vec![WordSpan { word: "yes".into(), start_frame: 60, end_frame: 120 }]);
        assert!(!rec.is_listening());
    }

    #[test]
    fn timeout_yields_silence() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "yesno", 0.0);
        let results = run(&mut rec, frames(0, &[("!SIL", 1200)]));
        assert_eq!(results.len(), 1);
        let (at, r) = &results[0];
        assert_eq!(*at, 999);
        assert_eq!(r.endpoint, EndpointKind::Timeout);
        assert_eq!(r.text(), SILENCE);
        assert_eq!(r.segment.end, 10.0);
    }

    #[test]
    fn timeout_without_frames_still_answers() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "yesno", 0.0);
        let r = rec.poll_result(10.0).unwrap().unwrap();
        assert_eq!(r.text(), SILENCE);
        assert_eq!(r.score, 0.0);
        assert!(rec.poll_result(20.0).unwrap().is_none());
    }

    #[test]
    fn readback_rewinds_decode_window() {
        let mut rec = recognizer(RecognizerConfig::default());
        rec.set_grammar_id("adapt2", 0.0).unwrap();
        rec.set_gate(true, 0.0).unwrap();
        rec.feed(frames(0, &[("!SIL", 600)])).unwrap();
        rec.set_gate(false, 5.5).unwrap();
        assert_eq!(rec.windows()[0].first_frame, 500);
    }

    #[test]
    fn readback_clamps_to_ring_floor() {
        let mut rec = recognizer(RecognizerConfig {
            readback: 2.0,
            ring_capacity: 100,
            ..RecognizerConfig::default()
        });
        rec.set_grammar_id("adapt2", 0.0).unwrap();
        rec.set_gate(true, 0.0).unwrap();
        rec.feed(frames(0, &[("!SIL", 600)])).unwrap();
        rec.set_gate(false, 5.5).unwrap();
        assert_eq!(rec.windows()[0].first_frame, 500);
    }

    #[test]
    fn gated_frames_are_recorded_not_decoded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let mut rec = recognizer(RecognizerConfig {
            record_path: Some(path.clone()),
            ..RecognizerConfig::default()
        });
        rec.set_grammar_id("yesno", 0.0).unwrap();
        rec.set_gate(true, 3.0).unwrap();
        assert!(run(&mut rec, frames(300, &[("yes", 100)])).is_empty());
        assert!(rec.windows().is_empty());
        rec.flush().unwrap();
        let recorded = read_record(&path).unwrap();
        let n = recorded
            .iter()
            .filter(|e| matches!(e, RecordEntry::Frame(_)))
            .count();
        assert_eq!(n, 100);
    }

    #[test]
    fn gate_events_must_alternate() {
        let mut rec = recognizer(RecognizerConfig::default());
        assert!(matches!(rec.set_gate(false, 0.0), Err(DecoderError::DoubleGateEnd)));
        rec.set_gate(true, 0.0).unwrap();
        assert!(matches!(rec.set_gate(true, 0.1), Err(DecoderError::DoubleGateStart)));
    }

    #[test]
    fn gate_on_aborts_hypothesis() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "yesno", 0.0);
        run(&mut rec, frames(0, &[("yes", 10)]));
        rec.set_gate(true, 0.1).unwrap();
        assert!(!rec.is_listening());
        assert!(rec.events().iter().any(
            |e| matches!(e, LogEvent::Aborted { reason, partial, .. } if reason == "gate" && partial == "yes")
        ));
    }

    #[test]
    fn grammar_switch_mid_utterance_aborts() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "adapt1", 0.0);
        run(&mut rec, frames(0, &[("hello", 20)]));
        rec.set_grammar_id("q1", 0.2).unwrap();
        assert!(!rec.is_listening());
        assert!(matches!(
            rec.events().last(),
            Some(LogEvent::GrammarAck { id, .. }) if id == "q1"
        ));
        assert!(rec
            .events()
            .iter()
            .any(|e| matches!(e, LogEvent::Aborted { reason, .. } if reason == "grammar")));
    }

    #[test]
    fn same_grammar_twice_is_a_no_op() {
        let mut rec = recognizer(RecognizerConfig::default());
        listen(&mut rec, "q1", 0.0);
        let before = rec.events().len();
        rec.set_grammar_id("q1", 0.1).unwrap();
        assert_eq!(rec.events().len(), before);
        assert!(rec.is_listening());
        assert!(matches!(
            rec.set_grammar_id("nope", 0.1),
            Err(DecoderError::Grammar(_))
        ));
    }

    #[test]
    fn switched_grammar_constrains_next_result() {
        let mut rec = recognizer(RecognizerConfig::default());
        rec.set_grammar_id("adapt1", 0.0).unwrap();
        listen(&mut rec, "q1", 0.0);
        let mut stream = frames(0, &[("!SIL", 10)]);
        for w in ["moved", "slowly", "for", "ten", "seconds"] {
            stream.extend(frames(stream.len() as u64, &[(w, 30)]));
        }
        stream.extend(frames(stream.len() as u64, &[("!SIL", 50)]));
        let results = run(&mut rec, stream);
        assert_eq!(results[0].1.text(), "moved slowly for ten seconds");
        assert_eq!(results[0].1.grammar_id, "q1");
    }

    #[test]
    fn replay_matches_live_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        let mut live = recognizer(RecognizerConfig {
            record_path: Some(path.clone()),
            ..RecognizerConfig::default()
        });
        live.process(RecordEntry::Grammar { id: "yesno".into(), t: 0.0 }).unwrap();
        live.process(RecordEntry::Gate { robot_speaking: true, t: 0.0 }).unwrap();
        run(&mut live, frames(0, &[("!SIL", 50)]));
        live.process(RecordEntry::Gate { robot_speaking: false, t: 0.5 }).unwrap();
        run(&mut live, frames(50, &[("!SIL", 20), ("no", 40), ("!SIL", 60)]));
        live.flush().unwrap();
        assert_eq!(live.results().len(), 1);

        let replay = |p: &PathBuf| {
            let mut r = recognizer(RecognizerConfig {
                source: Source::File(p.clone()),
                ..RecognizerConfig::default()
            });
            let out = r.pump().unwrap();
            (out, r.events().to_vec())
        };
        let (a, ev_a) = replay(&path);
        let (b, ev_b) = replay(&path);
        assert_eq!(a, live.results());
        assert_eq!(a, b);
        assert_eq!(ev_a, ev_b);
        assert_eq!(ev_a, live.events());
    }

    #[test]
    fn missing_record_file() {
        let err = Recognizer::new(
            RecognizerConfig {
                source: Source::File("/no/such/record.jsonl".into()),
                ..RecognizerConfig::default()
            },
            library(),
        )
        .unwrap_err();
        assert!(matches!(err, DecoderError::MissingFile(_)));
    }

    #[test]
    fn config_validation() {
        let bad = RecognizerConfig {
            stability_frames: 0,
            ..RecognizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RecognizerConfig {
            readback: -0.1,
            ..RecognizerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

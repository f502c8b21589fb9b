//! The scripted tutoring interaction as an explicit state machine.
//!
//! [`Dialogue`] holds the current [`DialogueState`] plus the small amount of
//! context the script needs (adaptation failures, session energies) and maps
//! each [`DialogueEvent`] to a list of [`TransitionAction`]s. Prompts and
//! grammar ids come from a [`Script`] loaded from TOML.

mod energy;
mod node;
mod runner;
mod script;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SILENCE;

pub use energy::{compute_energy, pitch_for_speed, EnergySensor, FixedEnergy, KinectStub, BASE_PITCH_HZ, MAX_PITCH_HZ};
pub use node::{DialogueNode, DialogueNodeConfig};
pub use runner::{DialogueRunner, PendingTimer, TimerKind};
pub use script::{AdaptStep, CommandStep, QuestionStep, QuizStep, Script, SessionStep, BUILTIN_SCRIPT};

#[derive(Debug, Error, PartialEq)]
pub enum DialogueError {
    #[error("event {event} is not legal in state {state}")]
    IllegalEvent { state: StateName, event: String },
    #[error("state {0} expects no speech")]
    StateExpectsNoSpeech(StateName),
    #[error("negative or non-finite input: {0}")]
    NegativeInput(String),
    #[error("unknown state name {0:?}")]
    UnknownState(String),
    #[error("invalid script: {0}")]
    Script(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateName {
    Intro,
    Adapt(u8),
    ExerciseIntro,
    Session(u8),
    QuizIntro,
    Question(u8),
    Commands(u8),
    Farewell,
    Aborted,
}

impl StateName {
    /// The scripted states in order (everything except `Aborted`).
    pub fn scripted() -> Vec<StateName> {
        let mut out = vec![StateName::Intro];
        out.extend((1..=3).map(StateName::Adapt));
        out.push(StateName::ExerciseIntro);
        out.extend((1..=4).map(StateName::Session));
        out.push(StateName::QuizIntro);
        out.extend((1..=4).map(StateName::Question));
        out.extend((1..=2).map(StateName::Commands));
        out.push(StateName::Farewell);
        out
    }

    pub fn expects_speech(self) -> bool {
        matches!(
            self,
            StateName::Adapt(_) | StateName::QuizIntro | StateName::Question(_) | StateName::Commands(_)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, StateName::Farewell | StateName::Aborted)
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateName::Intro => write!(f, "Intro"),
            StateName::Adapt(k) => write!(f, "Adapt{k}"),
            StateName::ExerciseIntro => write!(f, "ExerciseIntro"),
            StateName::Session(k) => write!(f, "Session{k}"),
            StateName::QuizIntro => write!(f, "QuizIntro"),
            StateName::Question(k) => write!(f, "Question{k}"),
            StateName::Commands(k) => write!(f, "Commands{k}"),
            StateName::Farewell => write!(f, "Farewell"),
            StateName::Aborted => write!(f, "Aborted"),
        }
    }
}

impl FromStr for StateName {
    type Err = DialogueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let indexed = |prefix: &str, max: u8| -> Option<u8> {
            let k: u8 = s.strip_prefix(prefix)?.parse().ok()?;
            (1..=max).contains(&k).then_some(k)
        };
        let name = match s {
            "Intro" => StateName::Intro,
            "ExerciseIntro" => StateName::ExerciseIntro,
            "QuizIntro" => StateName::QuizIntro,
            "Farewell" => StateName::Farewell,
            "Aborted" => StateName::Aborted,
            _ => {
                if let Some(k) = indexed("Adapt", 3) {
                    StateName::Adapt(k)
                } else if let Some(k) = indexed("Session", 4) {
                    StateName::Session(k)
                } else if let Some(k) = indexed("Question", 4) {
                    StateName::Question(k)
                } else if let Some(k) = indexed("Commands", 2) {
                    StateName::Commands(k)
                } else {
                    return Err(DialogueError::UnknownState(s.to_string()));
                }
            }
        };
        Ok(name)
    }
}

impl Serialize for StateName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub name: StateName,
    pub entered_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DialogueEvent {
    Recognized(String),
    Timeout,
    RobotSpeechEnded,
    EnergySessionDone(f64),
    Wizard(String),
    OperatorAbort,
}

impl DialogueEvent {
    fn label(&self) -> String {
        match self {
            DialogueEvent::Recognized(t) => format!("recognized({t:?})"),
            DialogueEvent::Timeout => "timeout".into(),
            DialogueEvent::RobotSpeechEnded => "robot_speech_ended".into(),
            DialogueEvent::EnergySessionDone(j) => format!("energy_session_done({j})"),
            DialogueEvent::Wizard(t) => format!("wizard({t:?})"),
            DialogueEvent::OperatorAbort => "operator_abort".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TransitionAction {
    Say(String),
    Display(String),
    SetGrammar(String),
    StartTimer(f64),
    Report(String),
    Abort,
}

/// Text of all `say` actions in one step, spoken as a single utterance.
pub fn spoken_text(actions: &[TransitionAction]) -> Option<String> {
    let parts: Vec<&str> = actions
        .iter()
        .filter_map(|a| match a {
            TransitionAction::Say(t) => Some(t.as_str()),
            _ => None,
        })
        .collect();
    (!parts.is_empty()).then(|| parts.join(" "))
}

/// Seconds the robot takes to say `text` at `words_per_second`.
pub fn speech_duration(text: &str, words_per_second: f64) -> f64 {
    text.split_whitespace().count() as f64 / words_per_second
}

/// Grammar id the recognizer should use while in `state`.
pub fn grammar_for_state(script: &Script, state: StateName) -> Result<String, DialogueError> {
    let idx = |k: u8| k as usize - 1;
    match state {
        StateName::Adapt(k) => Ok(script.adapt[idx(k)].grammar.clone()),
        StateName::QuizIntro => Ok(script.quiz.grammar.clone()),
        StateName::Question(k) => Ok(script.questions[idx(k)].grammar.clone()),
        StateName::Commands(k) => Ok(script.commands[idx(k)].grammar.clone()),
        other => Err(DialogueError::StateExpectsNoSpeech(other)),
    }
}

/// "a, b, c, or d"
fn list_choices(choices: &[String]) -> String {
    match choices {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{}, or {}", init.join(", "), last),
    }
}

/// The robot's acknowledgement of a command: "put your left arm up" becomes
/// "ok i will put my left arm up".
pub fn command_ack(option: &str) -> String {
    let words: Vec<&str> = option
        .split_whitespace()
        .map(|w| if w == "your" { "my" } else { w })
        .collect();
    format!("ok i will {}", words.join(" "))
}

fn format_energy(joules: f64) -> String {
    format!("{joules:.1}")
}

/// The interaction state machine.
#[derive(Debug, Clone)]
pub struct Dialogue {
    script: Script,
    state: DialogueState,
    adapt_failures: u32,
    energies: Vec<f64>,
    answers: Vec<(StateName, String)>,
    trace: Vec<DialogueState>,
}

impl Dialogue {
    pub fn new(script: Script) -> Self {
        let state = DialogueState {
            name: StateName::Intro,
            entered_at: 0.0,
        };
        Self {
            script,
            state,
            adapt_failures: 0,
            energies: Vec::new(),
            answers: Vec::new(),
            trace: vec![state],
        }
    }

    pub fn builtin() -> Self {
        Self::new(Script::builtin())
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    pub fn state(&self) -> DialogueState {
        self.state
    }

    /// Every state entered so far, starting with `Intro`.
    pub fn trace(&self) -> &[DialogueState] {
        &self.trace
    }

    /// Session energies reported so far.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Answers given in question and command states.
    pub fn answers(&self) -> &[(StateName, String)] {
        &self.answers
    }

    /// Actions for entering `Intro` at time `at`.
    pub fn start(&mut self, at: f64) -> Vec<TransitionAction> {
        self.state.entered_at = at;
        self.trace[0].entered_at = at;
        let mut out = Vec::new();
        self.entry_actions(StateName::Intro, &mut out);
        out
    }

    fn enter(&mut self, name: StateName, at: f64) {
        self.state = DialogueState { name, entered_at: at };
        self.trace.push(self.state);
    }

    /// Say/display actions for a state; speech-expecting states get their
    /// grammar first. `Intro` also loads the first adaptation grammar since
    /// the child answers its closing request.
    fn entry_actions(&self, name: StateName, out: &mut Vec<TransitionAction>) {
        let s = &self.script;
        let say_show = |text: String, out: &mut Vec<TransitionAction>| {
            out.push(TransitionAction::Say(text.clone()));
            out.push(TransitionAction::Display(text));
        };
        let energy = self.energies.last().copied().map(format_energy).unwrap_or_default();
        match name {
            StateName::Intro => {
                out.push(TransitionAction::SetGrammar(s.adapt[0].grammar.clone()));
                say_show(s.intro.clone(), out);
            }
            StateName::Adapt(k) => {
                out.push(TransitionAction::SetGrammar(s.adapt[k as usize - 1].grammar.clone()));
                say_show(s.adapt[k as usize - 1].prompt.clone(), out);
            }
            StateName::ExerciseIntro => say_show(s.exercise_intro.clone(), out),
            StateName::Session(k) => {
                say_show(s.sessions[k as usize - 1].prompt.replace("{energy}", &energy), out)
            }
            StateName::QuizIntro => {
                out.push(TransitionAction::SetGrammar(s.quiz.grammar.clone()));
                say_show(s.quiz.prompt.replace("{energy}", &energy), out);
            }
            StateName::Question(k) => {
                let q = &s.questions[k as usize - 1];
                out.push(TransitionAction::SetGrammar(q.grammar.clone()));
                say_show(format!("{} {}?", q.prompt, list_choices(&q.answers)), out);
            }
            StateName::Commands(k) => {
                let c = &s.commands[k as usize - 1];
                out.push(TransitionAction::SetGrammar(c.grammar.clone()));
                say_show(format!("{} {}.", c.prompt, list_choices(&c.options)), out);
            }
            StateName::Farewell => say_show(s.farewell.clone(), out),
            StateName::Aborted => {
                say_show(s.abort.clone(), out);
                out.push(TransitionAction::Abort);
            }
        }
    }

    fn illegal(&self, event: &DialogueEvent) -> DialogueError {
        DialogueError::IllegalEvent {
            state: self.state.name,
            event: event.label(),
        }
    }

    /// Applies one event at time `at`. Illegal events leave the machine
    /// untouched.
    pub fn advance(&mut self, event: &DialogueEvent, at: f64) -> Result<Vec<TransitionAction>, DialogueError> {
        use DialogueEvent as E;
        use StateName as S;

        let state = self.state.name;
        if state == S::Aborted {
            return Ok(Vec::new());
        }
        if *event == E::OperatorAbort {
            return Ok(self.goto(S::Aborted, at, Vec::new()));
        }
        let heard = match event {
            E::Recognized(t) | E::Wizard(t) => Some(t.trim().to_lowercase()),
            E::Timeout => Some(SILENCE.to_string()),
            _ => None,
        };
        let is_timeout = *event == E::Timeout;
        let mut out = Vec::new();
        match (state, event) {
            (S::Intro, E::RobotSpeechEnded) => {
                // Intro's closing request is the first adaptation phrase.
                self.enter(S::Adapt(1), at);
                out.push(TransitionAction::StartTimer(self.script.listen_timeout));
                Ok(out)
            }
            (s, E::RobotSpeechEnded) if s.expects_speech() => {
                out.push(TransitionAction::StartTimer(self.script.listen_timeout));
                Ok(out)
            }
            (S::ExerciseIntro, E::RobotSpeechEnded) => Ok(self.goto(S::Session(1), at, out)),
            (S::Session(k), E::RobotSpeechEnded) => {
                out.push(TransitionAction::StartTimer(self.script.sessions[k as usize - 1].seconds));
                Ok(out)
            }
            (S::Session(k), E::EnergySessionDone(_) | E::Timeout) => {
                let joules = match event {
                    E::EnergySessionDone(j) => *j,
                    _ => 0.0,
                };
                if !(joules >= 0.0) || !joules.is_finite() {
                    return Err(DialogueError::NegativeInput(format!("energy {joules}")));
                }
                self.energies.push(joules);
                out.push(TransitionAction::Report(format!(
                    "session{k}_energy {}",
                    format_energy(joules)
                )));
                let next = if k < 4 { S::Session(k + 1) } else { S::QuizIntro };
                Ok(self.goto(next, at, out))
            }
            (S::Farewell, E::RobotSpeechEnded) => Ok(out),
            // Speech while the robot is not waiting for an answer is ignored.
            (S::Intro | S::ExerciseIntro | S::Session(_) | S::Farewell, E::Recognized(_) | E::Wizard(_)) => Ok(out),
            (S::Adapt(k), _) if heard.is_some() => {
                let heard = heard.unwrap_or_default();
                let step = &self.script.adapt[k as usize - 1];
                if heard == step.phrase {
                    self.adapt_failures = 0;
                    let next = if k < 3 { S::Adapt(k + 1) } else { S::ExerciseIntro };
                    Ok(self.goto(next, at, out))
                } else {
                    self.adapt_failures += 1;
                    if self.adapt_failures >= self.script.max_adapt_failures {
                        return Ok(self.goto(S::Aborted, at, out));
                    }
                    out.push(TransitionAction::SetGrammar(step.grammar.clone()));
                    out.push(TransitionAction::Say(step.reprompt.clone()));
                    out.push(TransitionAction::Display(step.reprompt.clone()));
                    Ok(out)
                }
            }
            (S::QuizIntro, _) if heard.is_some() => Ok(self.goto(S::Question(1), at, out)),
            (S::Question(k), _) if heard.is_some() => {
                let heard = heard.unwrap_or_default();
                let q = &self.script.questions[k as usize - 1];
                let feedback = if is_timeout || heard == SILENCE {
                    format!("No answer. The answer was: {}", q.correct)
                } else if heard == q.correct {
                    format!("Correct: {heard}")
                } else {
                    format!("Wrong: {heard}. The answer was: {}", q.correct)
                };
                self.answers.push((state, heard));
                let next = if k < 4 { S::Question(k + 1) } else { S::Commands(1) };
                if let Ok(g) = grammar_for_state(&self.script, next) {
                    out.push(TransitionAction::SetGrammar(g));
                }
                out.push(TransitionAction::Display(feedback));
                Ok(self.goto(next, at, out))
            }
            (S::Commands(k), _) if heard.is_some() => {
                let heard = heard.unwrap_or_default();
                let c = &self.script.commands[k as usize - 1];
                let next = if k < 2 { S::Commands(k + 1) } else { S::Farewell };
                if let Ok(g) = grammar_for_state(&self.script, next) {
                    out.push(TransitionAction::SetGrammar(g));
                }
                if c.options.contains(&heard) {
                    out.push(TransitionAction::Say(command_ack(&heard)));
                }
                self.answers.push((state, heard));
                Ok(self.goto(next, at, out))
            }
            _ => Err(self.illegal(event)),
        }
    }

    /// Enters `next`, appending its entry actions to `out` without repeating
    /// a grammar already set by the caller.
    fn goto(&mut self, next: StateName, at: f64, mut out: Vec<TransitionAction>) -> Vec<TransitionAction> {
        let mut entry = Vec::new();
        self.entry_actions(next, &mut entry);
        if let (Some(TransitionAction::SetGrammar(a)), Some(TransitionAction::SetGrammar(b))) =
            (out.first(), entry.first())
        {
            if a == b {
                entry.remove(0);
            }
        }
        out.extend(entry);
        self.enter(next, at);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{enumerate_language, GrammarLibrary};
    use std::collections::BTreeSet;

    fn said(actions: &[TransitionAction]) -> Vec<&str> {
        actions
            .iter()
            .filter_map(|a| match a {
                TransitionAction::Say(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }

    fn at_state(target: StateName) -> Dialogue {
        let mut d = Dialogue::builtin();
        d.start(0.0);
        let mut t = 0.0;
        for ev in canonical_events() {
            if d.state().name == target {
                return d;
            }
            t += 1.0;
            d.advance(&ev, t).unwrap();
        }
        assert_eq!(d.state().name, target);
        d
    }

    fn canonical_events() -> Vec<DialogueEvent> {
        let s = Script::builtin();
        let r = |t: &str| DialogueEvent::Recognized(t.to_string());
        let mut ev = vec![DialogueEvent::RobotSpeechEnded];
        for (i, a) in s.adapt.iter().enumerate() {
            if i > 0 {
                ev.push(DialogueEvent::RobotSpeechEnded);
            }
            ev.push(r(&a.phrase));
        }
        ev.push(DialogueEvent::RobotSpeechEnded);
        for j in [1.0, 5.0, 20.0, 40.0] {
            ev.push(DialogueEvent::RobotSpeechEnded);
            ev.push(DialogueEvent::EnergySessionDone(j));
        }
        ev.push(DialogueEvent::RobotSpeechEnded);
        ev.push(r(&s.quiz.phrase));
        for q in &s.questions {
            ev.push(DialogueEvent::RobotSpeechEnded);
            ev.push(r(&q.correct));
        }
        for c in &s.commands {
            ev.push(DialogueEvent::RobotSpeechEnded);
            ev.push(r(&c.options[0]));
        }
        ev.push(DialogueEvent::RobotSpeechEnded);
        ev
    }

    #[test]
    fn quiz_start() {
        let mut d = at_state(StateName::QuizIntro);
        d.advance(&DialogueEvent::RobotSpeechEnded, 100.0).unwrap();
        let a = d
            .advance(&DialogueEvent::Recognized("zeeno start the quiz".into()), 101.0)
            .unwrap();
        assert_eq!(d.state().name, StateName::Question(1));
        assert_eq!(d.state().entered_at, 101.0);
        assert_eq!(a.len(), 3);
        assert_eq!(a[0], TransitionAction::SetGrammar("q1".into()));
        let TransitionAction::Say(text) = &a[1] else { panic!("{a:?}") };
        for ans in &d.script().questions[0].answers {
            assert!(text.contains(ans.as_str()));
        }
        assert!(matches!(a[2], TransitionAction::Display(_)));
    }

    #[test]
    fn quiz_starts_anyway_on_timeout() {
        let mut d = at_state(StateName::QuizIntro);
        d.advance(&DialogueEvent::Timeout, 5.0).unwrap();
        assert_eq!(d.state().name, StateName::Question(1));
        let mut d = at_state(StateName::QuizIntro);
        d.advance(&DialogueEvent::Recognized(SILENCE.into()), 5.0).unwrap();
        assert_eq!(d.state().name, StateName::Question(1));
    }

    #[test]
    fn command_acknowledged() {
        let mut d = at_state(StateName::Commands(1));
        let a = d
            .advance(&DialogueEvent::Recognized("put your left arm up".into()), 1.0)
            .unwrap();
        assert_eq!(d.state().name, StateName::Commands(2));
        assert!(said(&a).contains(&"ok i will put my left arm up"));
        assert_eq!(a[0], TransitionAction::SetGrammar("commands2".into()));

        let mut d = at_state(StateName::Commands(1));
        let a = d.advance(&DialogueEvent::Timeout, 1.0).unwrap();
        assert!(!said(&a).iter().any(|s| s.starts_with("ok i will")));
    }

    #[test]
    fn operator_abort_from_anywhere() {
        for name in StateName::scripted() {
            let mut d = at_state(name);
            let a = d.advance(&DialogueEvent::OperatorAbort, 1.0).unwrap();
            assert_eq!(d.state().name, StateName::Aborted);
            assert_eq!(a.last(), Some(&TransitionAction::Abort));
            assert!(d.advance(&DialogueEvent::Timeout, 2.0).unwrap().is_empty());
        }
    }

    #[test]
    fn grammar_for_states() {
        let s = Script::builtin();
        let lib = GrammarLibrary::builtin();
        let lang = |name: StateName| -> BTreeSet<String> {
            let g = grammar_for_state(&s, name).unwrap();
            enumerate_language(&lib.get(&g).unwrap(), 100).unwrap()
        };
        assert_eq!(
            lang(StateName::Adapt(2)),
            BTreeSet::from(["testing a b c".to_string(), SILENCE.to_string()])
        );
        let q3 = lang(StateName::Question(3));
        assert_eq!(q3.len(), 5);
        assert!(q3.contains("playing football for twenty minutes") && q3.contains(SILENCE));
        assert_eq!(
            grammar_for_state(&s, StateName::Session(1)),
            Err(DialogueError::StateExpectsNoSpeech(StateName::Session(1)))
        );
        for name in StateName::scripted() {
            assert_eq!(grammar_for_state(&s, name).is_ok(), name.expects_speech());
        }
    }

    #[test]
    fn every_script_phrase_is_in_its_grammar() {
        let s = Script::builtin();
        let lib = GrammarLibrary::builtin();
        for name in StateName::scripted().into_iter().filter(|n| n.expects_speech()) {
            let g = grammar_for_state(&s, name).unwrap();
            let lang: BTreeSet<String> = enumerate_language(&lib.get(&g).unwrap(), 100).unwrap();
            let expected: Vec<String> = match name {
                StateName::Adapt(k) => vec![s.adapt[k as usize - 1].phrase.clone()],
                StateName::QuizIntro => vec![s.quiz.phrase.clone()],
                StateName::Question(k) => s.questions[k as usize - 1].answers.clone(),
                StateName::Commands(k) => s.commands[k as usize - 1].options.clone(),
                _ => unreachable!(),
            };
            let mut want: BTreeSet<String> = expected.into_iter().collect();
            want.insert(SILENCE.to_string());
            assert_eq!(lang, want, "{name}");
        }
    }

    #[test]
    fn canonical_run_visits_every_state_once() {
        let mut d = Dialogue::builtin();
        d.start(0.0);
        for (i, ev) in canonical_events().iter().enumerate() {
            d.advance(ev, i as f64 + 1.0).unwrap();
        }
        let names: Vec<StateName> = d.trace().iter().map(|s| s.name).collect();
        assert_eq!(names, StateName::scripted());
        assert_eq!(d.energies(), &[1.0, 5.0, 20.0, 40.0]);
    }

    #[test]
    fn timeouts_never_deadlock() {
        // Driving with robot_speech_ended / timeout alone still ends the run.
        let mut d = Dialogue::builtin();
        d.start(0.0);
        let mut steps = 0;
        while !d.state().name.is_terminal() {
            steps += 1;
            assert!(steps < 100);
            let _ = d.advance(&DialogueEvent::RobotSpeechEnded, steps as f64);
            if d.state().name.is_terminal() {
                break;
            }
            d.advance(&DialogueEvent::Timeout, steps as f64 + 0.5).unwrap();
        }
        // Timeouts in the adaptation stage fail fast.
        assert_eq!(d.state().name, StateName::Aborted);

        for name in StateName::scripted().into_iter().filter(|n| n.expects_speech()) {
            let mut d = at_state(name);
            d.advance(&DialogueEvent::Timeout, 1.0).unwrap();
        }
    }

    #[test]
    fn fail_fast_after_three_silences() {
        let mut d = at_state(StateName::Adapt(2));
        let sil = DialogueEvent::Recognized(SILENCE.into());
        let a = d.advance(&sil, 1.0).unwrap();
        assert_eq!(a[0], TransitionAction::SetGrammar("adapt2".into()));
        d.advance(&sil, 2.0).unwrap();
        assert_eq!(d.state().name, StateName::Adapt(2));
        d.advance(&sil, 3.0).unwrap();
        assert_eq!(d.state().name, StateName::Aborted);

        // A success in between resets the count.
        let mut d = at_state(StateName::Adapt(1));
        d.advance(&sil, 1.0).unwrap();
        d.advance(&sil, 2.0).unwrap();
        d.advance(&DialogueEvent::Recognized("hello zeeno i am ready to start".into()), 3.0)
            .unwrap();
        d.advance(&sil, 4.0).unwrap();
        d.advance(&sil, 5.0).unwrap();
        assert_eq!(d.state().name, StateName::Adapt(2));
    }

    #[test]
    fn wizard_equals_recognized() {
        let s = Script::builtin();
        let mut a = at_state(StateName::Question(2));
        let mut b = at_state(StateName::Question(2));
        let text = s.questions[1].answers[2].clone();
        let ra = a.advance(&DialogueEvent::Recognized(text.clone()), 1.0).unwrap();
        let rb = b.advance(&DialogueEvent::Wizard(text), 1.0).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.trace(), b.trace());
    }

    #[test]
    fn illegal_events_rejected() {
        let mut d = at_state(StateName::Session(2));
        let before = d.state();
        let err = d.advance(&DialogueEvent::EnergySessionDone(f64::INFINITY), 1.0).unwrap_err();
        assert!(matches!(err, DialogueError::NegativeInput(_)));
        let err = d.advance(&DialogueEvent::Timeout, 1.0);
        assert!(err.is_ok());
        let mut d = at_state(StateName::Question(1));
        let err = d.advance(&DialogueEvent::EnergySessionDone(1.0), 1.0).unwrap_err();
        assert!(matches!(err, DialogueError::IllegalEvent { .. }));
        assert_eq!(d.state().name, StateName::Question(1));
        // Speech outside a listening turn is a no-op.
        let mut d = at_state(StateName::Session(2));
        assert_eq!(d.advance(&DialogueEvent::Recognized(SILENCE.into()), 1.0).unwrap(), vec![]);
        assert_eq!(d.state(), before);
        let mut d = at_state(StateName::Intro);
        assert!(d.advance(&DialogueEvent::Timeout, 1.0).is_err());
        let mut d = at_state(StateName::Session(1));
        assert!(d.advance(&DialogueEvent::EnergySessionDone(-1.0), 1.0).is_err());
    }

    #[test]
    fn grammar_set_before_every_listening_turn() {
        // Replays the canonical run and checks that when robot speech ends in
        // a speech-expecting state, the latest grammar is that state's one.
        let mut d = Dialogue::builtin();
        let mut grammar: Option<String> = None;
        let apply = |acts: &[TransitionAction], grammar: &mut Option<String>| {
            for a in acts {
                if let TransitionAction::SetGrammar(g) = a {
                    *grammar = Some(g.clone());
                }
                if let TransitionAction::Say(t) = a {
                    assert!(!t.is_empty());
                }
            }
        };
        apply(&d.start(0.0), &mut grammar);
        for (i, ev) in canonical_events().iter().enumerate() {
            let acts = d.advance(ev, i as f64).unwrap();
            apply(&acts, &mut grammar);
            let name = d.state().name;
            if *ev == DialogueEvent::RobotSpeechEnded && name.expects_speech() {
                assert_eq!(grammar.as_deref(), Some(grammar_for_state(d.script(), name).unwrap().as_str()));
            }
        }
    }

    #[test]
    fn state_names_round_trip() {
        for name in StateName::scripted().into_iter().chain([StateName::Aborted]) {
            assert_eq!(name.to_string().parse::<StateName>().unwrap(), name);
        }
        assert!("Question5".parse::<StateName>().is_err());
        assert!("Nope".parse::<StateName>().is_err());
        assert_eq!(StateName::scripted().len(), 17);
    }

    #[test]
    fn script_phrases() {
        let s = Script::builtin();
        assert_eq!(s.expected_phrases().len(), 20);
        assert_eq!(command_ack("wave your right hand"), "ok i will wave my right hand");
        assert!(Script::parse("listen_timeout = 1").is_err());
    }
}

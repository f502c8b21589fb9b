//! The dialogue manager as a portnet node.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use crate::messages::{OperatorCommand, SPEECH_END, SPEECH_START};
use crate::portnet::{subscribe, OutPort, PortError, SessionClock, Subscription};
use crate::topics;

use super::{
    spoken_text, speech_duration, Dialogue, DialogueEvent, DialogueRunner, EnergySensor, StateName,
    TransitionAction,
};

#[derive(Debug, Clone)]
pub struct DialogueNodeConfig {
    pub broker: String,
    /// Robot speaking rate in words per second.
    pub speech_rate: f64,
    /// Delay between the robot finishing and the end status being delivered.
    pub status_delay: f64,
    /// Divides every duration (speech, timers); 1 is real time.
    pub time_scale: f64,
}

impl DialogueNodeConfig {
    pub fn new(broker: impl Into<String>) -> Self {
        Self {
            broker: broker.into(),
            speech_rate: 2.5,
            status_delay: 0.0,
            time_scale: 1.0,
        }
    }
}

/// Subscribes to recognizer results and operator commands, publishes robot
/// speech, display text, grammar switches and state names. Robot speech is
/// simulated: a `start` status when the robot begins, an `end` status after
/// the utterance duration plus `status_delay`. The state name is published
/// after the speech, grammar and display messages of the step that entered it.
pub struct DialogueNode<S: EnergySensor> {
    config: DialogueNodeConfig,
    runner: DialogueRunner<S>,
    clock: SessionClock,
    asr: Subscription,
    operator: Subscription,
    say: OutPort,
    status: OutPort,
    grammar: OutPort,
    display: OutPort,
    state: OutPort,
    /// Virtual end times of queued robot utterances.
    speaking: VecDeque<f64>,
    finished: bool,
    log: Vec<(f64, TransitionAction)>,
}

impl<S: EnergySensor> DialogueNode<S> {
    pub fn connect(config: DialogueNodeConfig, dialogue: Dialogue, sensor: S) -> Result<Self, PortError> {
        let clock = SessionClock::start();
        let b = config.broker.as_str();
        Ok(Self {
            asr: subscribe(b, topics::ASR_SENTENCE)?,
            operator: subscribe(b, topics::OPERATOR_COMMAND)?,
            say: OutPort::open(b, topics::ROBOT_SAY, clock)?,
            status: OutPort::open(b, topics::ROBOT_SPEECH_STATUS, clock)?,
            grammar: OutPort::open(b, topics::DIALOGUE_GRAMMAR, clock)?,
            display: OutPort::open(b, topics::DISPLAY_TEXT, clock)?,
            state: OutPort::open(b, topics::DIALOGUE_STATE, clock)?,
            runner: DialogueRunner::new(dialogue, sensor),
            clock,
            config,
            speaking: VecDeque::new(),
            finished: false,
            log: Vec::new(),
        })
    }

    pub fn state(&self) -> StateName {
        self.runner.state()
    }

    pub fn dialogue(&self) -> &Dialogue {
        self.runner.dialogue()
    }

    /// Every action emitted so far with its session time.
    pub fn actions(&self) -> &[(f64, TransitionAction)] {
        &self.log
    }

    /// Session time in script seconds.
    fn now(&self) -> f64 {
        self.clock.now() * self.config.time_scale
    }

    fn stamp(&self) -> f64 {
        self.clock.now()
    }

    pub fn start(&mut self) -> Result<(), PortError> {
        let now = self.now();
        let actions = self.runner.start(now);
        self.apply(actions, now)?;
        self.publish_state()
    }

    fn publish_state(&mut self) -> Result<(), PortError> {
        let name = self.runner.state().to_string();
        let t = self.stamp();
        self.state.publish_at(&name, t)
    }

    fn apply(&mut self, actions: Vec<TransitionAction>, now: f64) -> Result<(), PortError> {
        let t = self.stamp();
        if let Some(text) = spoken_text(&actions) {
            if self.speaking.is_empty() {
                self.status.publish_at(SPEECH_START, t)?;
            }
            let begin = self.speaking.back().copied().unwrap_or(now).max(now);
            self.speaking.push_back(begin + speech_duration(&text, self.config.speech_rate));
            self.say.publish_at(&text, t)?;
        }
        for a in &actions {
            match a {
                TransitionAction::SetGrammar(g) => self.grammar.publish_at(g, t)?,
                TransitionAction::Display(d) => self.display.publish_at(d, t)?,
                TransitionAction::Abort => self.finished = true,
                _ => {}
            }
            self.log.push((now, a.clone()));
        }
        Ok(())
    }

    fn deliver(&mut self, event: DialogueEvent, now: f64) -> Result<(), PortError> {
        let before = self.runner.dialogue().trace().len();
        if let Ok(actions) = self.runner.handle(&event, now) {
            self.apply(actions, now)?;
            if self.runner.dialogue().trace().len() != before {
                self.publish_state()?;
            }
        }
        Ok(())
    }

    /// Processes whatever is due; returns `false` once the interaction is
    /// over and the robot has stopped speaking.
    pub fn step(&mut self) -> Result<bool, PortError> {
        let now = self.now();
        if let Some(&end) = self.speaking.front() {
            if now >= end + self.config.status_delay {
                self.speaking.pop_front();
                if self.speaking.is_empty() {
                    let t = self.stamp();
                    self.status.publish_at(SPEECH_END, t)?;
                    self.deliver(DialogueEvent::RobotSpeechEnded, now)?;
                }
            }
        }
        while let Some(msg) = self.operator.try_next()? {
            match OperatorCommand::parse_payload(&msg.payload) {
                Some(OperatorCommand::Wizard(text)) => self.deliver(DialogueEvent::Wizard(text), now)?,
                Some(OperatorCommand::Abort) => self.deliver(DialogueEvent::OperatorAbort, now)?,
                None => {}
            }
        }
        while let Some(msg) = self.asr.try_next()? {
            let text = msg.payload.trim();
            if !text.is_empty() {
                self.deliver(DialogueEvent::Recognized(text.to_string()), now)?;
            }
        }
        if self.speaking.is_empty() {
            let before = self.runner.dialogue().trace().len();
            if let Some((_, Ok(actions))) = self.runner.poll_timer(now) {
                self.apply(actions, now)?;
                if self.runner.dialogue().trace().len() != before {
                    self.publish_state()?;
                }
            }
        }
        let over = self.finished || self.runner.state().is_terminal();
        Ok(!(over && self.speaking.is_empty()))
    }

    /// Runs until the interaction ends or `stop` is set.
    pub fn run(&mut self, stop: &AtomicBool) -> Result<StateName, PortError> {
        self.start()?;
        while !stop.load(Ordering::Relaxed) && self.step()? {
            std::thread::sleep(Duration::from_millis(2));
        }
        Ok(self.runner.state())
    }
}

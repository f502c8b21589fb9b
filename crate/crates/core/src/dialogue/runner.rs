use super::{Dialogue, DialogueError, DialogueEvent, EnergySensor, StateName, TransitionAction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimerKind {
    /// Waiting for an answer; expiry is a `timeout` event.
    Listen,
    /// An exercise session; expiry reads the energy sensor.
    Session { index: u8, seconds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingTimer {
    pub deadline: f64,
    pub kind: TimerKind,
}

/// A [`Dialogue`] plus its timer and energy sensor. An event that changes
/// state or emits actions cancels the pending timer; a `start_timer` action
/// arms a new one.
pub struct DialogueRunner<S: EnergySensor> {
    dialogue: Dialogue,
    sensor: S,
    timer: Option<PendingTimer>,
}

impl<S: EnergySensor> DialogueRunner<S> {
    pub fn new(dialogue: Dialogue, sensor: S) -> Self {
        Self {
            dialogue,
            sensor,
            timer: None,
        }
    }

    pub fn dialogue(&self) -> &Dialogue {
        &self.dialogue
    }

    pub fn state(&self) -> StateName {
        self.dialogue.state().name
    }

    pub fn timer(&self) -> Option<PendingTimer> {
        self.timer
    }

    pub fn start(&mut self, at: f64) -> Vec<TransitionAction> {
        self.dialogue.start(at)
    }

    pub fn handle(&mut self, event: &DialogueEvent, at: f64) -> Result<Vec<TransitionAction>, DialogueError> {
        let before = self.dialogue.trace().len();
        let actions = self.dialogue.advance(event, at)?;
        if actions.is_empty() && self.dialogue.trace().len() == before {
            // Ignored event: the pending timer keeps running.
            return Ok(actions);
        }
        self.timer = None;
        for a in &actions {
            if let TransitionAction::StartTimer(seconds) = a {
                let kind = match self.dialogue.state().name {
                    StateName::Session(index) => TimerKind::Session {
                        index,
                        seconds: *seconds,
                    },
                    _ => TimerKind::Listen,
                };
                self.timer = Some(PendingTimer {
                    deadline: at + seconds,
                    kind,
                });
            }
        }
        Ok(actions)
    }

    /// Fires the timer if its deadline has passed. Returns the event that
    /// was delivered together with the resulting actions.
    pub fn poll_timer(&mut self, now: f64) -> Option<(DialogueEvent, Result<Vec<TransitionAction>, DialogueError>)> {
        let timer = self.timer?;
        if now < timer.deadline {
            return None;
        }
        self.timer = None;
        let event = match timer.kind {
            TimerKind::Listen => DialogueEvent::Timeout,
            TimerKind::Session { index, seconds } => {
                DialogueEvent::EnergySessionDone(self.sensor.session_energy(index as usize, seconds))
            }
        };
        let result = self.handle(&event, timer.deadline);
        Some((event, result))
    }
}

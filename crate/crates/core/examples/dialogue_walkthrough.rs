//! Drive the interaction script by hand and print every action.

use tutorbot::dialogue::{Dialogue, DialogueEvent, DialogueRunner, KinectStub, StateName, TransitionAction};

fn show(at: f64, state: StateName, actions: &[TransitionAction]) {
    for a in actions {
        let line = match a {
            TransitionAction::Say(t) => format!("say      {}", shorten(t)),
            TransitionAction::Display(t) => format!("display  {}", shorten(t)),
            TransitionAction::SetGrammar(g) => format!("grammar  {g}"),
            TransitionAction::StartTimer(s) => format!("timer    {s} s"),
            TransitionAction::Report(r) => format!("report   {r}"),
            TransitionAction::Abort => "abort".to_string(),
        };
        println!("{at:7.1} {:<13} {line}", state.to_string());
    }
}

fn shorten(t: &str) -> String {
    if t.len() > 60 {
        format!("{}...", &t[..57])
    } else {
        t.to_string()
    }
}

fn main() {
    let mut r = DialogueRunner::new(Dialogue::builtin(), KinectStub::new(3));
    let mut t = 0.0;
    let actions = r.start(t);
    show(t, r.state(), &actions);

    let answers = [
        "hello zeeno i am ready to start",
        "testing a b c",
        "testing one two three",
        "zeeno start the quiz",
        "moved quickly for twenty seconds",
        "stood still for ten seconds",
        "moved quickly for ten seconds",
        "moved quickly for twenty seconds",
    ];
    let mut answers = answers.iter().chain(std::iter::repeat(&"!SIL"));
    while !r.state().is_terminal() {
        t += 5.0;
        let actions = r.handle(&DialogueEvent::RobotSpeechEnded, t).unwrap();
        show(t, r.state(), &actions);
        if let Some(timer) = r.timer() {
            if !r.state().expects_speech() {
                t = timer.deadline;
                let (_, res) = r.poll_timer(t).unwrap();
                show(t, r.state(), &res.unwrap());
                continue;
            }
        }
        if r.state().expects_speech() {
            t += 2.0;
            let text = answers.next().unwrap().to_string();
            let actions = r.handle(&DialogueEvent::Recognized(text), t).unwrap();
            show(t, r.state(), &actions);
        }
    }
    println!("energies {:?}", r.dialogue().energies());
}

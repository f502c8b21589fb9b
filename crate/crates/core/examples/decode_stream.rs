//! Feed symbolic frames to the recognizer: the robot speaks, the gate opens
//! with read-back, the child answers and an early endpoint fires.

use tutorbot::decoder::{ObservationFrame, Recognizer, RecognizerConfig};
use tutorbot::grammar::GrammarLibrary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rec = Recognizer::new(RecognizerConfig::default(), GrammarLibrary::builtin())?;
    rec.set_grammar_id("q1", 0.0)?;

    let mut words = vec!["!SIL"; 100];
    for w in "moved quickly for twenty seconds".split(' ') {
        words.extend(std::iter::repeat_n(w, 35));
    }
    words.extend(std::iter::repeat_n("!SIL", 200));

    rec.set_gate(true, 0.0)?;
    for (i, w) in words.iter().enumerate() {
        if i == 80 {
            // End-of-speech arrives at 0.8 s; read-back rewinds 0.5 s.
            rec.set_gate(false, 0.8)?;
        }
        rec.feed_frame(ObservationFrame::one_hot(i as u64, w))?;
        rec.step();
        if let Some(r) = rec.poll_result((i + 1) as f64 / 100.0)? {
            println!(
                "{:.2}-{:.2} {:?} score {:.2}: {}",
                r.segment.start, r.segment.end, r.endpoint, r.score, r.text()
            );
            for w in &r.words {
                println!("  {w:?}");
            }
        }
    }
    Ok(())
}

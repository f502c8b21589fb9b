//! Run a synthetic closed-loop session and compare the evaluation of its
//! boundaries with the labels predicted from the message delays.

use tutorbot::evalkit::{build_report, Vocabulary, DEFAULT_TOLERANCE};
use tutorbot::dialogue::Script;
use tutorbot::simulator::{generate_session, SessionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = SessionConfig::new(11);
    config.confusion_prob = 0.05;
    config.disfluency_prob = 0.1;
    let out = generate_session(&config)?;

    println!("final state {} after {:.1} s", out.final_state, out.duration);
    for (row, label) in out.gold.rows().iter().zip(&out.oracle) {
        println!("{:8.2} {:8.2}  {:<40} predicted {label}", row.start, row.end, row.text);
    }
    for r in &out.results {
        println!("auto {:8.2} {:8.2}  {}", r.segment.start, r.segment.end, r.text());
    }
    let report = build_report(&[out.session_data()], &Vocabulary::from_script(&Script::builtin()), DEFAULT_TOLERANCE)?;
    print!("{}", report.to_table());
    Ok(())
}

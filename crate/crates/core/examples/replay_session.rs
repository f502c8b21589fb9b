//! Record a simulated session, then decode the recording twice and check
//! the results match the live run.

use tutorbot::decoder::{Recognizer, Source};
use tutorbot::grammar::GrammarLibrary;
use tutorbot::simulator::{generate_session, SessionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("tutorbot_replay_{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("session.record.jsonl");
    let config = SessionConfig::new(5).with_record(&path);
    let live = generate_session(&config)?;
    println!("recorded {} entries to {}", live.record().len(), path.display());

    for run in 1..=2 {
        let mut replay_config = config.recognizer.clone();
        replay_config.record_path = None;
        let mut rec = Recognizer::new(replay_config, GrammarLibrary::builtin())?;
        rec.select_source(Source::File(path.clone()))?;
        let results = rec.pump()?;
        let same = results.len() == live.results.len()
            && results.iter().zip(&live.results).all(|(a, b)| a.segment == b.segment);
        println!("replay {run}: {} results, identical to live: {same}", results.len());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

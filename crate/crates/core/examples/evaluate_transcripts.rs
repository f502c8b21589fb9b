//! Label hand transcriptions, score accuracy and WER.

use tutorbot::evalkit::{
    accuracy, classify_expected, classify_fluency, minor_disfluency_match, wer, TranscribedUtterance, Vocabulary,
};
use tutorbot::dialogue::Script;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vocab = Vocabulary::from_script(&Script::builtin());
    for text in [
        "moved quickly for twenty seconds",
        "moved quickly for twenty seco-",
        "*um stood still for ten seconds",
        "can i have a go",
    ] {
        let u = TranscribedUtterance::from_text(text)?;
        let clean = u.clean_words().join(" ");
        println!(
            "{text:<36} {:?} expected={} minor={:?}",
            classify_fluency(&u),
            classify_expected(&clean, &vocab),
            minor_disfluency_match(&clean, vocab.multiple_choice())
        );
    }
    println!("accuracy(2582, 2770) = {}", accuracy(2582, 2770)?);
    let r: Vec<&str> = "moved slowly for ten seconds".split(' ').collect();
    let h: Vec<&str> = "moved quickly for seconds".split(' ').collect();
    println!("wer = {:.1}%", wer(&r, &h)?);
    Ok(())
}

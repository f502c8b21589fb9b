use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{corrupt_observations, spread_posteriors, sub_seed, ConfusionModel, SimError};
use crate::decoder::{ObservationFrame, Recognizer, RecognizerConfig};
use crate::dialogue::{grammar_for_state, Script, StateName};
use crate::grammar::GrammarLibrary;
use crate::SILENCE;

/// One isolated answer: the grammar active when it is spoken and its text.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusUtterance {
    pub grammar: String,
    pub text: String,
}

/// `n` answers drawn uniformly over the speech-expecting states and then
/// over each state's phrases.
pub fn synthetic_corpus(script: &Script, n: usize, seed: u64) -> Vec<CorpusUtterance> {
    let states: Vec<StateName> = StateName::scripted().into_iter().filter(|s| s.expects_speech()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "corpus"));
    (0..n)
        .map(|_| {
            let state = states[rng.random_range(0..states.len())];
            let options: Vec<String> = match state {
                StateName::Adapt(k) => vec![script.adapt[k as usize - 1].phrase.clone()],
                StateName::QuizIntro => vec![script.quiz.phrase.clone()],
                StateName::Question(k) => script.questions[k as usize - 1].answers.clone(),
                StateName::Commands(k) => script.commands[k as usize - 1].options.clone(),
                _ => unreachable!("speech states only"),
            };
            CorpusUtterance {
                grammar: grammar_for_state(script, state).expect("speech state"),
                text: options[rng.random_range(0..options.len())].clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOutcome {
    pub correct: usize,
    pub total: usize,
    pub hypotheses: Vec<String>,
}

impl CorpusOutcome {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.correct as f64 / self.total as f64
    }
}

/// Decodes every utterance on its own: the grammar is set, the gate opens
/// at time 0, and the answer follows `lead_in` seconds of silence.
pub fn decode_corpus(
    corpus: &[CorpusUtterance],
    p: f64,
    seed: u64,
    library: &GrammarLibrary,
    config: &RecognizerConfig,
    frames_per_word: u32,
) -> Result<CorpusOutcome, SimError> {
    if !(0.0..1.0).contains(&p) {
        return Err(SimError::InvalidConfig(format!("confusion probability {p} outside [0, 1)")));
    }
    let model = ConfusionModel::from_library(library);
    let silence = spread_posteriors(SILENCE, p, model.confusables(SILENCE));
    let lead_in = (0.4 * config.frame_rate).round() as u64;
    let max_frames = (config.timeout * config.frame_rate).ceil() as u64 + 1;
    let mut outcome = CorpusOutcome {
        correct: 0,
        total: 0,
        hypotheses: Vec::new(),
    };
    for (n, utt) in corpus.iter().enumerate() {
        let cfg = RecognizerConfig {
            record_path: None,
            log_dir: None,
            ..config.clone()
        };
        let mut rec = Recognizer::new(cfg, library.clone())?;
        rec.set_grammar_id(&utt.grammar, 0.0)?;
        rec.set_gate(true, 0.0)?;
        rec.set_gate(false, 0.0)?;
        let clean: Vec<ObservationFrame> = utt
            .text
            .split_whitespace()
            .flat_map(|w| std::iter::repeat_n(w, frames_per_word as usize))
            .enumerate()
            .map(|(i, w)| ObservationFrame::one_hot(lead_in + i as u64, w))
            .collect();
        let speech = corrupt_observations(&clean, p, sub_seed(seed, "corpus-noise").wrapping_add(n as u64), &model);
        let mut hyp = None;
        for i in 0..max_frames {
            let frame = if i >= lead_in && i < lead_in + speech.len() as u64 {
                speech[(i - lead_in) as usize].clone()
            } else {
                ObservationFrame::new(i, silence.clone())
            };
            if let Some(r) = rec.process(crate::decoder::RecordEntry::Frame(frame))? {
                hyp = Some(r.segment.text);
                break;
            }
        }
        let hyp = hyp.unwrap_or_else(|| SILENCE.to_string());
        outcome.total += 1;
        outcome.correct += usize::from(hyp == utt.text);
        outcome.hypotheses.push(hyp);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_corpus_is_fully_recognized() {
        let script = Script::builtin();
        let corpus = synthetic_corpus(&script, 30, 1);
        assert_eq!(corpus, synthetic_corpus(&script, 30, 1));
        let out = decode_corpus(&corpus, 0.0, 1, &GrammarLibrary::builtin(), &RecognizerConfig::default(), 40).unwrap();
        assert_eq!(out.correct, 30, "{:?}", out.hypotheses);
    }
}

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::ObservationFrame;
use crate::grammar::GrammarLibrary;
use crate::SILENCE;

/// For each word, the words it competes with: those labelling arcs that
/// leave the same state in some grammar.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfusionModel {
    confusables: BTreeMap<String, Vec<String>>,
}

impl ConfusionModel {
    pub fn new(confusables: BTreeMap<String, Vec<String>>) -> Self {
        Self { confusables }
    }

    pub fn from_library(library: &GrammarLibrary) -> Self {
        let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for id in library.ids() {
            let fst = library.get(id).expect("listed grammar");
            for s in 0..fst.num_states() {
                let words: BTreeSet<String> = fst
                    .arcs_from(s)
                    .iter()
                    .filter(|a| a.olabel != 0)
                    .map(|a| fst.word(a.olabel).to_string())
                    .collect();
                for w in &words {
                    let entry = sets.entry(w.clone()).or_default();
                    entry.extend(words.iter().filter(|o| *o != w).cloned());
                }
            }
        }
        Self::new(sets.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect())
    }

    pub fn confusables(&self, symbol: &str) -> &[String] {
        self.confusables.get(symbol).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// `symbol` keeps 1 - p; p is split evenly over `confusables`. With no
/// confusables (or p = 0) the frame stays one-hot.
pub fn spread_posteriors(symbol: &str, p: f64, confusables: &[String]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if p == 0.0 || confusables.is_empty() {
        out.insert(symbol.to_string(), 1.0);
        return out;
    }
    let share = p / confusables.len() as f64;
    for c in confusables {
        out.insert(c.clone(), share);
    }
    out.insert(symbol.to_string(), 1.0 - p);
    out
}

/// Corrupts clean one-hot frames. Each run of identical symbols is one
/// spoken word; a non-silence word is replaced by one of its confusables
/// with probability `p`. Every frame then gets its probability mass spread
/// with [`spread_posteriors`].
///
/// The random draws do not depend on `p`, so with a fixed seed the words
/// substituted at a lower `p` are a subset of those at a higher one.
pub fn corrupt_observations(
    frames: &[ObservationFrame],
    p: f64,
    seed: u64,
    model: &ConfusionModel,
) -> Vec<ObservationFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(frames.len());
    let mut run_symbol: Option<String> = None;
    let mut emitted = String::new();
    for f in frames {
        let truth = f.argmax().unwrap_or(SILENCE).to_string();
        if run_symbol.as_deref() != Some(truth.as_str()) {
            let u: f64 = rng.random();
            let pick: u32 = rng.random();
            let conf = model.confusables(&truth);
            emitted = if truth != SILENCE && u < p && !conf.is_empty() {
                conf[pick as usize % conf.len()].clone()
            } else {
                truth.clone()
            };
            run_symbol = Some(truth);
        }
        let posteriors = spread_posteriors(&emitted, p, model.confusables(&emitted));
        out.push(ObservationFrame::new(f.index, posteriors));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> Vec<String> {
        ["a", "b", "c", "d", "e"].map(String::from).to_vec()
    }

    #[test]
    fn spread_arithmetic() {
        let p = spread_posteriors("x", 0.2, &five());
        assert!((p["x"] - 0.8).abs() < 1e-12);
        for c in five() {
            assert!((p[&c] - 0.04).abs() < 1e-12);
        }
        assert_eq!(spread_posteriors("x", 0.0, &five()).len(), 1);
    }

    #[test]
    fn identity_at_zero() {
        let model = ConfusionModel::from_library(&GrammarLibrary::builtin());
        let frames: Vec<ObservationFrame> = ["!SIL", "walking", "walking", "for", "!SIL"]
            .iter()
            .enumerate()
            .map(|(i, s)| ObservationFrame::one_hot(i as u64, s))
            .collect();
        assert_eq!(corrupt_observations(&frames, 0.0, 9, &model), frames);
        for f in corrupt_observations(&frames, 0.3, 9, &model) {
            f.validate().unwrap();
        }
    }

    #[test]
    fn confusables_follow_alternations() {
        let model = ConfusionModel::from_library(&GrammarLibrary::builtin());
        let c = model.confusables("left");
        assert!(c.contains(&"right".to_string()));
        assert!(!c.contains(&"left".to_string()));
        assert!(model.confusables("slowly").contains(&"quickly".to_string()));
    }

    #[test]
    fn substitutions_nest_in_p() {
        let model = ConfusionModel::new(BTreeMap::from([
            ("a".to_string(), vec!["b".to_string()]),
            ("b".to_string(), vec!["a".to_string()]),
        ]));
        let frames: Vec<ObservationFrame> = (0..400)
            .map(|i| ObservationFrame::one_hot(i, if (i / 4) % 2 == 0 { "a" } else { "b" }))
            .collect();
        let flipped = |p: f64| -> Vec<bool> {
            corrupt_observations(&frames, p, 5, &model)
                .iter()
                .zip(&frames)
                .map(|(c, f)| c.argmax() != f.argmax())
                .collect()
        };
        let (lo, hi) = (flipped(0.1), flipped(0.3));
        assert!(lo.iter().zip(&hi).all(|(l, h)| !l || *h));
        assert!(hi.iter().filter(|x| **x).count() > lo.iter().filter(|x| **x).count());
    }
}

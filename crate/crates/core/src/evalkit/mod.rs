//! Evaluation of recognizer output against gold annotations: fluency and
//! expectedness labels, the minor-disfluency rule, segment matching, the
//! segmentation-error taxonomy, accuracy and WER.
//!
//! Transcription markers: a word prefixed with `*` was mispronounced, a word
//! ending in `-` is a false start (an abandoned word fragment).

mod report;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::Script;
use crate::{UtteranceSegment, SILENCE};

pub use report::{
    build_report, load_logs, pair_sessions, read_gold_tsv, write_gold_tsv, AccuracyLine, Counts, EvalReport,
    GoldRow, LoggedSession, SegmentEval, SessionData, TaxonomyCounts, DEFAULT_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("bad transcription marker in {0:?}")]
    MarkerSyntax(String),
    #[error("accuracy of an empty set")]
    ZeroTotal,
    #[error("correct count {correct} exceeds total {total}")]
    InvalidCounts { correct: usize, total: usize },
    #[error("word error rate needs a nonempty reference")]
    EmptyReference,
    #[error("segments do not overlap")]
    NoOverlap,
    #[error("{path}:{line}: {message}")]
    LogParse { path: String, line: usize, message: String },
    #[error("gold line {line}: {message}")]
    GoldParse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fluency {
    Fluent,
    Disfluent,
}

/// A gold segment with its transcription markers parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscribedUtterance {
    pub segment: UtteranceSegment,
    /// Word positions marked `*word`.
    pub mispronounced: Vec<usize>,
    /// Word positions marked `word-`.
    pub false_starts: Vec<usize>,
}

impl TranscribedUtterance {
    pub fn parse(segment: UtteranceSegment) -> Result<Self, EvalError> {
        let mut mispronounced = Vec::new();
        let mut false_starts = Vec::new();
        for (i, w) in segment.text.split_whitespace().enumerate() {
            let (star, rest) = match w.strip_prefix('*') {
                Some(r) => (true, r),
                None => (false, w),
            };
            let (dash, core) = match rest.strip_suffix('-') {
                Some(r) => (true, r),
                None => (false, rest),
            };
            if core.is_empty() || core.contains(['*', '-']) {
                return Err(EvalError::MarkerSyntax(segment.text.clone()));
            }
            if star {
                mispronounced.push(i);
            }
            if dash {
                false_starts.push(i);
            }
        }
        Ok(Self {
            segment,
            mispronounced,
            false_starts,
        })
    }

    pub fn from_text(text: &str) -> Result<Self, EvalError> {
        Self::parse(UtteranceSegment::gold(0.0, 0.0, text))
    }

    pub fn has_markers(&self) -> bool {
        !self.mispronounced.is_empty() || !self.false_starts.is_empty()
    }

    /// Words with markers removed; false-start fragments are dropped.
    pub fn clean_words(&self) -> Vec<String> {
        self.segment
            .text
            .split_whitespace()
            .enumerate()
            .filter(|(i, _)| !self.false_starts.contains(i))
            .map(|(_, w)| w.trim_start_matches('*').to_lowercase())
            .collect()
    }
}

pub fn classify_fluency(u: &TranscribedUtterance) -> Fluency {
    if u.has_markers() {
        Fluency::Disfluent
    } else {
        Fluency::Fluent
    }
}

/// The set of phrases the interaction expects, plus the silence token.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    phrases: BTreeSet<String>,
    multiple_choice: Vec<String>,
}

impl Vocabulary {
    pub fn new(phrases: impl IntoIterator<Item = String>, multiple_choice: Vec<String>) -> Self {
        let mut phrases: BTreeSet<String> = phrases.into_iter().collect();
        phrases.extend(multiple_choice.iter().cloned());
        Self {
            phrases,
            multiple_choice,
        }
    }

    pub fn from_script(script: &Script) -> Self {
        Self::new(script.expected_phrases(), script.multiple_choice_phrases())
    }

    pub fn phrases(&self) -> &BTreeSet<String> {
        &self.phrases
    }

    /// Accepted answers of the question and command stages.
    pub fn multiple_choice(&self) -> &[String] {
        &self.multiple_choice
    }

    pub fn is_multiple_choice(&self, text: &str) -> bool {
        self.multiple_choice.iter().any(|p| p == text)
    }
}

/// Exact phrase match or silence.
pub fn classify_expected(text: &str, vocabulary: &Vocabulary) -> bool {
    text == SILENCE || vocabulary.phrases.contains(text)
}

/// The accepted answer more than 75% of whose distinct words occur in
/// `text`; best coverage wins, then the earliest answer.
pub fn minor_disfluency_match<'a>(text: &str, answers: &'a [String]) -> Option<&'a str> {
    let said: BTreeSet<String> = match TranscribedUtterance::from_text(text) {
        Ok(u) => u.clean_words().into_iter().collect(),
        Err(_) => text.split_whitespace().map(str::to_lowercase).collect(),
    };
    let mut best: Option<(&'a str, usize, usize)> = None;
    for a in answers {
        let words: BTreeSet<&str> = a.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let covered = words.iter().filter(|w| said.contains(**w)).count();
        let total = words.len();
        // covered / total > 3/4, compared exactly
        if 4 * covered <= 3 * total {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, c, t)) => covered * t > c * total,
        };
        if better {
            best = Some((a.as_str(), covered, total));
        }
    }
    best.map(|(a, _, _)| a)
}

/// Two-stage matching: an overlapping auto segment with the same text,
/// else the overlapping one closest in |d start| + |d end|. Each auto
/// segment is used at most once; gold segments are taken in time order.
pub fn match_segments(gold: &[UtteranceSegment], auto: &[UtteranceSegment]) -> Vec<Option<usize>> {
    let mut used = vec![false; auto.len()];
    let mut order: Vec<usize> = (0..gold.len()).collect();
    order.sort_by(|&a, &b| gold[a].start.total_cmp(&gold[b].start).then(a.cmp(&b)));
    let mut out = vec![None; gold.len()];
    for gi in order {
        let g = &gold[gi];
        let candidates: Vec<usize> = (0..auto.len()).filter(|&i| !used[i] && g.overlaps(&auto[i])).collect();
        let same_text = candidates.iter().copied().find(|&i| auto[i].text == g.text);
        let chosen = same_text.or_else(|| {
            candidates.iter().copied().min_by(|&a, &b| {
                let d = |i: usize| (auto[i].start - g.start).abs() + (auto[i].end - g.end).abs();
                d(a).total_cmp(&d(b)).then(a.cmp(&b))
            })
        });
        if let Some(i) = chosen {
            used[i] = true;
            out[gi] = Some(i);
        }
    }
    out
}

/// Which boundaries of an automatic segment are off, relative to gold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentationErrorLabel {
    pub early_start: bool,
    pub late_start: bool,
    pub early_end: bool,
    pub late_end: bool,
}

impl SegmentationErrorLabel {
    pub const ALIGNED: Self = Self {
        early_start: false,
        late_start: false,
        early_end: false,
        late_end: false,
    };

    pub fn is_aligned(&self) -> bool {
        *self == Self::ALIGNED
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.early_start {
            v.push("early_start");
        }
        if self.late_start {
            v.push("late_start");
        }
        if self.early_end {
            v.push("early_end");
        }
        if self.late_end {
            v.push("late_end");
        }
        v
    }
}

impl fmt::Display for SegmentationErrorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_aligned() {
            write!(f, "aligned")
        } else {
            write!(f, "{}", self.names().join("+"))
        }
    }
}

impl Serialize for SegmentationErrorLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.names().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SegmentationErrorLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        let mut l = Self::ALIGNED;
        for n in names {
            match n.as_str() {
                "early_start" => l.early_start = true,
                "late_start" => l.late_start = true,
                "early_end" => l.early_end = true,
                "late_end" => l.late_end = true,
                other => return Err(serde::de::Error::custom(format!("unknown label {other}"))),
            }
        }
        Ok(l)
    }
}

/// Floating-point slack so a boundary exactly `tolerance` away counts as aligned.
const BOUNDARY_EPS: f64 = 1e-9;

pub fn classify_segment_errors(
    gold: &UtteranceSegment,
    auto: &UtteranceSegment,
    tolerance: f64,
) -> Result<SegmentationErrorLabel, EvalError> {
    if !gold.overlaps(auto) {
        return Err(EvalError::NoOverlap);
    }
    let tol = tolerance + BOUNDARY_EPS;
    Ok(SegmentationErrorLabel {
        early_start: auto.start < gold.start - tol,
        late_start: auto.start > gold.start + tol,
        early_end: auto.end < gold.end - tol,
        late_end: auto.end > gold.end + tol,
    })
}

/// Percentage rounded to one decimal.
pub fn accuracy(correct: usize, total: usize) -> Result<f64, EvalError> {
    if total == 0 {
        return Err(EvalError::ZeroTotal);
    }
    if correct > total {
        return Err(EvalError::InvalidCounts { correct, total });
    }
    Ok((1000.0 * correct as f64 / total as f64).round() / 10.0)
}

/// Minimum number of substitutions, deletions and insertions.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=hypothesis.len()).collect();
    let mut cur = vec![0; hypothesis.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let sub = prev[j] + usize::from(r != h);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[hypothesis.len()]
}

/// Word error rate in percent.
pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    Ok(100.0 * edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn fluency_examples() {
        let f = |t: &str| classify_fluency(&TranscribedUtterance::from_text(t).unwrap());
        assert_eq!(f("moved quickly for ten seconds"), Fluency::Fluent);
        assert_eq!(f("moved qui- quickly for ten seconds"), Fluency::Disfluent);
        assert_eq!(f("*zeno start the quiz"), Fluency::Disfluent);
        assert_eq!(f(SILENCE), Fluency::Fluent);
        for bad in ["a * b", "a - b", "mo*ved", "qu-ick", "*-"] {
            assert!(TranscribedUtterance::from_text(bad).is_err(), "{bad}");
        }
        let u = TranscribedUtterance::from_text("moved qui- *quickly").unwrap();
        assert_eq!(u.clean_words(), vec!["moved", "quickly"]);
    }

    #[test]
    fn expected_examples() {
        let v = Vocabulary::from_script(&Script::builtin());
        assert!(classify_expected("hello zeeno i am ready to start", &v));
        assert!(classify_expected(SILENCE, &v));
        assert!(!classify_expected("i like robots", &v));
        assert_eq!(v.phrases().len(), 20);
        assert_eq!(v.multiple_choice().len(), 16);
    }

    #[test]
    fn minor_disfluency_examples() {
        let answers: Vec<String> = ["stood still for ten seconds", "moved quickly for twenty seconds"]
            .map(String::from)
            .to_vec();
        assert_eq!(
            minor_disfluency_match("moved quickly for twenty", &answers),
            Some("moved quickly for twenty seconds")
        );
        assert_eq!(minor_disfluency_match("moved quickly for", &answers), None);
        let four: Vec<String> = vec!["testing a b c".into()];
        assert_eq!(minor_disfluency_match("testing a b", &four), None);
        assert_eq!(minor_disfluency_match("testing a b- b c", &four), Some("testing a b c"));
    }

    #[test]
    fn matching_examples() {
        let g = |s, e, t| UtteranceSegment::gold(s, e, t);
        let a = |s, e, t| UtteranceSegment::auto(s, e, t);
        let m = match_segments(
            &[g(1.0, 2.0, "testing a b c")],
            &[a(0.9, 2.1, "testing a b c"), a(1.1, 1.9, "hello zeeno")],
        );
        assert_eq!(m, vec![Some(0)]);
        let m = match_segments(&[g(1.0, 2.0, "x")], &[a(0.8, 1.5, "y"), a(0.95, 2.02, "z")]);
        assert_eq!(m, vec![Some(1)]);
        assert_eq!(match_segments(&[g(1.0, 2.0, "x")], &[a(3.0, 4.0, "x")]), vec![None]);
        // One auto segment cannot serve two gold segments.
        let m = match_segments(&[g(1.0, 2.0, "x"), g(1.5, 2.5, "x")], &[a(1.0, 2.5, "x")]);
        assert_eq!(m, vec![Some(0), None]);
    }

    #[test]
    fn taxonomy_examples() {
        let g = UtteranceSegment::gold(2.0, 4.5, "x");
        let l = classify_segment_errors(&g, &UtteranceSegment::auto(1.6, 4.5, "x"), 0.05).unwrap();
        assert_eq!(l.names(), vec!["early_start"]);
        let l = classify_segment_errors(&g, &UtteranceSegment::auto(2.0, 4.3, "x"), 0.05).unwrap();
        assert_eq!(l.names(), vec!["early_end"]);
        let l = classify_segment_errors(&g, &UtteranceSegment::auto(2.0, 4.5, "x"), 0.05).unwrap();
        assert!(l.is_aligned());
        assert_eq!(l.to_string(), "aligned");
        let l = classify_segment_errors(&g, &UtteranceSegment::auto(2.05, 4.56, "x"), 0.05).unwrap();
        assert_eq!(l.to_string(), "late_end");
        assert!(classify_segment_errors(&g, &UtteranceSegment::auto(5.0, 6.0, "x"), 0.05).is_err());
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<SegmentationErrorLabel>(&json).unwrap(), l);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(2582, 2770).unwrap(), 93.2);
        assert_eq!(accuracy(1616, 1771).unwrap(), 91.2);
        assert_eq!(accuracy(136, 184).unwrap(), 73.9);
        assert_eq!(accuracy(1752, 1955).unwrap(), 89.6);
        assert_eq!(accuracy(0, 10).unwrap(), 0.0);
        assert!(matches!(accuracy(1, 0), Err(EvalError::ZeroTotal)));
        assert!(accuracy(3, 2).is_err());
    }

    #[test]
    fn wer_examples() {
        let r = words("testing one two three");
        assert_eq!(wer(&r, &r).unwrap(), 0.0);
        assert_eq!(wer(&r, &words("testing one three")).unwrap(), 25.0);
        assert_eq!(wer(&r, &[]).unwrap(), 100.0);
        assert!(wer::<&str>(&[], &r).is_err());
    }
}

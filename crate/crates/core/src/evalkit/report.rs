use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    accuracy, classify_expected, classify_fluency, classify_segment_errors, edit_distance, match_segments,
    minor_disfluency_match, EvalError, Fluency, SegmentationErrorLabel, TranscribedUtterance, Vocabulary,
};
use crate::decoder::{read_log, DecoderError, LogEvent};
use crate::UtteranceSegment;

pub const DEFAULT_TOLERANCE: f64 = 0.05;

/// One line of a gold TSV: `start<TAB>end<TAB>speaker<TAB>text`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRow {
    pub start: f64,
    pub end: f64,
    pub speaker: String,
    pub text: String,
}

pub fn write_gold_tsv(path: &Path, rows: &[GoldRow]) -> Result<(), EvalError> {
    let mut out = String::new();
    for r in rows {
        writeln!(out, "{:.3}\t{:.3}\t{}\t{}", r.start, r.end, r.speaker, r.text).expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a gold TSV. Blank lines and `#` comments are skipped.
pub fn read_gold_tsv(path: &Path) -> Result<Vec<GoldRow>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| EvalError::GoldParse { line: line_no, message };
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        if cols.len() != 4 {
            return Err(bad(format!("expected 4 tab-separated columns, got {}", cols.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("bad time {s:?}: {e}")));
        let row = GoldRow {
            start: num(cols[0])?,
            end: num(cols[1])?,
            speaker: cols[2].trim().to_string(),
            text: cols[3].trim().to_string(),
        };
        if !(row.start <= row.end) {
            return Err(bad("start after end".into()));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Results of one recognizer log.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedSession {
    pub label: String,
    pub auto: Vec<UtteranceSegment>,
}

/// Reads every `*.jsonl` log in `dir`, in file-name order.
pub fn load_logs(dir: &Path) -> Result<Vec<LoggedSession>, EvalError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let events = read_log(&path).map_err(|e| match e {
            DecoderError::MalformedRecord { line, message } => EvalError::LogParse {
                path: path.display().to_string(),
                line,
                message,
            },
            DecoderError::Io(e) => EvalError::Io(e),
            other => EvalError::LogParse {
                path: path.display().to_string(),
                line: 0,
                message: other.to_string(),
            },
        })?;
        let mut session = LoggedSession {
            label: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
            auto: Vec::new(),
        };
        for ev in events {
            match ev {
                LogEvent::Session { label, .. } => session.label = label,
                LogEvent::Result { start, end, text, .. } => session.auto.push(UtteranceSegment::auto(start, end, text)),
                _ => {}
            }
        }
        out.push(session);
    }
    Ok(out)
}

/// Gold and automatic segments of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionData {
    pub label: String,
    pub gold: Vec<UtteranceSegment>,
    pub auto: Vec<UtteranceSegment>,
}

/// Pairs a gold file with the logs whose session label equals its stem.
/// When no label matches, every log is used.
pub fn pair_sessions(label: &str, gold: &[GoldRow], logs: &[LoggedSession]) -> SessionData {
    let gold: Vec<UtteranceSegment> = gold
        .iter()
        .filter(|r| r.speaker != "robot")
        .map(|r| UtteranceSegment::gold(r.start, r.end, r.text.clone()))
        .collect();
    let matching: Vec<&LoggedSession> = logs.iter().filter(|l| l.label == label).collect();
    let chosen: Vec<&LoggedSession> = if matching.is_empty() {
        logs.iter().collect()
    } else {
        matching
    };
    let mut auto: Vec<UtteranceSegment> = chosen.iter().flat_map(|l| l.auto.iter().cloned()).collect();
    auto.sort_by(|a, b| a.start.total_cmp(&b.start));
    SessionData {
        label: label.to_string(),
        gold,
        auto,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub fluent: usize,
    pub disfluent: usize,
    /// Fluent utterances that exactly match an expected phrase or silence.
    pub expected: usize,
    /// Fluent utterances outside the vocabulary.
    pub unexpected: usize,
    /// Fluent expected utterances with an overlapping automatic segment.
    pub expected_matched: usize,
    /// Disfluent utterances covering more than 75% of a multiple-choice answer.
    pub minor_disfluent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyLine {
    pub correct: usize,
    pub total: usize,
    pub percent: Option<f64>,
}

impl AccuracyLine {
    fn new(correct: usize, total: usize) -> Self {
        Self {
            correct,
            total,
            percent: accuracy(correct, total).ok(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyCounts {
    pub evaluated: usize,
    pub aligned: usize,
    pub early_start: usize,
    pub late_start: usize,
    pub early_end: usize,
    pub late_end: usize,
    pub unmatched: usize,
}

impl TaxonomyCounts {
    fn add(&mut self, label: Option<SegmentationErrorLabel>) {
        let Some(l) = label else {
            self.unmatched += 1;
            return;
        };
        self.evaluated += 1;
        self.aligned += usize::from(l.is_aligned());
        self.early_start += usize::from(l.early_start);
        self.late_start += usize::from(l.late_start);
        self.early_end += usize::from(l.early_end);
        self.late_end += usize::from(l.late_end);
    }
}

/// Per-gold-segment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEval {
    pub session: String,
    pub gold: UtteranceSegment,
    pub auto: Option<UtteranceSegment>,
    pub fluency: Fluency,
    pub expected: bool,
    pub multiple_choice: bool,
    /// For disfluent utterances, the answer matched under the 75% rule.
    pub minor_match: Option<String>,
    pub correct: bool,
    pub label: Option<SegmentationErrorLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tolerance: f64,
    pub counts: Counts,
    /// All fluent expected utterances.
    pub overall: AccuracyLine,
    /// Fluent expected answers of the question and command stages.
    pub multiple_choice: AccuracyLine,
    /// Disfluent answers matched under the 75% rule.
    pub minor_disfluent: AccuracyLine,
    /// Multiple-choice and minor-disfluent together.
    pub combined: AccuracyLine,
    /// Corpus word error rate over fluent expected utterances, in percent.
    pub wer: Option<f64>,
    /// Boundary errors of fluent expected utterances.
    pub taxonomy: TaxonomyCounts,
    pub per_session: BTreeMap<String, AccuracyLine>,
    pub segments: Vec<SegmentEval>,
}

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

pub fn build_report(sessions: &[SessionData], vocabulary: &Vocabulary, tolerance: f64) -> Result<EvalReport, EvalError> {
    let mut counts = Counts::default();
    let mut taxonomy = TaxonomyCounts::default();
    let mut segments = Vec::new();
    let (mut overall_c, mut overall_t) = (0, 0);
    let (mut mc_c, mut mc_t) = (0, 0);
    let (mut minor_c, mut minor_t) = (0, 0);
    let (mut edits, mut ref_words) = (0usize, 0usize);
    let mut per_session = BTreeMap::new();

    for s in sessions {
        let matches = match_segments(&s.gold, &s.auto);
        let (mut sc, mut st) = (0, 0);
        for (g, m) in s.gold.iter().zip(matches) {
            let utt = TranscribedUtterance::parse(g.clone())?;
            let fluency = classify_fluency(&utt);
            let auto = m.map(|i| s.auto[i].clone());
            let label = match &auto {
                Some(a) => Some(classify_segment_errors(g, a, tolerance)?),
                None => None,
            };
            let hyp = auto.as_ref().map(|a| a.text.as_str());
            counts.total += 1;
            let mut eval = SegmentEval {
                session: s.label.clone(),
                gold: g.clone(),
                auto: auto.clone(),
                fluency,
                expected: false,
                multiple_choice: false,
                minor_match: None,
                correct: false,
                label,
            };
            match fluency {
                Fluency::Fluent => {
                    counts.fluent += 1;
                    eval.expected = classify_expected(&g.text, vocabulary);
                    if eval.expected {
                        counts.expected += 1;
                        counts.expected_matched += usize::from(auto.is_some());
                        eval.correct = hyp == Some(g.text.as_str());
                        eval.multiple_choice = vocabulary.is_multiple_choice(&g.text);
                        overall_t += 1;
                        overall_c += usize::from(eval.correct);
                        st += 1;
                        sc += usize::from(eval.correct);
                        if eval.multiple_choice {
                            mc_t += 1;
                            mc_c += usize::from(eval.correct);
                        }
                        taxonomy.add(label);
                        edits += edit_distance(&words(&g.text), &words(hyp.unwrap_or("")));
                        ref_words += words(&g.text).len();
                    } else {
                        counts.unexpected += 1;
                    }
                }
                Fluency::Disfluent => {
                    counts.disfluent += 1;
                    if let Some(ans) = minor_disfluency_match(&g.text, vocabulary.multiple_choice()) {
                        counts.minor_disfluent += 1;
                        eval.correct = hyp == Some(ans);
                        eval.minor_match = Some(ans.to_string());
                        minor_t += 1;
                        minor_c += usize::from(eval.correct);
                    }
                }
            }
            segments.push(eval);
        }
        let line = AccuracyLine::new(sc, st);
        per_session
            .entry(s.label.clone())
            .and_modify(|l: &mut AccuracyLine| *l = AccuracyLine::new(l.correct + sc, l.total + st))
            .or_insert(line);
    }

    Ok(EvalReport {
        tolerance,
        counts,
        overall: AccuracyLine::new(overall_c, overall_t),
        multiple_choice: AccuracyLine::new(mc_c, mc_t),
        minor_disfluent: AccuracyLine::new(minor_c, minor_t),
        combined: AccuracyLine::new(mc_c + minor_c, mc_t + minor_t),
        wer: (ref_words > 0).then(|| 100.0 * edits as f64 / ref_words as f64),
        taxonomy,
        per_session,
        segments,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let pct = |l: &AccuracyLine| match l.percent {
            Some(p) => format!("{p:5.1}%"),
            None => "     -".to_string(),
        };
        let c = &self.counts;
        let t = &self.taxonomy;
        let mut s = String::new();
        let mut line = |text: String| {
            s.push_str(&text);
            s.push('\n');
        };
        line(format!("utterances        {:>6}", c.total));
        line(format!("  fluent          {:>6}", c.fluent));
        line(format!("    expected      {:>6}", c.expected));
        line(format!("    unexpected    {:>6}", c.unexpected));
        line(format!("  disfluent       {:>6}", c.disfluent));
        line(format!("    minor         {:>6}", c.minor_disfluent));
        line(String::new());
        line(format!("{:<18}{:>8}{:>8}{:>9}", "accuracy", "correct", "total", "percent"));
        for (name, l) in [
            ("overall", &self.overall),
            ("multiple choice", &self.multiple_choice),
            ("minor disfluent", &self.minor_disfluent),
            ("combined", &self.combined),
        ] {
            line(format!("{name:<18}{:>8}{:>8}{:>9}", l.correct, l.total, pct(l)));
        }
        if let Some(w) = self.wer {
            line(format!("{:<18}{:>25}", "wer", format!("{w:.1}%")));
        }
        line(String::new());
        line(format!("segmentation (tolerance {:.3} s)", self.tolerance));
        for (name, n) in [
            ("aligned", t.aligned),
            ("early start", t.early_start),
            ("late start", t.late_start),
            ("early end", t.early_end),
            ("late end", t.late_end),
            ("unmatched", t.unmatched),
        ] {
            line(format!("  {name:<16}{n:>6}"));
        }
        if self.per_session.len() > 1 {
            line(String::new());
            for (label, l) in &self.per_session {
                line(format!("  {label:<24}{:>6}/{:<6}{}", l.correct, l.total, pct(l)));
            }
        }
        s
    }
}

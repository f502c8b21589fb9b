use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentSource {
    Gold,
    Auto,
}

/// A timed span of speech with its transcription.
///
/// Shared by decoder output, gold annotations and the evaluation kit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceSegment {
    pub start: f64,
    pub end: f64,
    pub text: String,
    pub source: SegmentSource,
}

impl UtteranceSegment {
    pub fn new(start: f64, end: f64, text: impl Into<String>, source: SegmentSource) -> Self {
        Self {
            start,
            end,
            text: text.into(),
            source,
        }
    }

    pub fn gold(start: f64, end: f64, text: impl Into<String>) -> Self {
        Self::new(start, end, text, SegmentSource::Gold)
    }

    pub fn auto(start: f64, end: f64, text: impl Into<String>) -> Self {
        Self::new(start, end, text, SegmentSource::Auto)
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Open-interval overlap: segments that merely touch do not overlap.
    pub fn overlaps(&self, other: &UtteranceSegment) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn is_valid(&self) -> bool {
        self.start.is_finite()
            && self.end.is_finite()
            && 0.0 <= self.start
            && self.start <= self.end
            && !self.text.trim().is_empty()
    }
}

use std::collections::VecDeque;

use super::{DecoderError, ObservationFrame};

/// Fixed-capacity history of the most recent frames, addressed by absolute
/// frame index.
#[derive(Debug, Clone)]
pub struct AudioRing {
    capacity: usize,
    frames: VecDeque<ObservationFrame>,
    /// Index of the next frame to be written.
    cursor: u64,
    started: bool,
}

impl AudioRing {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring capacity must be positive");
        Self {
            capacity,
            frames: VecDeque::with_capacity(capacity),
            cursor: 0,
            started: false,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// Oldest readable index.
    pub fn floor(&self) -> u64 {
        self.cursor - self.frames.len() as u64
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Appends a frame. The first frame may start at any index; after that
    /// indices must be contiguous.
    pub fn push(&mut self, frame: ObservationFrame) -> Result<(), DecoderError> {
        if self.started {
            if frame.index < self.cursor {
                return Err(DecoderError::OutOfOrderFrame {
                    expected: self.cursor,
                    got: frame.index,
                });
            }
            if frame.index > self.cursor {
                return Err(DecoderError::FrameGap {
                    expected: self.cursor,
                    got: frame.index,
                });
            }
        } else {
            self.started = true;
        }
        self.cursor = frame.index + 1;
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn get(&self, index: u64) -> Result<&ObservationFrame, DecoderError> {
        let floor = self.floor();
        if index < floor || index >= self.cursor {
            return Err(DecoderError::Unreadable {
                index,
                floor,
                cursor: self.cursor,
            });
        }
        Ok(&self.frames[(index - floor) as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(i: u64) -> ObservationFrame {
        ObservationFrame::one_hot(i, "!SIL")
    }

    #[test]
    fn cursor_advances() {
        let mut ring = AudioRing::new(1000);
        for i in 0..100 {
            ring.push(frame(i)).unwrap();
        }
        assert_eq!(ring.cursor(), 100);
        assert_eq!(ring.floor(), 0);
        assert_eq!(ring.get(99).unwrap().index, 99);
        assert!(ring.get(100).is_err());
    }

    #[test]
    fn rejects_duplicates_and_gaps() {
        let mut ring = AudioRing::new(4);
        ring.push(frame(5)).unwrap();
        assert!(matches!(
            ring.push(frame(5)),
            Err(DecoderError::OutOfOrderFrame { expected: 6, got: 5 })
        ));
        assert!(matches!(ring.push(frame(8)), Err(DecoderError::FrameGap { .. })));
    }

    #[test]
    fn eviction() {
        let mut ring = AudioRing::new(10);
        for i in 0..25 {
            ring.push(frame(i)).unwrap();
        }
        assert_eq!(ring.floor(), 15);
        assert!(matches!(ring.get(14), Err(DecoderError::Unreadable { .. })));
        for i in 15..25 {
            assert_eq!(ring.get(i).unwrap().index, i);
        }
    }
}

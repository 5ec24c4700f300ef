//! Segmentation of online text streams into detection symbols.
//!
//! Remote models deliver opaque text deltas; the detector needs discrete
//! units. Default is whitespace words, since visible repetition in chat
//! output happens at word granularity. Characters and raw chunks are also
//! supported.

use crate::symbol::{Interner, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentMode {
    /// Each pushed delta is one unit, as-is.
    Chunk,
    /// Maximal non-whitespace runs; whitespace is a separator and dropped.
    Word,
    /// Every character is a unit, whitespace included.
    Char,
}

impl std::str::FromStr for SegmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chunk" => Ok(SegmentMode::Chunk),
            "word" => Ok(SegmentMode::Word),
            "char" => Ok(SegmentMode::Char),
            other => Err(format!("unknown segment mode `{other}` (chunk|word|char)")),
        }
    }
}

/// Incremental segmenter that interns each unit into a [`Symbol`].
#[derive(Debug)]
pub struct Segmenter {
    mode: SegmentMode,
    interner: Interner,
    pending: String,
}

impl Segmenter {
    pub fn new(mode: SegmentMode) -> Self {
        Self {
            mode,
            interner: Interner::new(),
            pending: String::new(),
        }
    }

    pub fn mode(&self) -> SegmentMode {
        self.mode
    }

    /// Feed a delta; returns the units it completed.
    pub fn push(&mut self, delta: &str) -> Vec<Symbol> {
        match self.mode {
            SegmentMode::Chunk => {
                if delta.is_empty() {
                    Vec::new()
                } else {
                    vec![self.interner.intern(delta)]
                }
            }
            SegmentMode::Char => delta
                .chars()
                .map(|ch| self.interner.intern(&ch.to_string()))
                .collect(),
            SegmentMode::Word => {
                let mut out = Vec::new();
                for ch in delta.chars() {
                    if ch.is_whitespace() {
                        if !self.pending.is_empty() {
                            let word = std::mem::take(&mut self.pending);
                            out.push(self.interner.intern(&word));
                        }
                    } else {
                        self.pending.push(ch);
                    }
                }
                out
            }
        }
    }

    /// Emit any word still buffered at end of stream.
    pub fn flush(&mut self) -> Vec<Symbol> {
        if self.mode == SegmentMode::Word && !self.pending.is_empty() {
            let word = std::mem::take(&mut self.pending);
            vec![self.interner.intern(&word)]
        } else {
            Vec::new()
        }
    }
}

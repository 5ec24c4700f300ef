//! Symbols, streams, and vocabularies.
//!
//! A [`Symbol`] is one generation unit: a token id when driving the
//! simulator, or an interned text chunk when watching the output of a remote
//! model whose tokenizer is unknown. Equality and ordering go by id; online
//! adapters assign ids by first-seen interning so the two views coincide.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// One generation unit.
#[derive(Clone, Debug)]
pub struct Symbol {
    id: u32,
    text: Option<String>,
}

impl Symbol {
    pub fn new(id: u32) -> Self {
        Self { id, text: None }
    }

    pub fn with_text(id: u32, text: impl Into<String>) -> Self {
        Self {
            id,
            text: Some(text.into()),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn text(&self) -> Option<&str> {
        self.text.as_deref()
    }
}

// Ids are authoritative: interning guarantees a text maps to exactly one id,
// so comparing ids is the same as comparing texts byte-for-byte.
impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl std::hash::Hash for Symbol {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.text {
            Some(t) => write!(f, "{t}"),
            None => write!(f, "{}", self.id),
        }
    }
}

/// An ordered sequence of generation units.
pub type SymbolStream = Vec<Symbol>;

/// Build an id-only stream, handy in tests and the simulator.
pub fn stream_from_ids<I: IntoIterator<Item = u32>>(ids: I) -> SymbolStream {
    ids.into_iter().map(Symbol::new).collect()
}

/// First-seen interner mapping text units to stable ids.
#[derive(Debug, Default)]
pub struct Interner {
    by_text: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, text: &str) -> Symbol {
        let next = self.by_text.len() as u32;
        let id = *self.by_text.entry(text.to_string()).or_insert(next);
        Symbol::with_text(id, text)
    }

    pub fn len(&self) -> usize {
        self.by_text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_text.is_empty()
    }
}

/// An ordered token set with a designated end-of-stream symbol.
///
/// Symbol ids equal their positions, so logits and distributions index the
/// vocabulary directly.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    symbols: Vec<Symbol>,
    eos: usize,
}

impl Vocab {
    pub fn new(symbols: Vec<Symbol>, eos_index: usize) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::VocabTooSmall(symbols.len()));
        }
        for (position, sym) in symbols.iter().enumerate() {
            if sym.id() as usize != position {
                return Err(Error::VocabIdMismatch {
                    position,
                    id: sym.id(),
                });
            }
        }
        if eos_index >= symbols.len() {
            return Err(Error::EosOutOfRange {
                index: eos_index,
                size: symbols.len(),
            });
        }
        Ok(Self {
            symbols,
            eos: eos_index,
        })
    }

    /// A vocabulary of `n` numeric symbols with ids `0..n`.
    pub fn numeric(n: usize, eos_index: usize) -> Result<Self> {
        Self::new((0..n).map(|i| Symbol::new(i as u32)).collect(), eos_index)
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn eos_index(&self) -> usize {
        self.eos
    }

    pub fn eos(&self) -> &Symbol {
        &self.symbols[self.eos]
    }

    pub fn symbol(&self, index: usize) -> Result<&Symbol> {
        self.symbols.get(index).ok_or(Error::SymbolOutOfRange {
            index,
            size: self.symbols.len(),
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Position of the symbol whose text matches, if any.
    pub fn index_of_text(&self, text: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.text() == Some(text))
    }
}

//! Alphabets, symbol strings and sample ingestion.
//!
//! Symbols are stored as small integer indices; labels only appear when reading or
//! writing text. Strings follow the past-to-present convention: in the word `010`
//! the last symbol is the most recent one, so a context is matched against the end of
//! the history and children are formed by prepending a symbol.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Index of a symbol within its alphabet.
pub type Symbol = u8;

/// Largest supported alphabet.
pub const MAX_ALPHABET: usize = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("alphabet specification is empty")]
    EmptySpec,
    #[error("alphabet label {0} is empty")]
    EmptyLabel(usize),
    #[error("duplicate alphabet label {0:?}")]
    DuplicateLabel(String),
    #[error("alphabet needs at least 2 symbols, got {0}")]
    TooFewSymbols(usize),
    #[error("alphabet has {0} symbols, at most {MAX_ALPHABET} are supported")]
    TooManySymbols(usize),
    #[error("unknown symbol {label:?} at position {position}")]
    UnknownSymbol { label: String, position: usize },
    #[error("input contains no symbols")]
    EmptyInput,
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("unknown ingest mode {0:?} (expected chars or tokens)")]
    UnknownMode(String),
}

/// Finite ordered set of symbol labels. Cheap to clone.
#[derive(Clone)]
pub struct Alphabet {
    inner: Arc<AlphabetInner>,
}

struct AlphabetInner {
    labels: Vec<String>,
    index: HashMap<String, Symbol>,
    single_char: bool,
}

impl Alphabet {
    pub fn new<I, L>(labels: I) -> Result<Self, SequenceError>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(SequenceError::TooFewSymbols(labels.len()));
        }
        if labels.len() > MAX_ALPHABET {
            return Err(SequenceError::TooManySymbols(labels.len()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(SequenceError::EmptyLabel(i));
            }
            if index.insert(label.clone(), i as Symbol).is_some() {
                return Err(SequenceError::DuplicateLabel(label.clone()));
            }
        }
        let single_char = labels.iter().all(|l| l.chars().count() == 1);
        Ok(Alphabet {
            inner: Arc::new(AlphabetInner {
                labels,
                index,
                single_char,
            }),
        })
    }

    /// Parses a comma-separated label list such as `0,1,2,3,4`.
    pub fn parse(spec: &str) -> Result<Self, SequenceError> {
        if spec.trim().is_empty() {
            return Err(SequenceError::EmptySpec);
        }
        Self::new(spec.split(',').map(str::trim))
    }

    /// Alphabet `{0, 1, ..., k-1}` with decimal labels.
    pub fn numeric(k: usize) -> Result<Self, SequenceError> {
        Self::new((0..k).map(|i| i.to_string()))
    }

    pub fn size(&self) -> usize {
        self.inner.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.inner.labels
    }

    pub fn label(&self, symbol: Symbol) -> &str {
        &self.inner.labels[symbol as usize]
    }

    pub fn symbol(&self, label: &str) -> Option<Symbol> {
        self.inner.index.get(label).copied()
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        (symbol as usize) < self.size()
    }

    /// True when every label is a single character, so words render without separators.
    pub fn is_single_char(&self) -> bool {
        self.inner.single_char
    }

    /// Renders a word as text: concatenated for single-character alphabets,
    /// space-separated otherwise. The empty word renders as the empty string.
    pub fn render_word(&self, word: &[Symbol]) -> String {
        let sep = if self.is_single_char() { "" } else { " " };
        word.iter()
            .map(|&s| self.label(s))
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Inverse of [`Alphabet::render_word`]. Whitespace-separated input is always read as
    /// tokens; otherwise single-character alphabets read one symbol per character.
    pub fn parse_word(&self, text: &str) -> Result<Word, SequenceError> {
        let text = text.trim();
        let tokens: Vec<String> = if text.contains(char::is_whitespace) || !self.is_single_char()
        {
            text.split_whitespace().map(str::to_owned).collect()
        } else {
            text.chars().map(String::from).collect()
        };
        self.word_from_labels(&tokens)
    }

    pub fn word_from_labels<L: AsRef<str>>(&self, labels: &[L]) -> Result<Word, SequenceError> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                self.symbol(l.as_ref())
                    .ok_or_else(|| SequenceError::UnknownSymbol {
                        label: l.as_ref().to_owned(),
                        position: i + 1,
                    })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word::from)
    }

    pub fn word_labels(&self, word: &[Symbol]) -> Vec<String> {
        word.iter().map(|&s| self.label(s).to_owned()).collect()
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.labels == other.inner.labels
    }
}

impl Eq for Alphabet {}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Alphabet").field(&self.inner.labels).finish()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.inner.labels.join(","))
    }
}

/// Finite string of symbols, oldest first.
///
/// Ordered by length, then by the most recent symbol, then the next most recent, and
/// so on. This is the breadth-first order of the trie obtained by prepending symbols.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    /// The empty string (the root of every tree).
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word `b w`.
    pub fn prepend(&self, b: Symbol) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(b);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// Longest proper suffix; `None` for the empty word.
    pub fn parent(&self) -> Option<Word> {
        if self.0.is_empty() {
            None
        } else {
            Some(Word(self.0[1..].to_vec()))
        }
    }

    /// Suffix of the given length (clamped to the word length).
    pub fn suffix(&self, len: usize) -> &[Symbol] {
        let len = len.min(self.0.len());
        &self.0[self.0.len() - len..]
    }

    pub fn is_suffix_of(&self, other: &[Symbol]) -> bool {
        other.ends_with(&self.0)
    }

    pub fn is_proper_suffix_of(&self, other: &[Symbol]) -> bool {
        self.0.len() < other.len() && other.ends_with(&self.0)
    }

    /// All suffixes from the empty word up to the word itself.
    pub fn suffixes(&self) -> impl Iterator<Item = &[Symbol]> + '_ {
        (0..=self.0.len()).map(move |k| self.suffix(k))
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

impl std::ops::Deref for Word {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("λ");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

/// How raw text is split into symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestMode {
    /// One symbol per character; line breaks are skipped.
    Chars,
    /// Whitespace-separated labels.
    Tokens,
}

impl FromStr for IngestMode {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chars" => Ok(IngestMode::Chars),
            "tokens" => Ok(IngestMode::Tokens),
            other => Err(SequenceError::UnknownMode(other.to_owned())),
        }
    }
}

/// A sample `X_1, ..., X_n` over an alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    alphabet: Alphabet,
    data: Vec<Symbol>,
}

impl Sample {
    pub fn new(alphabet: Alphabet, data: Vec<Symbol>) -> Result<Self, SequenceError> {
        if data.is_empty() {
            return Err(SequenceError::EmptyInput);
        }
        if let Some(pos) = data.iter().position(|&s| !alphabet.contains(s)) {
            return Err(SequenceError::UnknownSymbol {
                label: data[pos].to_string(),
                position: pos + 1,
            });
        }
        Ok(Sample { alphabet, data })
    }

    /// Reads symbols from raw bytes.
    pub fn ingest(raw: &[u8], mode: IngestMode, alphabet: &Alphabet) -> Result<Self, SequenceError> {
        let text = std::str::from_utf8(raw).map_err(|_| SequenceError::InvalidUtf8)?;
        let mut data = Vec::with_capacity(text.len());
        let push = |label: &str, data: &mut Vec<Symbol>| match alphabet.symbol(label) {
            Some(s) => {
                data.push(s);
                Ok(())
            }
            None => Err(SequenceError::UnknownSymbol {
                label: label.to_owned(),
                position: data.len() + 1,
            }),
        };
        match mode {
            IngestMode::Chars => {
                let mut buf = [0u8; 4];
                for ch in text.chars().filter(|&c| c != '\n' && c != '\r') {
                    push(ch.encode_utf8(&mut buf), &mut data)?;
                }
            }
            IngestMode::Tokens => {
                for token in text.split_whitespace() {
                    push(token, &mut data)?;
                }
            }
        }
        if data.is_empty() {
            return Err(SequenceError::EmptyInput);
        }
        Ok(Sample {
            alphabet: alphabet.clone(),
            data,
        })
    }

    /// Writes the sample as text that [`Sample::ingest`] reads back in the same mode.
    /// Chars mode requires a single-character alphabet.
    pub fn render(&self, mode: IngestMode) -> String {
        let mut out = String::with_capacity(self.data.len() * 2);
        match mode {
            IngestMode::Chars => {
                for &s in &self.data {
                    out.push_str(self.alphabet.label(s));
                }
            }
            IngestMode::Tokens => {
                for (i, &s) in self.data.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push_str(self.alphabet.label(s));
                }
            }
        }
        out.push('\n');
        out
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

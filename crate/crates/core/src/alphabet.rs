//! Base symbols, the padding symbol, tuple symbols and convolution of strings.

use crate::error::{Error, Result};
use crate::intern::StrInterner;
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, LazyLock};

static TOKENS: LazyLock<StrInterner> = LazyLock::new(StrInterner::new);

/// Characters that can never appear inside a token.
pub const RESERVED: [char; 5] = ['(', ')', ',', '_', '#'];

/// An interned, non-empty text atom.
///
/// Equality and hashing use the interned handle; ordering uses the text so
/// that every ordering-dependent output is reproducible across runs.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaseSymbol(u32);

impl BaseSymbol {
    pub fn new(token: &str) -> Result<Self> {
        if token.is_empty() {
            return Err(Error::invalid("empty symbol token"));
        }
        if let Some(c) = token
            .chars()
            .find(|c| c.is_whitespace() || RESERVED.contains(c))
        {
            return Err(Error::invalid(format!(
                "symbol token `{token}` contains reserved character `{c}`"
            )));
        }
        Ok(BaseSymbol(TOKENS.intern(token)))
    }

    pub fn as_str(self) -> &'static str {
        TOKENS.get(self.0)
    }
}

impl Ord for BaseSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            Ordering::Equal
        } else {
            self.as_str().cmp(other.as_str())
        }
    }
}

impl PartialOrd for BaseSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BaseSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for BaseSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// A base symbol or the padding marker, rendered `_`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PaddedSymbol {
    Pad,
    Sym(BaseSymbol),
}

impl PaddedSymbol {
    pub fn is_pad(self) -> bool {
        matches!(self, PaddedSymbol::Pad)
    }

    pub fn parse(token: &str) -> Result<Self> {
        if token == "_" {
            Ok(PaddedSymbol::Pad)
        } else {
            BaseSymbol::new(token).map(PaddedSymbol::Sym)
        }
    }
}

impl From<BaseSymbol> for PaddedSymbol {
    fn from(s: BaseSymbol) -> Self {
        PaddedSymbol::Sym(s)
    }
}

impl fmt::Display for PaddedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PaddedSymbol::Pad => f.write_str("_"),
            PaddedSymbol::Sym(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Debug for PaddedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An element of `(Σ ⊎ {_})^arity`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleSymbol(SmallVec<[PaddedSymbol; 4]>);

impl TupleSymbol {
    pub fn new(components: impl IntoIterator<Item = PaddedSymbol>) -> Result<Self> {
        let components: SmallVec<[PaddedSymbol; 4]> = components.into_iter().collect();
        if components.is_empty() {
            return Err(Error::invalid("tuple symbol of arity 0"));
        }
        Ok(TupleSymbol(components))
    }

    pub fn single(symbol: BaseSymbol) -> Self {
        TupleSymbol(smallvec::smallvec![PaddedSymbol::Sym(symbol)])
    }

    /// The all-padding tuple of the given arity.
    pub fn pad(arity: usize) -> Self {
        assert!(arity >= 1, "tuple symbol of arity 0");
        TupleSymbol(smallvec::smallvec![PaddedSymbol::Pad; arity])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[PaddedSymbol] {
        &self.0
    }

    pub fn is_all_pad(&self) -> bool {
        self.0.iter().all(|c| c.is_pad())
    }

    /// Parses `(t1,...,tn)` or a bare single token.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let inner = match text.strip_prefix('(') {
            Some(rest) => rest
                .strip_suffix(')')
                .ok_or_else(|| Error::invalid(format!("unbalanced tuple symbol `{text}`")))?,
            None => text,
        };
        let parts: Result<Vec<_>> = inner.split(',').map(|t| PaddedSymbol::parse(t.trim())).collect();
        TupleSymbol::new(parts?)
    }
}

impl fmt::Display for TupleSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for TupleSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A string over base symbols.
pub type Word = Vec<BaseSymbol>;

/// Splits `text` into one-character tokens. Handy for alphabets like `{0,1}`.
pub fn chars_word(text: &str) -> Result<Word> {
    let mut buf = [0u8; 4];
    text.chars()
        .map(|c| BaseSymbol::new(c.encode_utf8(&mut buf)))
        .collect()
}

pub fn format_word(word: &[BaseSymbol]) -> String {
    word.iter().map(|s| s.as_str()).collect()
}

/// Renders a tuple string by concatenating its symbols, e.g. `(a,a)(a,b)`.
pub fn format_tuple_string(conv: &[TupleSymbol]) -> String {
    conv.iter().map(|s| s.to_string()).collect()
}

/// Convolution of non-empty strings: columnwise zip, shorter strings padded with `_`.
pub fn tensor_strings(strings: &[Word]) -> Result<Vec<TupleSymbol>> {
    if strings.is_empty() {
        return Err(Error::invalid("convolution of an empty list of strings"));
    }
    if strings.iter().any(|w| w.is_empty()) {
        return Err(Error::invalid("convolution of an empty string"));
    }
    let len = strings.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..len)
        .map(|j| {
            TupleSymbol(
                strings
                    .iter()
                    .map(|w| w.get(j).map_or(PaddedSymbol::Pad, |&s| PaddedSymbol::Sym(s)))
                    .collect(),
            )
        })
        .collect())
}

/// Inverse of [`tensor_strings`].
pub fn untensor(conv: &[TupleSymbol]) -> Result<Vec<Word>> {
    let first = conv
        .first()
        .ok_or_else(|| Error::MalformedConvolution("empty string".into()))?;
    let arity = first.arity();
    let mut words = vec![Word::new(); arity];
    let mut padded = vec![false; arity];
    for (pos, symbol) in conv.iter().enumerate() {
        if symbol.arity() != arity {
            return Err(Error::MalformedConvolution(format!(
                "column {pos} has arity {}, expected {arity}",
                symbol.arity()
            )));
        }
        if symbol.is_all_pad() {
            return Err(Error::MalformedConvolution(format!("column {pos} is all padding")));
        }
        for (track, component) in symbol.components().iter().enumerate() {
            match component {
                PaddedSymbol::Pad => padded[track] = true,
                PaddedSymbol::Sym(s) if !padded[track] => words[track].push(*s),
                PaddedSymbol::Sym(_) => {
                    return Err(Error::MalformedConvolution(format!(
                        "track {track} continues after padding at column {pos}"
                    )))
                }
            }
        }
    }
    if let Some(track) = words.iter().position(Vec::is_empty) {
        return Err(Error::MalformedConvolution(format!("track {track} is empty")));
    }
    Ok(words)
}

/// A finite, non-empty base alphabet with a fixed declaration order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseAlphabet(Arc<[BaseSymbol]>);

impl BaseAlphabet {
    pub fn new(symbols: impl IntoIterator<Item = BaseSymbol>) -> Result<Self> {
        let symbols: Vec<BaseSymbol> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::invalid("alphabets must be non-empty"));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::invalid(format!("duplicate alphabet symbol `{s}`")));
            }
        }
        Ok(BaseAlphabet(symbols.into()))
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let symbols: Result<Vec<_>> = tokens.into_iter().map(BaseSymbol::new).collect();
        BaseAlphabet::new(symbols?)
    }

    /// `{0, 1}`.
    pub fn binary() -> Self {
        BaseAlphabet::from_tokens(["0", "1"]).expect("binary alphabet")
    }

    pub fn symbols(&self) -> &[BaseSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: BaseSymbol) -> bool {
        self.0.contains(&s)
    }

    pub fn index_of(&self, s: BaseSymbol) -> Option<usize> {
        self.0.iter().position(|&x| x == s)
    }

    pub fn contains_padded(&self, s: PaddedSymbol) -> bool {
        match s {
            PaddedSymbol::Pad => true,
            PaddedSymbol::Sym(b) => self.contains(b),
        }
    }

    /// All tuples in `(Σ ⊎ {_})^arity`, optionally without the all-padding tuple.
    pub fn padded_tuples(&self, arity: usize, include_all_pad: bool) -> Vec<TupleSymbol> {
        let mut choices: Vec<PaddedSymbol> = vec![PaddedSymbol::Pad];
        choices.extend(self.0.iter().map(|&s| PaddedSymbol::Sym(s)));
        let mut out: Vec<SmallVec<[PaddedSymbol; 4]>> = vec![SmallVec::new()];
        for _ in 0..arity {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&c| {
                        let mut next = prefix.clone();
                        next.push(c);
                        next
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(TupleSymbol)
            .filter(|t| include_all_pad || !t.is_all_pad())
            .collect()
    }

    pub fn tokens(&self) -> String {
        self.0.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Debug for BaseAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.tokens())
    }
}

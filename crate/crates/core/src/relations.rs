//! Synchronized regular relations over padded convolutions.
//!
//! A relation of arity `m` is an automaton reading columns of `m` track
//! symbols. Each track is either a string track over `Σ^⊗a` or a layer track
//! whose symbols are ODD layers. Accepted strings are always valid
//! convolutions: every track is non-empty, padding only occurs as a suffix of
//! a track, and no column is entirely padding.

use crate::alphabet::{BaseAlphabet, BaseSymbol, PaddedSymbol, TupleSymbol};
use crate::automaton::{Nfa, StateId, SymbolSet};
use crate::error::{Error, Result};
use crate::intern::Interner;
use crate::odd::{enumeration_limit, LayerId};
use num_bigint::BigUint;
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, LazyLock};

static TUPLES: LazyLock<Interner<TupleSymbol>> = LazyLock::new(Interner::new);

/// Interned tuple symbol of arity at least two; ordered by content.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TupleId(u32);

impl TupleId {
    pub fn of(t: TupleSymbol) -> Self {
        TupleId(TUPLES.intern(t))
    }

    pub fn get(self) -> Arc<TupleSymbol> {
        TUPLES.get(self.0)
    }
}

impl Ord for TupleId {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            Ordering::Equal
        } else {
            self.get().cmp(&other.get())
        }
    }
}

impl PartialOrd for TupleId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

/// One component of a column.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrackSym {
    Pad,
    Sym(BaseSymbol),
    Tuple(TupleId),
    Layer(LayerId),
}

impl TrackSym {
    pub fn is_pad(self) -> bool {
        self == TrackSym::Pad
    }

    /// The string-track symbol for a tuple: padding for the all-padding tuple,
    /// a plain symbol for arity one.
    pub fn from_tuple(t: &TupleSymbol) -> Self {
        if t.is_all_pad() {
            TrackSym::Pad
        } else if t.arity() == 1 {
            match t.components()[0] {
                PaddedSymbol::Sym(b) => TrackSym::Sym(b),
                PaddedSymbol::Pad => TrackSym::Pad,
            }
        } else {
            TrackSym::Tuple(TupleId::of(t.clone()))
        }
    }

    /// Inverse of [`TrackSym::from_tuple`] for a string track of the given arity.
    pub fn to_tuple(self, arity: usize) -> Option<TupleSymbol> {
        match self {
            TrackSym::Pad => Some(TupleSymbol::pad(arity)),
            TrackSym::Sym(b) if arity == 1 => Some(TupleSymbol::single(b)),
            TrackSym::Tuple(t) if t.get().arity() == arity => Some((*t.get()).clone()),
            _ => None,
        }
    }
}

impl fmt::Display for TrackSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackSym::Pad => f.write_str("_"),
            TrackSym::Sym(b) => write!(f, "{b}"),
            TrackSym::Tuple(t) => write!(f, "{}", t.get()),
            TrackSym::Layer(l) => write!(f, "L{}", l.index()),
        }
    }
}

impl fmt::Debug for TrackSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub type Column = SmallVec<[TrackSym; 6]>;

/// Strings over `Σ^⊗arity`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct WordTrack {
    pub alphabet: BaseAlphabet,
    pub arity: usize,
}

/// Layers of `(Σ, w)`-ODDs of a fixed arity, restricted to a finite support.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LayerTrack {
    pub alphabet: BaseAlphabet,
    pub arity: usize,
    pub width: usize,
    pub layers: Arc<BTreeSet<LayerId>>,
}

impl LayerTrack {
    pub fn new(
        alphabet: BaseAlphabet,
        arity: usize,
        width: usize,
        layers: impl IntoIterator<Item = LayerId>,
    ) -> Self {
        LayerTrack {
            alphabet,
            arity,
            width,
            layers: Arc::new(layers.into_iter().collect()),
        }
    }

    fn same_kind(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.arity == other.arity && self.width == other.width
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TrackSpec {
    Word(WordTrack),
    Layers(LayerTrack),
}

impl TrackSpec {
    pub fn word(alphabet: &BaseAlphabet, arity: usize) -> Self {
        TrackSpec::Word(WordTrack {
            alphabet: alphabet.clone(),
            arity,
        })
    }

    pub fn contains(&self, s: TrackSym) -> bool {
        match (self, s) {
            (_, TrackSym::Pad) => true,
            (TrackSpec::Word(w), TrackSym::Sym(b)) => w.arity == 1 && w.alphabet.contains(b),
            (TrackSpec::Word(w), TrackSym::Tuple(t)) => {
                let t = t.get();
                w.arity > 1
                    && t.arity() == w.arity
                    && t.components().iter().all(|&c| w.alphabet.contains_padded(c))
            }
            (TrackSpec::Layers(l), TrackSym::Layer(id)) => l.layers.contains(&id),
            _ => false,
        }
    }

    /// Number of non-padding symbols.
    pub fn size(&self) -> BigUint {
        match self {
            TrackSpec::Word(w) => BigUint::from(w.alphabet.len() + 1).pow(w.arity as u32) - 1u32,
            TrackSpec::Layers(l) => BigUint::from(l.layers.len()),
        }
    }

    /// Non-padding symbols of a string track.
    pub fn word_symbols(&self) -> Vec<TrackSym> {
        match self {
            TrackSpec::Word(w) => w
                .alphabet
                .padded_tuples(w.arity, false)
                .iter()
                .map(TrackSym::from_tuple)
                .collect(),
            TrackSpec::Layers(l) => l.layers.iter().map(|&id| TrackSym::Layer(id)).collect(),
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        match (self, other) {
            (TrackSpec::Word(a), TrackSpec::Word(b)) => a == b,
            (TrackSpec::Layers(a), TrackSpec::Layers(b)) => a.same_kind(b),
            _ => false,
        }
    }

    fn merge(&self, other: &Self, union: bool) -> Self {
        match (self, other) {
            (TrackSpec::Layers(a), TrackSpec::Layers(b)) if a.same_kind(b) => {
                let layers = if union {
                    &*a.layers | &*b.layers
                } else {
                    &*a.layers & &*b.layers
                };
                TrackSpec::Layers(LayerTrack {
                    layers: Arc::new(layers),
                    ..a.clone()
                })
            }
            _ => self.clone(),
        }
    }
}

/// The support of a relation: one spec per track.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Tracks(Arc<[TrackSpec]>);

impl Tracks {
    pub fn new(specs: impl IntoIterator<Item = TrackSpec>) -> Self {
        Tracks(specs.into_iter().collect())
    }

    pub fn specs(&self) -> &[TrackSpec] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(other.0.iter()).all(|(a, b)| a.same_shape(b))
    }

    fn select(&self, picks: &[usize]) -> Tracks {
        Tracks::new(picks.iter().map(|&i| self.0[i].clone()))
    }
}

impl SymbolSet<Column> for Tracks {
    fn contains(&self, column: &Column) -> bool {
        column.len() == self.0.len()
            && !column.iter().all(|s| s.is_pad())
            && column.iter().zip(self.0.iter()).all(|(&s, spec)| spec.contains(s))
    }

    fn size(&self) -> BigUint {
        let all: BigUint = self.0.iter().map(|s| s.size() + 1u32).product();
        all - 1u32
    }

    fn union(&self, other: &Self) -> Self {
        if !self.same_shape(other) {
            return self.clone();
        }
        Tracks::new(self.0.iter().zip(other.0.iter()).map(|(a, b)| a.merge(b, true)))
    }

    fn intersection(&self, other: &Self) -> Self {
        if !self.same_shape(other) {
            return self.clone();
        }
        Tracks::new(self.0.iter().zip(other.0.iter()).map(|(a, b)| a.merge(b, false)))
    }

    fn is_subset(&self, other: &Self) -> bool {
        self.same_shape(other)
            && self.0.iter().zip(other.0.iter()).all(|(a, b)| match (a, b) {
                (TrackSpec::Layers(a), TrackSpec::Layers(b)) => a.layers.is_subset(&b.layers),
                _ => true,
            })
    }
}

/// Convolution of track strings; shorter tracks are padded.
pub fn convolve(tracks: &[Vec<TrackSym>]) -> Result<Vec<Column>> {
    if tracks.is_empty() {
        return Err(Error::invalid("convolution of an empty list of strings"));
    }
    if tracks.iter().any(|t| t.is_empty() || t.iter().any(|s| s.is_pad())) {
        return Err(Error::invalid("track strings must be non-empty and padding-free"));
    }
    let len = tracks.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..len)
        .map(|j| tracks.iter().map(|t| t.get(j).copied().unwrap_or(TrackSym::Pad)).collect())
        .collect())
}

/// Inverse of [`convolve`].
pub fn deconvolve(columns: &[Column]) -> Result<Vec<Vec<TrackSym>>> {
    let first = columns
        .first()
        .ok_or_else(|| Error::MalformedConvolution("empty string".into()))?;
    let arity = first.len();
    let mut tracks = vec![Vec::new(); arity];
    let mut ended = vec![false; arity];
    for (pos, column) in columns.iter().enumerate() {
        if column.len() != arity {
            return Err(Error::MalformedConvolution(format!(
                "column {pos} has {} tracks, expected {arity}",
                column.len()
            )));
        }
        if column.iter().all(|s| s.is_pad()) {
            return Err(Error::MalformedConvolution(format!("column {pos} is all padding")));
        }
        for (i, &s) in column.iter().enumerate() {
            if s.is_pad() {
                ended[i] = true;
            } else if ended[i] {
                return Err(Error::MalformedConvolution(format!(
                    "track {i} continues after padding at column {pos}"
                )));
            } else {
                tracks[i].push(s);
            }
        }
    }
    if let Some(i) = tracks.iter().position(Vec::is_empty) {
        return Err(Error::MalformedConvolution(format!("track {i} is empty")));
    }
    Ok(tracks)
}

/// Converts base-symbol words to track strings.
pub fn word_track(word: &[BaseSymbol]) -> Vec<TrackSym> {
    word.iter().map(|&b| TrackSym::Sym(b)).collect()
}

/// Converts a string over `Σ^⊗a` to a track string; the padding tuple is rejected.
pub fn tuple_track(s: &[TupleSymbol]) -> Result<Vec<TrackSym>> {
    s.iter()
        .map(|t| match TrackSym::from_tuple(t) {
            TrackSym::Pad => Err(Error::invalid("the padding tuple cannot occur in a string")),
            sym => Ok(sym),
        })
        .collect()
}

pub type Tuple = Vec<Vec<TrackSym>>;

/// Output track of a join: a track of the left or of the right operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left(usize),
    Right(usize),
}

#[derive(Clone, Debug)]
pub struct Relation {
    nfa: Nfa<Column, Tracks>,
}

impl Relation {
    /// Wraps an automaton; the caller guarantees that it only accepts valid convolutions.
    pub fn from_nfa(nfa: Nfa<Column, Tracks>) -> Self {
        Relation { nfa }
    }

    pub fn empty(tracks: Tracks) -> Self {
        Relation { nfa: Nfa::new(tracks) }
    }

    /// The finite relation containing exactly `tuples`.
    pub fn from_tuples<'a>(tracks: Tracks, tuples: impl IntoIterator<Item = &'a Tuple>) -> Result<Self> {
        let mut nfa = Nfa::new(tracks.clone());
        let root = nfa.add_state(false);
        nfa.add_initial(root);
        let mut children: HashMap<(StateId, Column), StateId> = HashMap::new();
        for tuple in tuples {
            if tuple.len() != tracks.len() {
                return Err(Error::invalid(format!(
                    "tuple has {} components, the relation has {} tracks",
                    tuple.len(),
                    tracks.len()
                )));
            }
            let columns = convolve(tuple)?;
            let mut q = root;
            for column in columns {
                if !tracks.contains(&column) {
                    return Err(Error::invalid(format!("column {column:?} is outside the track alphabets")));
                }
                q = match children.get(&(q, column.clone())) {
                    Some(&next) => next,
                    None => {
                        let next = nfa.add_state(false);
                        nfa.add_transition(q, column.clone(), next);
                        children.insert((q, column), next);
                        next
                    }
                };
            }
            nfa.set_final(q, true);
        }
        nfa.normalize();
        Ok(Relation { nfa })
    }

    pub fn nfa(&self) -> &Nfa<Column, Tracks> {
        &self.nfa
    }

    pub fn into_nfa(self) -> Nfa<Column, Tracks> {
        self.nfa
    }

    pub fn tracks(&self) -> &Tracks {
        self.nfa.support()
    }

    pub fn arity(&self) -> usize {
        self.tracks().len()
    }

    pub fn num_states(&self) -> usize {
        self.nfa.num_states()
    }

    pub fn accepts(&self, columns: &[Column]) -> bool {
        self.nfa.accepts(columns)
    }

    pub fn contains(&self, tuple: &[Vec<TrackSym>]) -> bool {
        tuple.len() == self.arity() && convolve(tuple).is_ok_and(|c| self.nfa.accepts(&c))
    }

    pub fn is_empty(&self) -> bool {
        self.nfa.is_empty()
    }

    pub fn shortest_witness(&self) -> Option<Vec<Column>> {
        self.nfa.shortest_witness()
    }

    /// All tuples whose convolution has length at most `max_len`.
    pub fn enumerate_tuples(&self, max_len: usize) -> Result<BTreeSet<Tuple>> {
        self.enumerate_tuples_with_limit(max_len, enumeration_limit())
    }

    pub fn enumerate_tuples_with_limit(&self, max_len: usize, limit: usize) -> Result<BTreeSet<Tuple>> {
        self.nfa
            .enumerate(max_len, limit)?
            .iter()
            .map(|w| deconvolve(w))
            .collect()
    }

    /// Trims and merges bisimilar states.
    pub fn reduce(&self) -> Self {
        Relation { nfa: self.nfa.reduce() }
    }

    /// Keeps the transitions whose column satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Column) -> bool) -> Self {
        let nfa = self
            .nfa
            .map_symbols(self.tracks().clone(), |c| keep(c).then(|| c.clone()));
        Relation { nfa: nfa.trim() }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.arity() {
            return Err(Error::invalid(format!(
                "track index {i} out of range for a relation of arity {}",
                self.arity()
            )));
        }
        Ok(())
    }

    /// Result track `i` is input track `p[i]`.
    pub fn perm(&self, p: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.arity()];
        if p.len() != self.arity() {
            return Err(Error::invalid("permutation length differs from the arity"));
        }
        for &i in p {
            self.check_index(i)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        let tracks = self.tracks().select(p);
        let nfa = self
            .nfa
            .map_symbols(tracks, |c| Some(p.iter().map(|&i| c[i]).collect()));
        Ok(Relation { nfa })
    }

    /// Removes the tracks in `drop`.
    pub fn proj(&self, drop: &[usize]) -> Result<Self> {
        for &i in drop {
            self.check_index(i)?;
        }
        let keep: Vec<usize> = (0..self.arity()).filter(|i| !drop.contains(i)).collect();
        if keep.is_empty() {
            return Err(Error::invalid("projection would remove every track"));
        }
        if keep.len() == self.arity() {
            return Ok(self.clone());
        }
        let tracks = self.tracks().select(&keep);
        let edges: Vec<(StateId, Column, StateId)> = self
            .nfa
            .transitions()
            .map(|(p, c, q)| (p, keep.iter().map(|&i| c[i]).collect(), q))
            .collect();
        let finals: Vec<bool> = (0..self.num_states()).map(|q| self.nfa.is_final(q)).collect();
        Ok(Relation {
            nfa: padding_closure(tracks, self.nfa.initial(), finals, edges),
        })
    }

    /// Keeps the tuples whose components agree on every pair.
    pub fn identify(&self, pairs: &[(usize, usize)]) -> Result<Self> {
        for &(i, j) in pairs {
            self.check_index(i)?;
            self.check_index(j)?;
        }
        Ok(self.filter(|c| pairs.iter().all(|&(i, j)| c[i] == c[j])))
    }

    /// Groups the string tracks `i..=j` into one track over the tensor power.
    pub fn fold(&self, i: usize, j: usize) -> Result<Self> {
        self.check_index(j)?;
        if i > j {
            return Err(Error::invalid(format!("fold range {i}..={j} is empty")));
        }
        if i == j {
            return Ok(self.clone());
        }
        let specs = self.tracks().specs();
        let alphabet = match &specs[i] {
            TrackSpec::Word(w) => w.alphabet.clone(),
            TrackSpec::Layers(_) => return Err(Error::invalid("fold only applies to string tracks")),
        };
        if !specs[i..=j]
            .iter()
            .all(|s| matches!(s, TrackSpec::Word(w) if w.arity == 1 && w.alphabet == alphabet))
        {
            return Err(Error::invalid(
                "fold needs plain string tracks over one alphabet",
            ));
        }
        let mut new_specs: Vec<TrackSpec> = specs[..i].to_vec();
        new_specs.push(TrackSpec::word(&alphabet, j - i + 1));
        new_specs.extend_from_slice(&specs[j + 1..]);
        let nfa = self.nfa.map_symbols(Tracks::new(new_specs), |c| {
            let group = TupleSymbol::new(c[i..=j].iter().map(|&s| match s {
                TrackSym::Sym(b) => PaddedSymbol::Sym(b),
                _ => PaddedSymbol::Pad,
            }))
            .expect("non-empty group");
            let mut out: Column = c[..i].iter().copied().collect();
            out.push(TrackSym::from_tuple(&group));
            out.extend_from_slice(&c[j + 1..]);
            Some(out)
        });
        Ok(Relation { nfa })
    }

    /// Splits a string track over `Σ^⊗a` into `a` plain string tracks,
    /// keeping only the strings that are convolutions.
    pub fn unfold(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        let (alphabet, arity) = match &self.tracks().specs()[i] {
            TrackSpec::Word(w) => (w.alphabet.clone(), w.arity),
            TrackSpec::Layers(_) => return Err(Error::invalid("unfold only applies to string tracks")),
        };
        if arity == 1 {
            return Ok(self.clone());
        }
        let specs = self.tracks().specs();
        let mut new_specs: Vec<TrackSpec> = specs[..i].to_vec();
        new_specs.extend((0..arity).map(|_| TrackSpec::word(&alphabet, 1)));
        new_specs.extend_from_slice(&specs[i + 1..]);
        let mut out = Nfa::new(Tracks::new(new_specs));
        // State: (inner state, components that have ended, before the first column).
        let mut ids: HashMap<(StateId, u64, bool), StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        for &q in self.nfa.initial() {
            let id = out.add_state(false);
            ids.insert((q, 0, true), id);
            out.add_initial(id);
            queue.push_back((q, 0u64, true));
        }
        while let Some((q, mask, first)) = queue.pop_front() {
            let from = ids[&(q, mask, first)];
            for (c, q2) in self.nfa.edges(q) {
                let Some(t) = c[i].to_tuple(arity) else { continue };
                let comps = t.components();
                if first && comps.iter().any(|x| x.is_pad()) {
                    continue;
                }
                let mut next_mask = mask;
                let mut ok = true;
                for (k, comp) in comps.iter().enumerate() {
                    match comp {
                        PaddedSymbol::Pad => next_mask |= 1 << k,
                        PaddedSymbol::Sym(_) if mask & (1 << k) != 0 => ok = false,
                        PaddedSymbol::Sym(_) => {}
                    }
                }
                if !ok {
                    continue;
                }
                let key = (*q2, next_mask, false);
                let to = *ids.entry(key).or_insert_with(|| {
                    queue.push_back(key);
                    out.add_state(self.nfa.is_final(*q2))
                });
                let mut column: Column = c[..i].iter().copied().collect();
                column.extend(comps.iter().map(|&x| match x {
                    PaddedSymbol::Sym(b) => TrackSym::Sym(b),
                    PaddedSymbol::Pad => TrackSym::Pad,
                }));
                column.extend_from_slice(&c[i + 1..]);
                out.add_transition(from, column, to);
            }
        }
        out.normalize();
        Ok(Relation { nfa: out.trim() })
    }

    /// All concatenations of a tuple of `self` with a tuple of `other`.
    ///
    /// An empty operand is the neutral element: `R ⊕ ∅ = ∅ ⊕ R = R`.
    pub fn direct_sum(&self, other: &Relation) -> Self {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        self.product(other)
    }

    /// Direct sum without the empty-operand convention.
    pub fn product(&self, other: &Relation) -> Self {
        let keep: Vec<Side> = (0..self.arity())
            .map(Side::Left)
            .chain((0..other.arity()).map(Side::Right))
            .collect();
        self.join(other, &[], &keep).expect("indices in range")
    }

    /// Direct sum, identification of `pairs` (left index, right index) and
    /// projection onto `keep`, in a single product construction.
    pub fn join(&self, other: &Relation, pairs: &[(usize, usize)], keep: &[Side]) -> Result<Self> {
        for &(i, j) in pairs {
            self.check_index(i)?;
            other.check_index(j)?;
        }
        for &side in keep {
            match side {
                Side::Left(i) => self.check_index(i)?,
                Side::Right(j) => other.check_index(j)?,
            }
        }
        if keep.is_empty() {
            return Err(Error::invalid("a join must keep at least one track"));
        }
        let tracks = Tracks::new(keep.iter().map(|&side| match side {
            Side::Left(i) => self.tracks().specs()[i].clone(),
            Side::Right(j) => other.tracks().specs()[j].clone(),
        }));
        let left = padded_tail(&self.nfa);
        let right = padded_tail(&other.nfa);
        let left_keys: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let right_keys: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let key = |c: &Column, idx: &[usize]| -> SmallVec<[TrackSym; 4]> { idx.iter().map(|&i| c[i]).collect() };
        let index: Vec<HashMap<SmallVec<[TrackSym; 4]>, Vec<usize>>> = right
            .edges
            .iter()
            .map(|out| {
                let mut map: HashMap<_, Vec<usize>> = HashMap::new();
                for (e, (c, _)) in out.iter().enumerate() {
                    map.entry(key(c, &right_keys)).or_default().push(e);
                }
                map
            })
            .collect();
        let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
        let mut finals = Vec::new();
        let mut initial = Vec::new();
        let mut edges = Vec::new();
        let mut queue = VecDeque::new();
        for &p in &left.initial {
            for &q in &right.initial {
                ids.insert((p, q), finals.len());
                initial.push(finals.len());
                finals.push(left.finals[p] && right.finals[q]);
                queue.push_back((p, q));
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            let from = ids[&(p, q)];
            for (x, p2) in &left.edges[p] {
                let Some(matches) = index[q].get(&key(x, &left_keys)) else { continue };
                for &e in matches {
                    let (y, q2) = &right.edges[q][e];
                    if x.iter().chain(y.iter()).all(|s| s.is_pad()) {
                        continue;
                    }
                    let to = *ids.entry((*p2, *q2)).or_insert_with(|| {
                        queue.push_back((*p2, *q2));
                        finals.push(left.finals[*p2] && right.finals[*q2]);
                        finals.len() - 1
                    });
                    let column: Column = keep
                        .iter()
                        .map(|&side| match side {
                            Side::Left(i) => x[i],
                            Side::Right(j) => y[j],
                        })
                        .collect();
                    edges.push((from, column, to));
                }
            }
        }
        let nfa = padding_closure(tracks, &initial, finals, edges);
        Ok(Relation { nfa })
    }

    fn check_shape(&self, other: &Relation, op: &str) -> Result<()> {
        if !self.tracks().same_shape(other.tracks()) {
            return Err(Error::invalid(format!("{op}: relations have different track shapes")));
        }
        Ok(())
    }

    pub fn union(&self, other: &Relation) -> Result<Self> {
        self.check_shape(other, "union")?;
        Ok(Relation {
            nfa: self.nfa.union(&other.nfa),
        })
    }

    pub fn intersect(&self, other: &Relation) -> Result<Self> {
        self.check_shape(other, "intersection")?;
        Ok(Relation {
            nfa: self.nfa.intersect(&other.nfa).trim(),
        })
    }

    /// `self \ other`, with the complement of `other` taken over the support of `self`.
    pub fn difference(&self, other: &Relation) -> Result<Self> {
        self.check_shape(other, "difference")?;
        let other = other.restrict_support(self.tracks());
        Ok(Relation {
            nfa: self.nfa.difference(&other.nfa)?.trim(),
        })
    }

    /// The complement of `r` inside `universe`.
    pub fn complement_within(universe: &Relation, r: &Relation) -> Result<Self> {
        universe.difference(r)
    }

    /// Drops transitions reading symbols outside `tracks`.
    pub fn restrict_support(&self, tracks: &Tracks) -> Self {
        if self.tracks().is_subset(tracks) {
            return self.clone();
        }
        let support = self.tracks().intersection(tracks);
        let nfa = self
            .nfa
            .map_symbols(support.clone(), |c| support.contains(c).then(|| c.clone()));
        Relation { nfa: nfa.trim() }
    }
}

struct Tailed {
    edges: Vec<Vec<(Column, StateId)>>,
    initial: Vec<StateId>,
    finals: Vec<bool>,
}

/// Adds a final state reached from every final state, and from itself, by the all-padding column.
fn padded_tail(nfa: &Nfa<Column, Tracks>) -> Tailed {
    let n = nfa.num_states();
    let pad: Column = (0..nfa.support().len()).map(|_| TrackSym::Pad).collect();
    let mut edges: Vec<Vec<(Column, StateId)>> = (0..n).map(|q| nfa.edges(q).to_vec()).collect();
    let mut finals: Vec<bool> = (0..n).map(|q| nfa.is_final(q)).collect();
    for (q, out) in edges.iter_mut().enumerate() {
        if finals[q] {
            out.push((pad.clone(), n));
        }
    }
    edges.push(vec![(pad, n)]);
    finals.push(true);
    Tailed {
        edges,
        initial: nfa.initial().to_vec(),
        finals,
    }
}

/// Builds an automaton from raw edges in which some columns may be entirely
/// padding: states that reach a final state through such columns become final,
/// and the all-padding edges are deleted.
fn padding_closure(
    tracks: Tracks,
    initial: &[StateId],
    mut finals: Vec<bool>,
    edges: Vec<(StateId, Column, StateId)>,
) -> Nfa<Column, Tracks> {
    let n = finals.len();
    let mut pad_rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (p, c, q) in &edges {
        if c.iter().all(|s| s.is_pad()) {
            pad_rev[*q].push(*p);
        }
    }
    let mut stack: Vec<StateId> = (0..n).filter(|&q| finals[q]).collect();
    while let Some(q) = stack.pop() {
        for &p in &pad_rev[q] {
            if !finals[p] {
                finals[p] = true;
                stack.push(p);
            }
        }
    }
    let mut nfa = Nfa::new(tracks);
    for &f in &finals {
        nfa.add_state(f);
    }
    for &q in initial {
        nfa.add_initial(q);
    }
    for (p, c, q) in edges {
        if !c.iter().all(|s| s.is_pad()) {
            nfa.add_transition(p, c, q);
        }
    }
    nfa.normalize();
    nfa.reduce()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::chars_word;

    fn ab() -> BaseAlphabet {
        BaseAlphabet::from_tokens(["a", "b", "c"]).unwrap()
    }

    fn words(n: usize) -> Tracks {
        Tracks::new((0..n).map(|_| TrackSpec::word(&ab(), 1)))
    }

    fn w(text: &str) -> Vec<TrackSym> {
        word_track(&chars_word(text).unwrap())
    }

    fn tuple(parts: &[&str]) -> Tuple {
        parts.iter().map(|p| w(p)).collect()
    }

    fn rel(n: usize, tuples: &[&[&str]]) -> Relation {
        let tuples: Vec<Tuple> = tuples.iter().map(|t| tuple(t)).collect();
        Relation::from_tuples(words(n), &tuples).unwrap()
    }

    fn set(tuples: &[&[&str]]) -> BTreeSet<Tuple> {
        tuples.iter().map(|t| tuple(t)).collect()
    }

    #[test]
    fn swap_permutes_components() {
        let r = rel(2, &[&["ab", "c"]]);
        assert_eq!(r.perm(&[1, 0]).unwrap().enumerate_tuples(4).unwrap(), set(&[&["c", "ab"]]));
        assert_eq!(r.perm(&[0, 1]).unwrap().enumerate_tuples(4).unwrap(), set(&[&["ab", "c"]]));
        assert!(r.perm(&[0, 0]).is_err());
    }

    #[test]
    fn projection_needs_padding_closure() {
        let r = rel(2, &[&["ab", "a"]]);
        let p = r.proj(&[0]).unwrap();
        assert_eq!(p.enumerate_tuples(4).unwrap(), set(&[&["a"]]));
        assert_eq!(r.proj(&[]).unwrap().enumerate_tuples(4).unwrap(), set(&[&["ab", "a"]]));
        assert!(r.proj(&[0, 1]).is_err());
    }

    #[test]
    fn identify_keeps_equal_components() {
        let r = rel(2, &[&["ab", "ab"], &["ab", "ba"]]);
        assert_eq!(r.identify(&[(0, 1)]).unwrap().enumerate_tuples(4).unwrap(), set(&[&["ab", "ab"]]));
        assert_eq!(r.identify(&[]).unwrap().enumerate_tuples(4).unwrap().len(), 2);
    }

    #[test]
    fn fold_and_unfold_are_inverse() {
        let r = rel(3, &[&["a", "b", "c"], &["a", "bb", "c"]]);
        let folded = r.fold(1, 2).unwrap();
        assert_eq!(folded.arity(), 2);
        let got = folded.enumerate_tuples(4).unwrap();
        let bc = TrackSym::from_tuple(&TupleSymbol::parse("(b,c)").unwrap());
        let b_ = TrackSym::from_tuple(&TupleSymbol::parse("(b,_)").unwrap());
        assert!(got.contains(&vec![w("a"), vec![bc]]));
        assert!(got.contains(&vec![w("a"), vec![bc, b_]]));
        let back = folded.unfold(1).unwrap();
        assert_eq!(back.enumerate_tuples(4).unwrap(), r.enumerate_tuples(4).unwrap());
    }

    #[test]
    fn unfold_drops_non_convolutions() {
        let alphabet = ab();
        let tracks = Tracks::new([TrackSpec::word(&alphabet, 2)]);
        let sym = |t: &str| TrackSym::from_tuple(&TupleSymbol::parse(t).unwrap());
        let tuples = vec![
            vec![vec![sym("(a,_)"), sym("(_,b)")]],
            vec![vec![sym("(a,_)")]],
            vec![vec![sym("(a,b)"), sym("(_,b)")]],
        ];
        let r = Relation::from_tuples(tracks, &tuples).unwrap();
        assert_eq!(r.unfold(0).unwrap().enumerate_tuples(4).unwrap(), set(&[&["a", "bb"]]));
    }

    #[test]
    fn direct_sum_pads_independently() {
        let r = rel(1, &[&["a"]]);
        let s = rel(1, &[&["bb"]]);
        let sum = r.direct_sum(&s);
        assert_eq!(sum.enumerate_tuples(4).unwrap(), set(&[&["a", "bb"]]));
        let empty = Relation::empty(words(1));
        assert_eq!(r.direct_sum(&empty).enumerate_tuples(4).unwrap(), set(&[&["a"]]));
        assert!(r.product(&empty).is_empty());
    }

    #[test]
    fn boolean_operations() {
        let r = rel(1, &[&["a"], &["ab"]]);
        let u = rel(1, &[&["a"], &["ab"], &["c"]]);
        assert_eq!(r.intersect(&r).unwrap().enumerate_tuples(4).unwrap(), r.enumerate_tuples(4).unwrap());
        assert_eq!(r.union(&r).unwrap().enumerate_tuples(4).unwrap(), r.enumerate_tuples(4).unwrap());
        assert!(Relation::complement_within(&u, &u).unwrap().is_empty());
        assert_eq!(Relation::complement_within(&u, &r).unwrap().enumerate_tuples(4).unwrap(), set(&[&["c"]]));
        assert!(r.union(&rel(2, &[&["a", "a"]])).is_err());
    }

    #[test]
    fn convolution_round_trip() {
        let t = tuple(&["abc", "a"]);
        let c = convolve(&t).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(deconvolve(&c).unwrap(), t);
        let bad: Vec<Column> = vec![
            [TrackSym::Sym(chars_word("a").unwrap()[0]), TrackSym::Pad].into_iter().collect(),
            [TrackSym::Pad, TrackSym::Sym(chars_word("a").unwrap()[0])].into_iter().collect(),
        ];
        assert!(matches!(deconvolve(&bad), Err(Error::MalformedConvolution(_))));
    }

    #[test]
    fn support_size_counts_columns() {
        // (|Σ|+1)^2 - 1 columns over two plain tracks of a 3-letter alphabet.
        assert_eq!(words(2).size(), BigUint::from(15u32));
    }
}

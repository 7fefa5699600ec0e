//! Layers and ordered decision diagrams.

use crate::alphabet::{BaseAlphabet, BaseSymbol, PaddedSymbol, TupleSymbol};
use crate::automaton::Nfa;
use crate::error::{Error, OddError, Result};
use crate::intern::Interner;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, LazyLock};

/// Default bound on enumeration work, overridable through `ODDMC_ENUM_LIMIT`.
pub fn enumeration_limit() -> usize {
    std::env::var("ODDMC_ENUM_LIMIT")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(1_000_000)
}

/// One column of an ODD.
///
/// Frontier states are integers in `0..width`. Transitions read tuples over
/// `Σ ⊎ {_}` of the layer's arity; the all-padding tuple is the padding symbol.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Layer {
    pub arity: usize,
    pub width: usize,
    pub left: BTreeSet<u32>,
    pub right: BTreeSet<u32>,
    pub transitions: BTreeSet<(u32, TupleSymbol, u32)>,
    pub initial: BTreeSet<u32>,
    pub finals: BTreeSet<u32>,
    pub init_flag: bool,
    pub final_flag: bool,
}

impl Layer {
    /// A layer with the given frontiers and nothing else.
    pub fn empty(arity: usize, width: usize, left: BTreeSet<u32>, right: BTreeSet<u32>) -> Self {
        Layer {
            arity,
            width,
            left,
            right,
            transitions: BTreeSet::new(),
            initial: BTreeSet::new(),
            finals: BTreeSet::new(),
            init_flag: false,
            final_flag: false,
        }
    }

    pub fn pad_symbol(&self) -> TupleSymbol {
        TupleSymbol::pad(self.arity)
    }

    /// Checks the conditions that concern this layer alone; `index` is 1-based.
    pub fn check(&self, index: usize, alphabet: &BaseAlphabet) -> Result<(), OddError> {
        let width = self.width;
        let all_states = self
            .left
            .iter()
            .chain(&self.right)
            .chain(&self.initial)
            .chain(&self.finals)
            .chain(self.transitions.iter().flat_map(|(l, _, r)| [l, r]));
        for &state in all_states {
            if state as usize >= width {
                return Err(OddError::StateOutOfRange {
                    layer: index,
                    state,
                    width,
                });
            }
        }
        for (l, symbol, r) in &self.transitions {
            if symbol.arity() != self.arity {
                return Err(OddError::SymbolArity {
                    layer: index,
                    expected: self.arity,
                    found: symbol.arity(),
                });
            }
            if !symbol.components().iter().all(|&c| alphabet.contains_padded(c)) {
                return Err(OddError::ForeignSymbol {
                    layer: index,
                    symbol: symbol.to_string(),
                });
            }
            if !self.left.contains(l) {
                return Err(OddError::UndeclaredState { layer: index, state: *l });
            }
            if !self.right.contains(r) {
                return Err(OddError::UndeclaredState { layer: index, state: *r });
            }
        }
        if !self.initial.is_subset(&self.left) || !self.finals.is_subset(&self.right) {
            return Err(OddError::InitialFinalOutsideFrontier { layer: index });
        }
        if !self.init_flag && !self.initial.is_empty() {
            return Err(OddError::InitialWithoutFlag { layer: index });
        }
        if !self.final_flag && !self.finals.is_empty() {
            return Err(OddError::FinalWithoutFlag { layer: index });
        }
        Ok(())
    }

    pub fn successors<'a>(&'a self, from: u32, symbol: &'a TupleSymbol) -> impl Iterator<Item = u32> + 'a {
        self.transitions
            .range((from, symbol.clone(), 0)..=(from, symbol.clone(), u32::MAX))
            .map(|(_, _, r)| *r)
    }

    /// The largest frontier of the layer.
    pub fn frontier_size(&self) -> usize {
        self.left.len().max(self.right.len())
    }
}

static LAYERS: LazyLock<Interner<Layer>> = LazyLock::new(Interner::new);

/// Interned handle of a [`Layer`]; ordered by layer content.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerId(u32);

impl LayerId {
    pub fn of(layer: Layer) -> Self {
        LayerId(LAYERS.intern(layer))
    }

    pub fn get(self) -> Arc<Layer> {
        LAYERS.get(self.0)
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl Ord for LayerId {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            Ordering::Equal
        } else {
            self.get().cmp(&other.get())
        }
    }
}

impl PartialOrd for LayerId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// A validated ODD: a non-empty sequence of layers satisfying the chaining
/// and flag conditions. Strings shorter than the ODD read padding at the end.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Odd {
    alphabet: BaseAlphabet,
    arity: usize,
    width: usize,
    layers: Vec<LayerId>,
}

/// Validates a candidate ODD. Same as [`Odd::new`].
pub fn validate_odd(
    alphabet: BaseAlphabet,
    arity: usize,
    width: usize,
    layers: Vec<Layer>,
) -> Result<Odd, OddError> {
    Odd::new(alphabet, arity, width, layers)
}

impl Odd {
    pub fn new(
        alphabet: BaseAlphabet,
        arity: usize,
        width: usize,
        layers: Vec<Layer>,
    ) -> Result<Self, OddError> {
        Self::check_layers(&alphabet, arity, width, &layers)?;
        Ok(Odd {
            alphabet,
            arity,
            width,
            layers: layers.into_iter().map(LayerId::of).collect(),
        })
    }

    pub fn from_ids(
        alphabet: BaseAlphabet,
        arity: usize,
        width: usize,
        ids: Vec<LayerId>,
    ) -> Result<Self, OddError> {
        let layers: Vec<Layer> = ids.iter().map(|id| (*id.get()).clone()).collect();
        Self::check_layers(&alphabet, arity, width, &layers)?;
        Ok(Odd {
            alphabet,
            arity,
            width,
            layers: ids,
        })
    }

    fn check_layers(
        alphabet: &BaseAlphabet,
        arity: usize,
        width: usize,
        layers: &[Layer],
    ) -> Result<(), OddError> {
        if layers.is_empty() {
            return Err(OddError::NoLayers);
        }
        for (i, layer) in layers.iter().enumerate() {
            let index = i + 1;
            if layer.arity != arity {
                return Err(OddError::LayerArity {
                    layer: index,
                    expected: arity,
                    found: layer.arity,
                });
            }
            if layer.width != width {
                return Err(OddError::LayerWidth {
                    layer: index,
                    expected: width,
                    found: layer.width,
                });
            }
            layer.check(index, alphabet)?;
        }
        for i in 1..layers.len() {
            if layers[i].left != layers[i - 1].right {
                return Err(OddError::FrontierMismatch {
                    layer: i + 1,
                    previous: i,
                });
            }
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.init_flag != (i == 0) {
                return Err(OddError::InitialFlagPlacement { layer: i + 1 });
            }
        }
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            if layer.final_flag != (i == last) {
                return Err(OddError::FinalFlagPlacement { layer: i + 1 });
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &BaseAlphabet {
        &self.alphabet
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// The width bound `w` shared by all layers.
    pub fn width_bound(&self) -> usize {
        self.width
    }

    /// The number of layers.
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn layer_ids(&self) -> &[LayerId] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> Arc<Layer> {
        self.layers[i].get()
    }

    pub fn layers(&self) -> Vec<Arc<Layer>> {
        self.layers.iter().map(|id| id.get()).collect()
    }

    /// The measured width: the largest frontier.
    pub fn width(&self) -> usize {
        self.layers().iter().map(|l| l.frontier_size()).max().unwrap_or(0)
    }

    /// All tuple symbols the ODD may read, excluding the padding tuple.
    pub fn tuple_support(&self) -> BTreeSet<TupleSymbol> {
        self.alphabet.padded_tuples(self.arity, false).into_iter().collect()
    }

    /// `pad_live[j]`: states of frontier `j` from which padding alone reaches a final state.
    pub(crate) fn pad_live(&self, layers: &[Arc<Layer>]) -> Vec<BTreeSet<u32>> {
        let k = layers.len();
        let pad = TupleSymbol::pad(self.arity);
        let mut live = vec![BTreeSet::new(); k + 1];
        live[k] = layers[k - 1].finals.clone();
        for j in (0..k).rev() {
            live[j] = layers[j]
                .transitions
                .iter()
                .filter(|(_, s, r)| *s == pad && live[j + 1].contains(r))
                .map(|(l, _, _)| *l)
                .collect();
        }
        live
    }

    /// `any_live[j]`: states of frontier `j` from which some continuation is accepted.
    fn any_live(&self, layers: &[Arc<Layer>], pad_live: &[BTreeSet<u32>]) -> Vec<BTreeSet<u32>> {
        let k = layers.len();
        let mut live = pad_live.to_vec();
        for j in (0..k).rev() {
            let extra: Vec<u32> = layers[j]
                .transitions
                .iter()
                .filter(|(_, s, r)| !s.is_all_pad() && live[j + 1].contains(r))
                .map(|(l, _, _)| *l)
                .collect();
            live[j].extend(extra);
        }
        live
    }

    fn check_input(&self, s: &[TupleSymbol]) -> Result<()> {
        if s.len() > self.len() {
            return Err(Error::invalid(format!(
                "string of length {} is longer than the ODD ({} layers)",
                s.len(),
                self.len()
            )));
        }
        for symbol in s {
            if symbol.arity() != self.arity {
                return Err(Error::invalid(format!(
                    "symbol {symbol} has arity {}, the ODD reads arity {}",
                    symbol.arity(),
                    self.arity
                )));
            }
            if symbol.is_all_pad() {
                return Err(Error::invalid("the padding symbol cannot occur inside a string"));
            }
            if !symbol.components().iter().all(|&c| self.alphabet.contains_padded(c)) {
                return Err(Error::invalid(format!("symbol {symbol} is not over the ODD alphabet")));
            }
        }
        Ok(())
    }

    /// Whether the ODD accepts `s`; positions beyond `|s|` read the padding symbol.
    pub fn accepts(&self, s: &[TupleSymbol]) -> Result<bool> {
        self.check_input(s)?;
        if s.is_empty() {
            return Ok(false);
        }
        let layers = self.layers();
        let pad = TupleSymbol::pad(self.arity);
        let mut current: BTreeSet<u32> = layers[0].initial.clone();
        for (j, layer) in layers.iter().enumerate() {
            let symbol = s.get(j).unwrap_or(&pad);
            current = current
                .iter()
                .flat_map(|&l| layer.successors(l, symbol).collect::<Vec<_>>())
                .collect();
            if current.is_empty() {
                return Ok(false);
            }
        }
        Ok(!current.is_disjoint(&layers[layers.len() - 1].finals))
    }

    /// Convenience form of [`Odd::accepts`] for arity-1 ODDs.
    pub fn accepts_word(&self, word: &[BaseSymbol]) -> Result<bool> {
        let s: Vec<TupleSymbol> = word.iter().map(|&b| TupleSymbol::single(b)).collect();
        self.accepts(&s)
    }

    pub fn enumerate_language(&self) -> Result<BTreeSet<Vec<TupleSymbol>>> {
        self.enumerate_language_with_limit(enumeration_limit())
    }

    /// The language, by a search over reachable state sets pruned to live states.
    ///
    /// `limit` bounds the number of visited prefixes.
    pub fn enumerate_language_with_limit(&self, limit: usize) -> Result<BTreeSet<Vec<TupleSymbol>>> {
        let layers = self.layers();
        let k = layers.len();
        let pad_live = self.pad_live(&layers);
        let any_live = self.any_live(&layers, &pad_live);
        let mut out = BTreeSet::new();
        let mut visited = 0usize;
        let start: BTreeSet<u32> = layers[0]
            .initial
            .intersection(&any_live[0])
            .copied()
            .collect();
        let mut stack: Vec<(Vec<TupleSymbol>, BTreeSet<u32>)> = vec![(Vec::new(), start)];
        while let Some((prefix, states)) = stack.pop() {
            visited += 1;
            if visited > limit {
                return Err(Error::ResourceLimit(format!(
                    "ODD language enumeration visited more than {limit} prefixes"
                )));
            }
            let j = prefix.len();
            if j > 0 && !states.is_disjoint(&pad_live[j]) {
                out.insert(prefix.clone());
            }
            if j == k {
                continue;
            }
            let mut next: BTreeMap<&TupleSymbol, BTreeSet<u32>> = BTreeMap::new();
            for (l, s, r) in &layers[j].transitions {
                if !s.is_all_pad() && states.contains(l) && any_live[j + 1].contains(r) {
                    next.entry(s).or_default().insert(*r);
                }
            }
            for (s, targets) in next.into_iter().rev() {
                let mut word = prefix.clone();
                word.push(s.clone());
                stack.push((word, targets));
            }
        }
        Ok(out)
    }

    /// An ODD of length `k2` with the same language.
    pub fn pad_to_length(&self, k2: usize) -> Result<Odd> {
        let k = self.len();
        if k2 < k {
            return Err(Error::invalid(format!(
                "cannot pad an ODD of length {k} to the shorter length {k2}"
            )));
        }
        if k2 == k {
            return Ok(self.clone());
        }
        let layers = self.layers();
        let pad = TupleSymbol::pad(self.arity);
        let zero: BTreeSet<u32> = [0].into();
        let width = self.width.max(1);
        let mut out: Vec<Layer> = layers[..k - 1].iter().map(|l| (**l).clone()).collect();
        let last = &layers[k - 1];
        let mut stripped = (**last).clone();
        stripped.finals.clear();
        stripped.final_flag = false;
        stripped.width = width;
        out.push(stripped);
        // Leaves the old final states through padding and parks on state 0.
        let mut bridge = Layer::empty(self.arity, width, last.right.clone(), zero.clone());
        bridge.transitions = last.finals.iter().map(|&f| (f, pad.clone(), 0)).collect();
        out.push(bridge);
        while out.len() < k2 {
            let mut pass = Layer::empty(self.arity, width, zero.clone(), zero.clone());
            pass.transitions.insert((0, pad.clone(), 0));
            out.push(pass);
        }
        let end = out.last_mut().expect("at least one layer");
        end.final_flag = true;
        end.finals = zero;
        for layer in &mut out {
            layer.width = width;
        }
        Ok(Odd::new(self.alphabet.clone(), self.arity, width, out)?)
    }

    /// Re-encodes the ODD over `{0,1}` with the width bound `w²·|Σ|^arity`.
    pub fn binarize(&self, encoding: &BinaryEncoding) -> Result<Odd> {
        let bound = self.width * self.width * self.alphabet.len().pow(self.arity as u32);
        self.binarize_to_width(encoding, bound)
    }

    /// Like [`Odd::binarize`], with an explicit (large enough) width bound.
    pub fn binarize_to_width(&self, encoding: &BinaryEncoding, width: usize) -> Result<Odd> {
        if encoding.alphabet() != &self.alphabet {
            return Err(Error::invalid("the encoding is for a different alphabet"));
        }
        let alpha = encoding.alpha();
        let layers = self.layers();
        let k = layers.len();
        let mut out = Vec::with_capacity(k * alpha);
        for (g, layer) in layers.iter().enumerate() {
            let first = g == 0;
            let last = g + 1 == k;
            let columns: Vec<((u32, u32), Vec<TupleSymbol>)> = layer
                .transitions
                .iter()
                .map(|(l, s, r)| ((*l, *r), encoding.encode_tuple(s)))
                .collect();
            // Inner frontier h is keyed by (columns still to read, target state).
            let keys: Vec<BTreeMap<(&[TupleSymbol], u32), u32>> = (1..alpha)
                .map(|h| {
                    let set: BTreeSet<(&[TupleSymbol], u32)> =
                        columns.iter().map(|((_, r), cols)| (&cols[h..], *r)).collect();
                    set.into_iter().zip(0u32..).collect()
                })
                .collect();
            for h in 0..alpha {
                let left = if h == 0 {
                    layer.left.clone()
                } else {
                    keys[h - 1].values().copied().collect()
                };
                let right = if h + 1 == alpha {
                    layer.right.clone()
                } else {
                    keys[h].values().copied().collect()
                };
                let mut b = Layer::empty(self.arity, width, left, right);
                for ((l, r), cols) in &columns {
                    let from = if h == 0 { *l } else { keys[h - 1][&(&cols[h..], *r)] };
                    let to = if h + 1 == alpha { *r } else { keys[h][&(&cols[h + 1..], *r)] };
                    b.transitions.insert((from, cols[h].clone(), to));
                }
                if first && h == 0 {
                    b.init_flag = true;
                    b.initial = layer.initial.clone();
                }
                if last && h + 1 == alpha {
                    b.final_flag = true;
                    b.finals = layer.finals.clone();
                }
                out.push(b);
            }
        }
        let binary = BaseAlphabet::binary();
        Odd::new(binary, self.arity, width, out).map_err(|e| {
            Error::Internal(format!("binarized ODD failed validation: {e}"))
        })
    }

    /// An automaton accepting exactly the language of the ODD.
    pub fn to_nfa(&self) -> Nfa<TupleSymbol> {
        let layers = self.layers();
        let k = layers.len();
        let pad_live = self.pad_live(&layers);
        let mut nfa = Nfa::new(self.tuple_support());
        let mut ids: HashMap<(usize, u32), usize> = HashMap::new();
        let mut state = |nfa: &mut Nfa<TupleSymbol>, j: usize, q: u32| -> usize {
            *ids.entry((j, q))
                .or_insert_with(|| nfa.add_state(j > 0 && pad_live[j].contains(&q)))
        };
        for &q in &layers[0].initial {
            let id = state(&mut nfa, 0, q);
            nfa.add_initial(id);
        }
        for (j, layer) in layers.iter().enumerate() {
            for (l, s, r) in &layer.transitions {
                if s.is_all_pad() {
                    continue;
                }
                let from = state(&mut nfa, j, *l);
                let to = state(&mut nfa, j + 1, *r);
                nfa.add_transition(from, s.clone(), to);
            }
        }
        debug_assert!(ids.keys().all(|(j, _)| *j <= k));
        nfa.normalize();
        nfa.trim()
    }
}

/// An injection of `Σ ⊎ {_}` into `({0,1} ⊎ {_})^α` sending padding to `_^α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryEncoding {
    alphabet: BaseAlphabet,
    codes: Vec<Vec<bool>>,
}

impl BinaryEncoding {
    /// `α = max(1, ⌈log₂|Σ|⌉)`.
    pub fn alpha_for(size: usize) -> usize {
        let mut alpha = 1;
        while (1usize << alpha) < size {
            alpha += 1;
        }
        alpha
    }

    /// Each symbol maps to its declaration index in binary, most significant bit first.
    pub fn standard(alphabet: &BaseAlphabet) -> Self {
        let alpha = Self::alpha_for(alphabet.len());
        let codes = (0..alphabet.len())
            .map(|i| (0..alpha).rev().map(|bit| (i >> bit) & 1 == 1).collect())
            .collect();
        BinaryEncoding {
            alphabet: alphabet.clone(),
            codes,
        }
    }

    /// A user-chosen encoding; codes must be distinct bit strings of length `α`.
    pub fn from_codes(alphabet: &BaseAlphabet, codes: &[(BaseSymbol, Vec<bool>)]) -> Result<Self> {
        let alpha = Self::alpha_for(alphabet.len());
        let mut table = vec![None; alphabet.len()];
        for (symbol, code) in codes {
            let i = alphabet
                .index_of(*symbol)
                .ok_or_else(|| Error::invalid(format!("`{symbol}` is not in the alphabet")))?;
            if code.len() != alpha {
                return Err(Error::invalid(format!(
                    "code of `{symbol}` has length {}, expected {alpha}",
                    code.len()
                )));
            }
            table[i] = Some(code.clone());
        }
        let codes: Vec<Vec<bool>> = table
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| Error::invalid(format!("no code for `{}`", alphabet.symbols()[i])))
            })
            .collect::<Result<_>>()?;
        let distinct: BTreeSet<&Vec<bool>> = codes.iter().collect();
        if distinct.len() != codes.len() {
            return Err(Error::invalid("the encoding is not injective"));
        }
        Ok(BinaryEncoding {
            alphabet: alphabet.clone(),
            codes,
        })
    }

    pub fn alphabet(&self) -> &BaseAlphabet {
        &self.alphabet
    }

    pub fn alpha(&self) -> usize {
        Self::alpha_for(self.alphabet.len())
    }

    fn bits() -> [BaseSymbol; 2] {
        let binary = BaseAlphabet::binary();
        [binary.symbols()[0], binary.symbols()[1]]
    }

    pub fn encode(&self, symbol: PaddedSymbol) -> Vec<PaddedSymbol> {
        match symbol {
            PaddedSymbol::Pad => vec![PaddedSymbol::Pad; self.alpha()],
            PaddedSymbol::Sym(s) => {
                let bits = Self::bits();
                let i = self.alphabet.index_of(s).expect("symbol of the encoded alphabet");
                self.codes[i]
                    .iter()
                    .map(|&b| PaddedSymbol::Sym(bits[usize::from(b)]))
                    .collect()
            }
        }
    }

    /// The `α` columns encoding one tuple symbol, trackwise.
    pub fn encode_tuple(&self, symbol: &TupleSymbol) -> Vec<TupleSymbol> {
        let encoded: Vec<Vec<PaddedSymbol>> =
            symbol.components().iter().map(|&c| self.encode(c)).collect();
        (0..self.alpha())
            .map(|h| TupleSymbol::new(encoded.iter().map(|e| e[h])).expect("positive arity"))
            .collect()
    }

    pub fn encode_string(&self, s: &[TupleSymbol]) -> Vec<TupleSymbol> {
        s.iter().flat_map(|t| self.encode_tuple(t)).collect()
    }

    pub fn decode_block(&self, block: &[PaddedSymbol]) -> Option<PaddedSymbol> {
        if block.iter().all(|b| b.is_pad()) {
            return Some(PaddedSymbol::Pad);
        }
        let bits = Self::bits();
        let code: Option<Vec<bool>> = block
            .iter()
            .map(|b| match b {
                PaddedSymbol::Sym(s) if *s == bits[0] => Some(false),
                PaddedSymbol::Sym(s) if *s == bits[1] => Some(true),
                _ => None,
            })
            .collect();
        let code = code?;
        let i = self.codes.iter().position(|c| *c == code)?;
        Some(PaddedSymbol::Sym(self.alphabet.symbols()[i]))
    }

    /// Decodes a string over `{0,1}` block by block.
    pub fn decode_word(&self, word: &[BaseSymbol]) -> Option<Vec<BaseSymbol>> {
        let alpha = self.alpha();
        if word.len() % alpha != 0 {
            return None;
        }
        word.chunks(alpha)
            .map(|chunk| {
                let block: Vec<PaddedSymbol> = chunk.iter().map(|&b| PaddedSymbol::Sym(b)).collect();
                match self.decode_block(&block)? {
                    PaddedSymbol::Sym(s) => Some(s),
                    PaddedSymbol::Pad => None,
                }
            })
            .collect()
    }
}

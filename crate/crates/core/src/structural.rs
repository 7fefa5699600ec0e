//! Vocabularies, structural tuples, class automata and the core relations
//! over layer tracks.
//!
//! Every relation here is built over a finite support: for each layer track
//! only the layers that occur in the query at hand.

use crate::alphabet::{BaseAlphabet, PaddedSymbol, TupleSymbol};
use crate::automaton::{Nfa, StateId};
use crate::error::{Error, Result, StructuralError};
use crate::odd::{BinaryEncoding, Layer, LayerId, Odd};
use crate::relations::{Column, LayerTrack, Relation, Side, TrackSpec, TrackSym, Tracks, WordTrack};
use smallvec::SmallVec;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

/// Relation symbols with their arities.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Vocabulary {
    relations: Arc<[(String, usize)]>,
}

impl Vocabulary {
    pub fn new(relations: impl IntoIterator<Item = (String, usize)>) -> Result<Self> {
        let relations: Vec<(String, usize)> = relations.into_iter().collect();
        for (i, (name, arity)) in relations.iter().enumerate() {
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::invalid(format!("invalid relation name `{name}`")));
            }
            if *arity == 0 {
                return Err(Error::invalid(format!("relation `{name}` has arity 0")));
            }
            if relations[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::invalid(format!("duplicate relation name `{name}`")));
            }
        }
        Ok(Vocabulary {
            relations: relations.into(),
        })
    }

    /// Parses `E/2 F/1`.
    pub fn parse(text: &str) -> Result<Self> {
        let relations: Result<Vec<(String, usize)>> = text
            .split_whitespace()
            .map(|item| {
                let (name, arity) = item
                    .split_once('/')
                    .ok_or_else(|| Error::invalid(format!("expected Name/arity, found `{item}`")))?;
                let arity = arity
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad arity in `{item}`")))?;
                Ok((name.to_string(), arity))
            })
            .collect();
        Vocabulary::new(relations?)
    }

    /// The number of relation symbols.
    pub fn rho(&self) -> usize {
        self.relations.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.relations[i].0
    }

    pub fn arity(&self, i: usize) -> usize {
        self.relations[i].1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|(n, _)| n == name)
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    /// Arity of every track of a structural tuple: 1 for the domain, then `a_i`.
    pub fn track_arities(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.relations.iter().map(|r| r.1)).collect()
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.relations.iter().map(|(n, a)| format!("{n}/{a}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// A domain ODD plus one ODD per relation symbol, encoding one finite structure.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StructuralTuple {
    vocabulary: Vocabulary,
    odds: Vec<Odd>,
}

impl StructuralTuple {
    /// Validates with the width bound of the domain ODD.
    pub fn new(vocabulary: Vocabulary, odds: Vec<Odd>) -> Result<Self, StructuralError> {
        let w = odds.first().map_or(1, |d| d.width_bound());
        validate_structural(vocabulary, odds, w)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn odds(&self) -> &[Odd] {
        &self.odds
    }

    pub fn domain(&self) -> &Odd {
        &self.odds[0]
    }

    pub fn alphabet(&self) -> &BaseAlphabet {
        self.odds[0].alphabet()
    }

    pub fn width_bound(&self) -> usize {
        self.odds[0].width_bound()
    }

    /// The common number of layers.
    pub fn len(&self) -> usize {
        self.odds[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Checks the structural conditions: shapes, equal lengths, widths, inclusion
/// of every relation in the domain, and a non-empty domain.
pub fn validate_structural(
    vocabulary: Vocabulary,
    odds: Vec<Odd>,
    w: usize,
) -> Result<StructuralTuple, StructuralError> {
    let arities = vocabulary.track_arities();
    if odds.len() != arities.len() {
        return Err(StructuralError::TrackCount {
            expected: arities.len(),
            found: odds.len(),
        });
    }
    let d0 = &odds[0];
    for (index, (odd, &arity)) in odds.iter().zip(&arities).enumerate() {
        if odd.arity() != arity {
            return Err(StructuralError::ArityMismatch {
                index,
                expected: arity,
                found: odd.arity(),
            });
        }
        if odd.alphabet() != d0.alphabet() {
            return Err(StructuralError::AlphabetMismatch { index });
        }
        if odd.len() != d0.len() {
            return Err(StructuralError::LengthMismatch {
                index,
                expected: d0.len(),
                found: odd.len(),
            });
        }
        if odd.width_bound() != w {
            return Err(StructuralError::WidthBoundMismatch {
                index,
                expected: w,
                found: odd.width_bound(),
            });
        }
        if odd.width() > w {
            return Err(StructuralError::WidthExceeded {
                index,
                found: odd.width(),
                bound: w,
            });
        }
    }
    if d0.to_nfa().is_empty() {
        return Err(StructuralError::EmptyDomain);
    }
    for (index, odd) in odds.iter().enumerate().skip(1) {
        if !included_in_domain(d0, odd) {
            return Err(StructuralError::NotContainedInDomain { index });
        }
    }
    Ok(StructuralTuple { vocabulary, odds })
}

/// Whether `L(relation) ⊆ L(domain)^⊗a`, decided on automata.
pub fn included_in_domain(domain: &Odd, relation: &Odd) -> bool {
    let closure = domain_power_nfa(domain, relation.arity());
    let rel = relation.to_nfa();
    match rel.difference(&closure.with_support(rel.support().clone())) {
        Ok(diff) => diff.is_empty(),
        Err(_) => false,
    }
}

/// Automaton for `{w₁⊗…⊗w_a : wᵢ ∈ L(D₀)}`: every track simulates `D₀` on its
/// own component and may stop (switch to padding) where `D₀` can accept.
pub fn domain_power_nfa(d0: &Odd, arity: usize) -> Nfa<TupleSymbol> {
    #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
    enum Track {
        Active(BTreeSet<u32>),
        Done,
    }
    let layers = d0.layers();
    let k = layers.len();
    let pad_live = d0.pad_live(&layers);
    let symbols = d0.alphabet().padded_tuples(arity, false);
    let mut nfa = Nfa::new(d0.alphabet().padded_tuples(arity, false).into_iter().collect());
    let mut ids: HashMap<(usize, Vec<Track>), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let final_at = |j: usize, tracks: &[Track]| {
        j > 0
            && tracks.iter().all(|t| match t {
                Track::Done => true,
                Track::Active(s) => !s.is_disjoint(&pad_live[j]),
            })
    };
    let start = vec![Track::Active(layers[0].initial.clone()); arity];
    let id = nfa.add_state(false);
    nfa.add_initial(id);
    ids.insert((0, start.clone()), id);
    queue.push_back((0usize, start));
    while let Some((j, tracks)) = queue.pop_front() {
        if j == k {
            continue;
        }
        let from = ids[&(j, tracks.clone())];
        'symbols: for symbol in &symbols {
            let mut next = Vec::with_capacity(arity);
            for (track, comp) in tracks.iter().zip(symbol.components()) {
                let advanced = match (track, comp) {
                    (Track::Done, PaddedSymbol::Pad) => Track::Done,
                    (Track::Done, PaddedSymbol::Sym(_)) => continue 'symbols,
                    (Track::Active(_), PaddedSymbol::Pad) if j == 0 => continue 'symbols,
                    (Track::Active(s), PaddedSymbol::Pad) => {
                        if s.is_disjoint(&pad_live[j]) {
                            continue 'symbols;
                        }
                        Track::Done
                    }
                    (Track::Active(s), PaddedSymbol::Sym(b)) => {
                        let single = TupleSymbol::single(*b);
                        let targets: BTreeSet<u32> =
                            s.iter().flat_map(|&l| layers[j].successors(l, &single).collect::<Vec<_>>()).collect();
                        if targets.is_empty() {
                            continue 'symbols;
                        }
                        Track::Active(targets)
                    }
                };
                next.push(advanced);
            }
            let key = (j + 1, next);
            let to = match ids.get(&key) {
                Some(&id) => id,
                None => {
                    let id = nfa.add_state(final_at(key.0, &key.1));
                    ids.insert(key.clone(), id);
                    queue.push_back(key);
                    id
                }
            };
            nfa.add_transition(from, symbol.clone(), to);
        }
    }
    nfa.normalize();
    nfa.trim()
}

/// The layer string of a structural tuple: column `j` holds layer `j` of every ODD.
pub fn tuple_to_string(t: &StructuralTuple) -> Vec<Column> {
    (0..t.len())
        .map(|j| t.odds.iter().map(|d| TrackSym::Layer(d.layer_ids()[j])).collect())
        .collect()
}

/// Inverse of [`tuple_to_string`]; names the violated condition on failure.
pub fn string_to_tuple(
    vocabulary: &Vocabulary,
    alphabet: &BaseAlphabet,
    w: usize,
    s: &[Column],
) -> Result<StructuralTuple> {
    let arities = vocabulary.track_arities();
    if s.is_empty() {
        return Err(Error::invalid("empty layer string"));
    }
    let mut tracks: Vec<Vec<LayerId>> = vec![Vec::new(); arities.len()];
    for column in s {
        if column.len() != arities.len() {
            return Err(StructuralError::TrackCount {
                expected: arities.len(),
                found: column.len(),
            }
            .into());
        }
        for (i, sym) in column.iter().enumerate() {
            match sym {
                TrackSym::Layer(id) => tracks[i].push(*id),
                TrackSym::Pad => {}
                other => return Err(Error::invalid(format!("`{other}` is not a layer"))),
            }
        }
    }
    let mut odds = Vec::with_capacity(tracks.len());
    for (index, (ids, &arity)) in tracks.into_iter().zip(&arities).enumerate() {
        let odd = Odd::from_ids(alphabet.clone(), arity, w, ids)
            .map_err(|source| StructuralError::Odd { index, source })?;
        odds.push(odd);
    }
    Ok(validate_structural(vocabulary.clone(), odds, w)?)
}

/// Per-track layer sets over which the core relations are materialized.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Support {
    pub vocabulary: Vocabulary,
    pub alphabet: BaseAlphabet,
    pub width: usize,
    pub tracks: Vec<LayerTrack>,
}

impl Support {
    pub fn new(
        vocabulary: Vocabulary,
        alphabet: BaseAlphabet,
        width: usize,
        layers: Vec<BTreeSet<LayerId>>,
    ) -> Result<Self> {
        let arities = vocabulary.track_arities();
        if layers.len() != arities.len() {
            return Err(Error::invalid(format!(
                "support has {} tracks, the vocabulary needs {}",
                layers.len(),
                arities.len()
            )));
        }
        for (i, (set, &arity)) in layers.iter().zip(&arities).enumerate() {
            for id in set {
                let layer = id.get();
                if layer.arity != arity || layer.width != width {
                    return Err(Error::invalid(format!(
                        "track {i}: layer of arity {} and width {} in a track of arity {arity} and width {width}",
                        layer.arity, layer.width
                    )));
                }
                layer.check(i + 1, &alphabet).map_err(Error::InvalidOdd)?;
            }
        }
        let tracks = layers
            .into_iter()
            .zip(arities)
            .map(|(set, arity)| LayerTrack::new(alphabet.clone(), arity, width, set))
            .collect();
        Ok(Support {
            vocabulary,
            alphabet,
            width,
            tracks,
        })
    }

    /// The layers of one structural tuple.
    pub fn of_tuple(t: &StructuralTuple) -> Self {
        let layers = t.odds().iter().map(|d| d.layer_ids().iter().copied().collect()).collect();
        Support::new(t.vocabulary().clone(), t.alphabet().clone(), t.width_bound(), layers)
            .expect("layers of a validated tuple")
    }

    /// The layers read by a class automaton.
    pub fn of_class(class: &ClassAutomaton) -> Self {
        let layers = class
            .relation()
            .tracks()
            .specs()
            .iter()
            .map(|spec| match spec {
                TrackSpec::Layers(l) => (*l.layers).clone(),
                TrackSpec::Word(_) => BTreeSet::new(),
            })
            .collect();
        Support::new(class.vocabulary().clone(), class.alphabet().clone(), class.width(), layers)
            .expect("layers of a validated class automaton")
    }

    pub fn rho(&self) -> usize {
        self.vocabulary.rho()
    }

    pub fn word(&self, arity: usize) -> TrackSpec {
        TrackSpec::word(&self.alphabet, arity)
    }

    pub fn layer_tracks(&self) -> Tracks {
        Tracks::new(self.tracks.iter().cloned().map(TrackSpec::Layers))
    }
}

fn chains(prev: &Layer, next: &Layer) -> bool {
    !prev.final_flag && !next.init_flag && next.left == prev.right
}

fn layer_list(track: &LayerTrack) -> Vec<(LayerId, Arc<Layer>)> {
    track.layers.iter().map(|&id| (id, id.get())).collect()
}

/// Single-track relation of all valid ODDs whose layers come from `track`.
pub fn universe_odds(track: &LayerTrack) -> Relation {
    let layers = layer_list(track);
    let mut nfa = Nfa::new(Tracks::new([TrackSpec::Layers(track.clone())]));
    let start = nfa.add_state(false);
    nfa.add_initial(start);
    let ids: Vec<StateId> = layers.iter().map(|(_, b)| nfa.add_state(b.final_flag)).collect();
    for (i, (id, b)) in layers.iter().enumerate() {
        let column: Column = [TrackSym::Layer(*id)].into_iter().collect();
        if b.init_flag {
            nfa.add_transition(start, column.clone(), ids[i]);
        }
        for (p, (_, prev)) in layers.iter().enumerate() {
            if chains(prev, b) {
                nfa.add_transition(ids[p], column.clone(), ids[i]);
            }
        }
    }
    nfa.normalize();
    Relation::from_nfa(nfa.trim())
}

/// Pairs `(D, s)` with `D` a valid ODD over `track` and `s ∈ L(D)`.
pub fn membership_rel(track: &LayerTrack) -> Relation {
    let layers = layer_list(track);
    let arity = track.arity;
    let tracks = Tracks::new([
        TrackSpec::Layers(track.clone()),
        TrackSpec::Word(WordTrack {
            alphabet: track.alphabet.clone(),
            arity,
        }),
    ]);
    let mut nfa = Nfa::new(tracks);
    let start = nfa.add_state(false);
    nfa.add_initial(start);
    // State: (layer index, right state, string already ended).
    let mut ids: HashMap<(usize, u32, bool), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut state = |nfa: &mut Nfa<Column, Tracks>, queue: &mut VecDeque<_>, key: (usize, u32, bool)| {
        *ids.entry(key).or_insert_with(|| {
            let b = &layers[key.0].1;
            queue.push_back(key);
            nfa.add_state(b.final_flag && b.finals.contains(&key.1))
        })
    };
    for (i, (id, b)) in layers.iter().enumerate() {
        if !b.init_flag {
            continue;
        }
        for (l, sigma, r) in &b.transitions {
            if sigma.is_all_pad() || !b.initial.contains(l) {
                continue;
            }
            let to = state(&mut nfa, &mut queue, (i, *r, false));
            let column: Column = [TrackSym::Layer(*id), TrackSym::from_tuple(sigma)].into_iter().collect();
            nfa.add_transition(start, column, to);
        }
    }
    while let Some((i, q, ended)) = queue.pop_front() {
        let from = state(&mut nfa, &mut queue, (i, q, ended));
        let prev = Arc::clone(&layers[i].1);
        for (n, (id, b)) in layers.iter().enumerate() {
            if !chains(&prev, b) {
                continue;
            }
            for (l, sigma, r) in &b.transitions {
                let pad = sigma.is_all_pad();
                if *l != q || (ended && !pad) {
                    continue;
                }
                let to = state(&mut nfa, &mut queue, (n, *r, ended || pad));
                let column: Column = [TrackSym::Layer(*id), TrackSym::from_tuple(sigma)].into_iter().collect();
                nfa.add_transition(from, column, to);
            }
        }
    }
    nfa.normalize();
    Relation::from_nfa(nfa.reduce())
}

/// Tuples `(D, s₁, …, sₙ)` with `D` valid over `track` and every `sᵢ ∈ L(D)`.
pub fn multi_membership(track: &LayerTrack, n: usize) -> Result<Relation> {
    if n == 0 {
        return Err(Error::invalid("multi-membership needs at least one string track"));
    }
    let single = membership_rel(track);
    let mut out = single.clone();
    for k in 1..n {
        let keep: Vec<Side> = (0..=k).map(Side::Left).chain([Side::Right(1)]).collect();
        out = out.join(&single, &[(0, 0)], &keep)?;
    }
    Ok(out)
}

/// Tuples `(D, s₁, …, sₙ)` with `D` valid over `track` and each `sᵢ` a
/// non-empty string over its track alphabet of length at most `|D|`.
pub fn bounded_rel(track: &LayerTrack, words: &[WordTrack]) -> Relation {
    let layers = layer_list(track);
    let specs: Vec<TrackSpec> = std::iter::once(TrackSpec::Layers(track.clone()))
        .chain(words.iter().cloned().map(TrackSpec::Word))
        .collect();
    let symbols: Vec<Vec<TrackSym>> = specs[1..].iter().map(TrackSpec::word_symbols).collect();
    let mut nfa = Nfa::new(Tracks::new(specs));
    let start = nfa.add_state(false);
    nfa.add_initial(start);
    let mut ids: HashMap<(usize, u64), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut state = |nfa: &mut Nfa<Column, Tracks>, queue: &mut VecDeque<_>, key: (usize, u64)| {
        *ids.entry(key).or_insert_with(|| {
            queue.push_back(key);
            nfa.add_state(layers[key.0].1.final_flag)
        })
    };
    let all_ended = if words.is_empty() { 0 } else { u64::MAX >> (64 - words.len()) };
    for (i, (id, b)) in layers.iter().enumerate() {
        if !b.init_flag {
            continue;
        }
        let to = state(&mut nfa, &mut queue, (i, 0));
        for rest in columns_after(&symbols, 0, true) {
            let mut column: Column = [TrackSym::Layer(*id)].into_iter().collect();
            column.extend(rest.0);
            nfa.add_transition(start, column, to);
        }
    }
    while let Some((i, mask)) = queue.pop_front() {
        let from = state(&mut nfa, &mut queue, (i, mask));
        let prev = Arc::clone(&layers[i].1);
        for (n, (id, b)) in layers.iter().enumerate() {
            if !chains(&prev, b) {
                continue;
            }
            for (rest, ended) in columns_after(&symbols, mask, false) {
                let to = state(&mut nfa, &mut queue, (n, ended & all_ended));
                let mut column: Column = [TrackSym::Layer(*id)].into_iter().collect();
                column.extend(rest);
                nfa.add_transition(from, column, to);
            }
        }
    }
    nfa.normalize();
    Relation::from_nfa(nfa.trim())
}

/// Columns of string symbols respecting padding monotonicity, with the
/// resulting ended-mask. The first column has no padding at all.
fn columns_after(symbols: &[Vec<TrackSym>], mask: u64, first: bool) -> Vec<(SmallVec<[TrackSym; 6]>, u64)> {
    let mut out: Vec<(SmallVec<[TrackSym; 6]>, u64)> = vec![(SmallVec::new(), mask)];
    for (k, syms) in symbols.iter().enumerate() {
        let mut next = Vec::new();
        for (prefix, m) in &out {
            if m & (1 << k) != 0 {
                let mut c = prefix.clone();
                c.push(TrackSym::Pad);
                next.push((c, *m));
                continue;
            }
            if !first {
                let mut c = prefix.clone();
                c.push(TrackSym::Pad);
                next.push((c, m | (1 << k)));
            }
            for &s in syms {
                let mut c = prefix.clone();
                c.push(s);
                next.push((c, *m));
            }
        }
        out = next;
    }
    out
}

/// `R̃(n) \ R̃_∈(n)`: some string is not accepted by `D`.
pub fn non_membership(track: &LayerTrack, n: usize) -> Result<Relation> {
    let word = WordTrack {
        alphabet: track.alphabet.clone(),
        arity: track.arity,
    };
    let bounded = bounded_rel(track, &vec![word; n]);
    bounded.difference(&multi_membership(track, n)?)
}

/// Every non-empty string over `Σ^⊗arity`.
pub fn all_strings(alphabet: &BaseAlphabet, arity: usize) -> Relation {
    let spec = TrackSpec::word(alphabet, arity);
    let symbols = spec.word_symbols();
    let mut nfa = Nfa::new(Tracks::new([spec]));
    let start = nfa.add_state(false);
    let body = nfa.add_state(true);
    nfa.add_initial(start);
    for s in symbols {
        let column: Column = [s].into_iter().collect();
        nfa.add_transition(start, column.clone(), body);
        nfa.add_transition(body, column, body);
    }
    nfa.normalize();
    Relation::from_nfa(nfa)
}

/// All pairs of valid ODDs over the two tracks, of any lengths.
pub fn odd_pair(a: &LayerTrack, b: &LayerTrack) -> Relation {
    universe_odds(a).product(&universe_odds(b))
}

/// `(D, s)` with `D` valid over `domain` and `s` a non-empty string over
/// `Σ^⊗arity` outside `L(D)^⊗arity`. Strings that are not convolutions are
/// outside as well.
pub fn outside_domain_power(domain: &LayerTrack, arity: usize) -> Result<Relation> {
    let any = universe_odds(domain).product(&all_strings(&domain.alphabet, arity));
    let inside = multi_membership(domain, arity)?.fold(1, arity)?;
    any.difference(&inside)
}

/// Pairs `(D, D')` of valid ODDs with `L(D') ⊆ L(D)^⊗a`, where `a` is the arity of `relation`.
pub fn subset_rel(domain: &LayerTrack, relation: &LayerTrack) -> Result<Relation> {
    if domain.arity != 1 {
        return Err(Error::invalid("the domain track must have arity 1"));
    }
    let bad = outside_domain_power(domain, relation.arity)?;
    let witnessed = bad.join(&membership_rel(relation), &[(1, 1)], &[Side::Left(0), Side::Right(0)])?;
    odd_pair(domain, relation).difference(&witnessed)
}

/// Tuples `(D₀, …, D_ρ, v₁, …, vₙ)` where the ODDs form a structural tuple
/// over `support` and every `vⱼ ∈ L(D₀)`.
pub fn structural_universe(support: &Support, n: usize) -> Result<Relation> {
    if n == 0 {
        let rho = support.rho();
        return structural_universe(support, 1)?.proj(&[rho + 1]);
    }
    let d0 = &support.tracks[0];
    let equal_lengths = |r: &Relation, layer_tracks: usize| {
        r.filter(|c| c[..layer_tracks].iter().all(|s| !s.is_pad()))
    };
    let mut odds = universe_odds(d0);
    for (i, track) in support.tracks.iter().enumerate().skip(1) {
        let pair = equal_lengths(&subset_rel(d0, track)?, 2);
        let keep: Vec<Side> = (0..i).map(Side::Left).chain([Side::Right(1)]).collect();
        odds = odds.join(&pair, &[(0, 0)], &keep)?;
    }
    let layers = support.tracks.len();
    let members = multi_membership(d0, n)?;
    let keep: Vec<Side> = (0..layers).map(Side::Left).chain((1..=n).map(Side::Right)).collect();
    let out = odds.join(&members, &[(0, 0)], &keep)?;
    Ok(equal_lengths(&out, layers).reduce())
}

/// `{(t, v₁, …, vₙ) : vᵢ ∈ L(D₀)}` for the single tuple `t`: the
/// structural universe restricted to the layer string of `t`.
pub fn tuple_universe(t: &StructuralTuple, n: usize) -> Result<Relation> {
    let support = Support::of_tuple(t);
    let word = WordTrack {
        alphabet: t.alphabet().clone(),
        arity: 1,
    };
    let specs: Vec<TrackSpec> = support
        .tracks
        .iter()
        .cloned()
        .map(TrackSpec::Layers)
        .chain((0..n).map(|_| TrackSpec::Word(word.clone())))
        .collect();
    let columns = tuple_to_string(t);
    let layers = t.domain().layers();
    let k = layers.len();
    let mut nfa = Nfa::new(Tracks::new(specs));
    // State: (columns read, per variable its domain state and whether it has ended).
    type Vars = SmallVec<[(u32, bool); 4]>;
    let mut ids: HashMap<(usize, Vars), StateId> = HashMap::new();
    let mut queue: VecDeque<(usize, Vars, StateId)> = VecDeque::new();
    let start = nfa.add_state(false);
    nfa.add_initial(start);
    let mut expand = |nfa: &mut Nfa<Column, Tracks>,
                      queue: &mut VecDeque<(usize, Vars, StateId)>,
                      from: StateId,
                      j: usize,
                      current: Option<&Vars>| {
        let layer = &layers[j];
        let options: Vec<Vec<(TrackSym, u32, bool)>> = (0..n)
            .map(|i| {
                let (sources, ended): (Vec<u32>, bool) = match current {
                    None => (layer.initial.iter().copied().collect(), false),
                    Some(vars) => (vec![vars[i].0], vars[i].1),
                };
                layer
                    .transitions
                    .iter()
                    .filter(|(l, sigma, _)| {
                        let pad = sigma.is_all_pad();
                        sources.contains(l) && !(ended && !pad) && !(current.is_none() && pad)
                    })
                    .map(|(_, sigma, r)| {
                        let pad = sigma.is_all_pad();
                        let sym = if pad { TrackSym::Pad } else { TrackSym::from_tuple(sigma) };
                        (sym, *r, ended || pad)
                    })
                    .collect()
            })
            .collect();
        let mut combos: Vec<(Column, Vars)> = vec![(columns[j].clone(), Vars::new())];
        for opts in &options {
            combos = combos
                .into_iter()
                .flat_map(|(c, v)| {
                    opts.iter().map(move |&(sym, r, e)| {
                        let mut c = c.clone();
                        c.push(sym);
                        let mut v = v.clone();
                        v.push((r, e));
                        (c, v)
                    })
                })
                .collect();
        }
        for (column, vars) in combos {
            let key = (j + 1, vars);
            let to = *ids.entry(key.clone()).or_insert_with(|| {
                let accepting = key.0 == k && key.1.iter().all(|(q, _)| layers[k - 1].finals.contains(q));
                let id = nfa.add_state(accepting);
                queue.push_back((key.0, key.1, id));
                id
            });
            nfa.add_transition(from, column, to);
        }
    };
    expand(&mut nfa, &mut queue, start, 0, None);
    while let Some((j, vars, from)) = queue.pop_front() {
        if j == k {
            continue;
        }
        expand(&mut nfa, &mut queue, from, j, Some(&vars));
    }
    nfa.normalize();
    Ok(Relation::from_nfa(nfa.reduce()))
}

/// An automaton over layer tuples whose accepted strings encode structural tuples.
#[derive(Clone, Debug)]
pub struct ClassAutomaton {
    vocabulary: Vocabulary,
    alphabet: BaseAlphabet,
    width: usize,
    relation: Relation,
}

impl ClassAutomaton {
    /// `transitions` read columns of layers with arities `(1, a₁, …, a_ρ)`.
    pub fn new(
        vocabulary: Vocabulary,
        alphabet: BaseAlphabet,
        width: usize,
        states: usize,
        initial: impl IntoIterator<Item = StateId>,
        finals: impl IntoIterator<Item = StateId>,
        transitions: Vec<(StateId, Vec<LayerId>, StateId)>,
    ) -> Result<Self> {
        let arities = vocabulary.track_arities();
        let mut used: Vec<BTreeSet<LayerId>> = vec![BTreeSet::new(); arities.len()];
        for (_, column, _) in &transitions {
            if column.len() != arities.len() {
                return Err(Error::invalid(format!(
                    "transition reads {} layers, the vocabulary needs {}",
                    column.len(),
                    arities.len()
                )));
            }
            for (i, id) in column.iter().enumerate() {
                used[i].insert(*id);
            }
        }
        let support = Support::new(vocabulary.clone(), alphabet.clone(), width, used)?;
        let transitions = transitions.into_iter().map(|(p, column, q)| {
            (p, column.into_iter().map(TrackSym::Layer).collect::<Column>(), q)
        });
        let nfa = Nfa::from_parts(support.layer_tracks(), states, initial, finals, transitions)?;
        Ok(ClassAutomaton {
            vocabulary,
            alphabet,
            width,
            relation: Relation::from_nfa(nfa),
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn alphabet(&self) -> &BaseAlphabet {
        &self.alphabet
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    pub fn nfa(&self) -> &Nfa<Column, Tracks> {
        self.relation.nfa()
    }

    pub fn accepts(&self, s: &[Column]) -> bool {
        self.relation.accepts(s)
    }

    pub fn accepts_tuple(&self, t: &StructuralTuple) -> bool {
        self.accepts(&tuple_to_string(t))
    }

    /// Layers of every track, each in a fixed order.
    pub fn layers(&self) -> Vec<Vec<LayerId>> {
        self.relation
            .tracks()
            .specs()
            .iter()
            .map(|spec| match spec {
                TrackSpec::Layers(l) => l.layers.iter().copied().collect(),
                TrackSpec::Word(_) => Vec::new(),
            })
            .collect()
    }
}

/// Re-encodes every ODD of `t` over `{0,1}`, with the common width bound
/// `w²·|Σ|^max(1, max aᵢ)`.
pub fn binarize_structural(t: &StructuralTuple, encoding: &BinaryEncoding) -> Result<StructuralTuple> {
    let w = t.width_bound();
    let max_arity = t.odds().iter().map(Odd::arity).max().unwrap_or(1).max(1);
    let width = w * w * t.alphabet().len().pow(max_arity as u32);
    let odds = t
        .odds()
        .iter()
        .map(|d| d.binarize_to_width(encoding, width))
        .collect::<Result<Vec<_>>>()?;
    Ok(StructuralTuple::new(t.vocabulary().clone(), odds)?)
}

struct HypercubeLayers {
    domain: BTreeMap<&'static str, Layer>,
    edges: BTreeMap<&'static str, Layer>,
}

fn hypercube_layers() -> HypercubeLayers {
    let bits = BaseAlphabet::binary();
    let [zero, one] = [bits.symbols()[0], bits.symbols()[1]];
    let s = |b| PaddedSymbol::Sym(b);
    let single = |b| TupleSymbol::single(b);
    let pair = |a, b| TupleSymbol::new([s(a), s(b)]).expect("arity 2");
    let set = |xs: &[u32]| xs.iter().copied().collect::<BTreeSet<u32>>();

    let domain_layer = |init: bool, fin: bool| {
        let mut l = Layer::empty(1, 2, set(&[0]), set(&[0]));
        l.transitions = [(0, single(zero), 0), (0, single(one), 0)].into();
        l.init_flag = init;
        l.final_flag = fin;
        if init {
            l.initial = set(&[0]);
        }
        if fin {
            l.finals = set(&[0]);
        }
        l
    };
    // State 0: the two strings agree so far; state 1: exactly one difference.
    let edge_layer = |init: bool, fin: bool| {
        let left = if init { set(&[0]) } else { set(&[0, 1]) };
        let mut l = Layer::empty(2, 2, left, set(&[0, 1]));
        l.transitions = [
            (0, pair(zero, zero), 0),
            (0, pair(one, one), 0),
            (0, pair(zero, one), 1),
            (0, pair(one, zero), 1),
        ]
        .into();
        if !init {
            l.transitions.insert((1, pair(zero, zero), 1));
            l.transitions.insert((1, pair(one, one), 1));
        }
        l.init_flag = init;
        l.final_flag = fin;
        if init {
            l.initial = set(&[0]);
        }
        if fin {
            l.finals = set(&[1]);
        }
        l
    };
    let table = |f: &dyn Fn(bool, bool) -> Layer| {
        [
            ("first", f(true, false)),
            ("middle", f(false, false)),
            ("last", f(false, true)),
            ("single", f(true, true)),
        ]
        .into_iter()
        .collect()
    };
    HypercubeLayers {
        domain: table(&domain_layer),
        edges: table(&edge_layer),
    }
}

pub fn hypercube_vocabulary() -> Vocabulary {
    Vocabulary::new([("E".to_string(), 2)]).expect("valid vocabulary")
}

/// The `k`-dimensional hypercube: all `k`-bit strings, with ordered pairs
/// differing in exactly one position as edges.
pub fn hypercube_tuple(k: usize) -> Result<StructuralTuple> {
    if k < 1 {
        return Err(Error::invalid("hypercube dimension must be at least 1"));
    }
    let layers = hypercube_layers();
    let names: Vec<&str> = if k == 1 {
        vec!["single"]
    } else {
        std::iter::once("first")
            .chain(std::iter::repeat_n("middle", k - 2))
            .chain(["last"])
            .collect()
    };
    let bits = BaseAlphabet::binary();
    let d0 = Odd::new(bits.clone(), 1, 2, names.iter().map(|n| layers.domain[n].clone()).collect())?;
    let d1 = Odd::new(bits, 2, 2, names.iter().map(|n| layers.edges[n].clone()).collect())?;
    Ok(StructuralTuple::new(hypercube_vocabulary(), vec![d0, d1])?)
}

/// Accepts exactly the layer strings of the hypercube tuples, one per length.
pub fn hypercube_class() -> ClassAutomaton {
    let layers = hypercube_layers();
    let column = |n: &str| vec![LayerId::of(layers.domain[n].clone()), LayerId::of(layers.edges[n].clone())];
    let transitions = vec![
        (0, column("first"), 1),
        (1, column("middle"), 1),
        (1, column("last"), 2),
        (0, column("single"), 2),
    ];
    ClassAutomaton::new(hypercube_vocabulary(), BaseAlphabet::binary(), 2, 3, [0], [2], transitions)
        .expect("valid class automaton")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{chars_word, tensor_strings};
    use crate::relations::{tuple_track, word_track};

    fn bits(text: &str) -> Vec<TrackSym> {
        word_track(&chars_word(text).unwrap())
    }

    fn d_string(odd: &Odd) -> Vec<TrackSym> {
        odd.layer_ids().iter().map(|&id| TrackSym::Layer(id)).collect()
    }

    #[test]
    fn hypercube_shapes() {
        let t = hypercube_tuple(5).unwrap();
        assert_eq!(t.len(), 5);
        assert!(hypercube_tuple(0).is_err());
        let class = hypercube_class();
        assert!(class.accepts_tuple(&t));
        assert!(class.accepts_tuple(&hypercube_tuple(1).unwrap()));
        let strings = class.nfa().enumerate(5, 1_000_000).unwrap();
        assert_eq!(strings.iter().filter(|s| s.len() == 5).count(), 1);
    }

    #[test]
    fn string_round_trip() {
        let t = hypercube_tuple(4).unwrap();
        let s = tuple_to_string(&t);
        let back = string_to_tuple(t.vocabulary(), t.alphabet(), 2, &s).unwrap();
        assert_eq!(back, t);
        let mut broken = s.clone();
        broken.swap(0, 1);
        assert!(string_to_tuple(t.vocabulary(), t.alphabet(), 2, &broken).is_err());
    }

    #[test]
    fn universe_recognizes_valid_odds() {
        let t = hypercube_tuple(3).unwrap();
        let support = Support::of_tuple(&t);
        let u = universe_odds(&support.tracks[0]);
        assert!(u.contains(&[d_string(t.domain())]));
        let mut s = d_string(t.domain());
        s.reverse();
        assert!(!u.contains(&[s]));
    }

    #[test]
    fn membership_matches_odd_acceptance() {
        let t = hypercube_tuple(5).unwrap();
        let support = Support::of_tuple(&t);
        let r = membership_rel(&support.tracks[1]);
        let d1 = d_string(&t.odds()[1]);
        let edge = tensor_strings(&[chars_word("00000").unwrap(), chars_word("00001").unwrap()]).unwrap();
        let loop_ = tensor_strings(&[chars_word("00000").unwrap(), chars_word("00000").unwrap()]).unwrap();
        assert!(r.contains(&[d1.clone(), tuple_track(&edge).unwrap()]));
        assert!(!r.contains(&[d1, tuple_track(&loop_).unwrap()]));
    }

    #[test]
    fn bounded_and_non_membership() {
        let t = hypercube_tuple(2).unwrap();
        let support = Support::of_tuple(&t);
        let d0 = &support.tracks[0];
        let word = WordTrack {
            alphabet: BaseAlphabet::binary(),
            arity: 1,
        };
        let bounded = bounded_rel(d0, &[word.clone(), word]);
        let d = d_string(t.domain());
        assert!(bounded.contains(&[d.clone(), bits("1"), bits("01")]));
        assert!(!bounded.contains(&[d.clone(), bits("1"), bits("011")]));
        let outside = non_membership(d0, 2).unwrap();
        assert!(outside.contains(&[d.clone(), bits("1"), bits("01")]));
        assert!(!outside.contains(&[d.clone(), bits("10"), bits("01")]));
        assert_eq!(
            multi_membership(d0, 1).unwrap().enumerate_tuples(2).unwrap(),
            membership_rel(d0).enumerate_tuples(2).unwrap()
        );
        assert!(multi_membership(d0, 0).is_err());
    }

    #[test]
    fn subset_relation_on_the_hypercube() {
        let t = hypercube_tuple(3).unwrap();
        let support = Support::of_tuple(&t);
        let r = subset_rel(&support.tracks[0], &support.tracks[1]).unwrap();
        assert!(r.contains(&[d_string(t.domain()), d_string(&t.odds()[1])]));
    }

    #[test]
    fn structural_universe_on_the_hypercube() {
        let t = hypercube_tuple(3).unwrap();
        let support = Support::of_tuple(&t);
        let u0 = structural_universe(&support, 0).unwrap();
        assert!(u0.accepts(&tuple_to_string(&t)));
        let u1 = structural_universe(&support, 1).unwrap();
        let d0 = d_string(t.domain());
        let d1 = d_string(&t.odds()[1]);
        assert!(u1.contains(&[d0.clone(), d1.clone(), bits("010")]));
        assert!(!u1.contains(&[d0, d1, bits("01")]));
    }

    #[test]
    fn inclusion_violation_is_detected() {
        let t = hypercube_tuple(2).unwrap();
        let bits2 = BaseAlphabet::binary();
        // Domain {00, 01}; the relation mentions 11.
        let [zero, one] = [bits2.symbols()[0], bits2.symbols()[1]];
        let mut first = (*t.domain().layer(0)).clone();
        first.transitions.remove(&(0, TupleSymbol::single(one), 0));
        let last = (*t.domain().layer(1)).clone();
        let d0 = Odd::new(bits2.clone(), 1, 2, vec![first, last]).unwrap();
        let pair = |a, b| TupleSymbol::new([PaddedSymbol::Sym(a), PaddedSymbol::Sym(b)]).unwrap();
        let mut a = Layer::empty(2, 2, [0].into(), [0].into());
        a.init_flag = true;
        a.initial = [0].into();
        a.transitions.insert((0, pair(zero, one), 0));
        let mut b = Layer::empty(2, 2, [0].into(), [0].into());
        b.final_flag = true;
        b.finals = [0].into();
        b.transitions.insert((0, pair(zero, one), 0));
        let d1 = Odd::new(bits2, 2, 2, vec![a, b]).unwrap();
        let err = StructuralTuple::new(hypercube_vocabulary(), vec![d0, d1]).unwrap_err();
        assert_eq!(err, StructuralError::NotContainedInDomain { index: 1 });
    }
}

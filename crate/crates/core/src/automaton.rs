//! Finite automata over an explicit finite support.
//!
//! Every automaton carries a support set describing which symbols it may
//! read. Complements are only ever taken relative to a support, so supports
//! can be astronomically large: they are never enumerated, only queried.
//! Languages never contain the empty string.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use smallvec::SmallVec;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

pub type StateId = usize;

pub trait Symbol: Clone + Eq + Hash + Ord + Debug + Send + Sync {}
impl<T: Clone + Eq + Hash + Ord + Debug + Send + Sync> Symbol for T {}

/// A finite set of symbols that can be queried without enumeration.
pub trait SymbolSet<S>: Clone + Debug + PartialEq + Send + Sync {
    fn contains(&self, symbol: &S) -> bool;
    fn size(&self) -> BigUint;
    fn union(&self, other: &Self) -> Self;
    fn intersection(&self, other: &Self) -> Self;
    fn is_subset(&self, other: &Self) -> bool;
}

impl<S: Symbol> SymbolSet<S> for BTreeSet<S> {
    fn contains(&self, symbol: &S) -> bool {
        BTreeSet::contains(self, symbol)
    }

    fn size(&self) -> BigUint {
        BigUint::from(self.len())
    }

    fn union(&self, other: &Self) -> Self {
        self | other
    }

    fn intersection(&self, other: &Self) -> Self {
        self & other
    }

    fn is_subset(&self, other: &Self) -> bool {
        BTreeSet::is_subset(self, other)
    }
}

type Index<K> = Vec<HashMap<K, SmallVec<[StateId; 2]>>>;

#[derive(Clone, Debug)]
pub struct Nfa<S, A = BTreeSet<S>> {
    support: A,
    edges: Vec<Vec<(S, StateId)>>,
    initial: Vec<StateId>,
    finals: Vec<bool>,
}

impl<S: Symbol, A: SymbolSet<S>> Nfa<S, A> {
    /// An automaton with no states (the empty language).
    pub fn new(support: A) -> Self {
        Nfa {
            support,
            edges: Vec::new(),
            initial: Vec::new(),
            finals: Vec::new(),
        }
    }

    /// Builds an automaton from explicit parts, checking every invariant.
    pub fn from_parts(
        support: A,
        states: usize,
        initial: impl IntoIterator<Item = StateId>,
        finals: impl IntoIterator<Item = StateId>,
        transitions: impl IntoIterator<Item = (StateId, S, StateId)>,
    ) -> Result<Self> {
        let mut nfa = Nfa::new(support);
        for _ in 0..states {
            nfa.add_state(false);
        }
        for q in initial {
            if q >= states {
                return Err(Error::invalid(format!("initial state {q} is not declared")));
            }
            nfa.add_initial(q);
        }
        for q in finals {
            if q >= states {
                return Err(Error::invalid(format!("final state {q} is not declared")));
            }
            nfa.set_final(q, true);
        }
        for (p, s, q) in transitions {
            if p >= states || q >= states {
                return Err(Error::invalid(format!(
                    "transition ({p}, {s:?}, {q}) references an undeclared state"
                )));
            }
            if !nfa.support.contains(&s) {
                return Err(Error::invalid(format!("symbol {s:?} is outside the support")));
            }
            nfa.add_transition(p, s, q);
        }
        nfa.normalize();
        Ok(nfa)
    }

    pub fn add_state(&mut self, is_final: bool) -> StateId {
        self.edges.push(Vec::new());
        self.finals.push(is_final);
        self.edges.len() - 1
    }

    pub fn add_initial(&mut self, q: StateId) {
        if !self.initial.contains(&q) {
            self.initial.push(q);
            self.initial.sort_unstable();
        }
    }

    pub fn set_final(&mut self, q: StateId, is_final: bool) {
        self.finals[q] = is_final;
    }

    pub fn add_transition(&mut self, p: StateId, symbol: S, q: StateId) {
        debug_assert!(self.support.contains(&symbol), "{symbol:?} outside support");
        self.edges[p].push((symbol, q));
    }

    /// Sorts and deduplicates the outgoing edges of every state.
    pub fn normalize(&mut self) {
        for out in &mut self.edges {
            out.sort();
            out.dedup();
        }
    }

    pub fn support(&self) -> &A {
        &self.support
    }

    pub fn with_support(mut self, support: A) -> Self {
        self.support = support;
        self
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q]
    }

    pub fn edges(&self, q: StateId) -> &[(S, StateId)] {
        &self.edges[q]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, &S, StateId)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(p, out)| out.iter().map(move |(s, q)| (p, s, *q)))
    }

    /// Whether some accepting sequence reads `word`. The empty word is never accepted.
    pub fn accepts(&self, word: &[S]) -> bool {
        if word.is_empty() || word.iter().any(|s| !self.support.contains(s)) {
            return false;
        }
        let mut current: BTreeSet<StateId> = self.initial.iter().copied().collect();
        for s in word {
            let next: BTreeSet<StateId> = current
                .iter()
                .flat_map(|&p| self.edges[p].iter().filter(|(t, _)| t == s).map(|&(_, q)| q))
                .collect();
            if next.is_empty() {
                return false;
            }
            current = next;
        }
        current.iter().any(|&q| self.finals[q])
    }

    pub(crate) fn index_by<K: Hash + Eq>(&self, key: impl Fn(&S) -> K) -> Index<K> {
        self.edges
            .iter()
            .map(|out| {
                let mut map: HashMap<K, SmallVec<[StateId; 2]>> = HashMap::new();
                for (s, q) in out {
                    let targets = map.entry(key(s)).or_default();
                    if !targets.contains(q) {
                        targets.push(*q);
                    }
                }
                map
            })
            .collect()
    }

    /// Reachable synchronous product. A pair of edges is combined when their
    /// keys agree and `combine` accepts the pair; a product state is final
    /// when both components are.
    pub fn product<S2, A2, T, B, K>(
        &self,
        other: &Nfa<S2, A2>,
        support: B,
        key_a: impl Fn(&S) -> K,
        key_b: impl Fn(&S2) -> K,
        combine: impl Fn(&S, &S2) -> Option<T>,
    ) -> Nfa<T, B>
    where
        S2: Symbol,
        A2: SymbolSet<S2>,
        T: Symbol,
        B: SymbolSet<T>,
        K: Hash + Eq,
    {
        let index: Vec<HashMap<K, SmallVec<[usize; 4]>>> = other
            .edges
            .iter()
            .map(|out| {
                let mut map: HashMap<K, SmallVec<[usize; 4]>> = HashMap::new();
                for (i, (y, _)) in out.iter().enumerate() {
                    map.entry(key_b(y)).or_default().push(i);
                }
                map
            })
            .collect();
        let mut out = Nfa::new(support);
        let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        for &p in &self.initial {
            for &q in &other.initial {
                let id = out.add_state(self.finals[p] && other.finals[q]);
                ids.insert((p, q), id);
                out.add_initial(id);
                queue.push_back((p, q));
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            let from = ids[&(p, q)];
            for (x, p2) in &self.edges[p] {
                let Some(matches) = index[q].get(&key_a(x)) else {
                    continue;
                };
                for &i in matches {
                    let (y, q2) = &other.edges[q][i];
                    let Some(z) = combine(x, y) else { continue };
                    let to = *ids.entry((*p2, *q2)).or_insert_with(|| {
                        queue.push_back((*p2, *q2));
                        out.add_state(self.finals[*p2] && other.finals[*q2])
                    });
                    out.add_transition(from, z, to);
                }
            }
        }
        out.normalize();
        out
    }

    /// Language intersection over the intersected support.
    pub fn intersect(&self, other: &Self) -> Self {
        let support = self.support.intersection(&other.support);
        self.product(other, support, S::clone, S::clone, |x, _| Some(x.clone()))
    }

    /// Language union (disjoint union of the state spaces).
    pub fn union(&self, other: &Self) -> Self {
        let mut out = Nfa::new(self.support.union(&other.support));
        let offset = self.num_states();
        for (a, shift) in [(self, 0), (other, offset)] {
            for q in 0..a.num_states() {
                out.add_state(a.finals[q]);
            }
            for &q in &a.initial {
                out.add_initial(q + shift);
            }
            for (p, s, q) in a.transitions() {
                out.add_transition(p + shift, s.clone(), q + shift);
            }
        }
        out.normalize();
        out
    }

    /// Relabels every transition; `None` deletes it.
    pub fn map_symbols<T: Symbol, B: SymbolSet<T>>(
        &self,
        support: B,
        f: impl Fn(&S) -> Option<T>,
    ) -> Nfa<T, B> {
        let mut out = Nfa::new(support);
        for q in 0..self.num_states() {
            out.add_state(self.finals[q]);
        }
        for &q in &self.initial {
            out.add_initial(q);
        }
        for (p, s, q) in self.transitions() {
            if let Some(t) = f(s) {
                out.add_transition(p, t, q);
            }
        }
        out.normalize();
        out
    }

    pub fn determinize(&self) -> Dfa<S, A> {
        let mut det = Determinizer::new(self);
        let start = det.initial();
        let mut ids: HashMap<usize, StateId> = HashMap::new();
        let mut next: Vec<HashMap<S, StateId>> = Vec::new();
        let mut finals = Vec::new();
        // The sink is always state 0.
        ids.insert(Determinizer::<S, A>::SINK, 0);
        next.push(HashMap::new());
        finals.push(false);
        let mut queue = VecDeque::new();
        let initial = *ids.entry(start).or_insert_with(|| {
            next.push(HashMap::new());
            finals.push(det.is_accepting(start));
            queue.push_back(start);
            next.len() - 1
        });
        while let Some(subset) = queue.pop_front() {
            let from = ids[&subset];
            let symbols: BTreeSet<S> = det
                .members(subset)
                .iter()
                .flat_map(|&p| self.edges[p].iter().map(|(s, _)| s.clone()))
                .collect();
            for s in symbols {
                let target = det.step(subset, &s);
                if target == Determinizer::<S, A>::SINK {
                    continue;
                }
                let to = *ids.entry(target).or_insert_with(|| {
                    next.push(HashMap::new());
                    finals.push(det.is_accepting(target));
                    queue.push_back(target);
                    next.len() - 1
                });
                next[from].insert(s, to);
            }
        }
        Dfa {
            support: self.support.clone(),
            next,
            finals,
            initial,
            sink: 0,
        }
    }

    /// `L(self) \ L(other)`, the complement of `other` taken over the support of `self`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if !other.support.is_subset(&self.support) {
            return Err(Error::invalid(
                "difference: the subtracted automaton reads symbols outside the universe support",
            ));
        }
        let mut det = Determinizer::new(other);
        let start = det.initial();
        let mut out = Nfa::new(self.support.clone());
        let mut ids: HashMap<(StateId, usize), StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        for &u in &self.initial {
            let id = out.add_state(self.finals[u] && !det.is_accepting(start));
            ids.insert((u, start), id);
            out.add_initial(id);
            queue.push_back((u, start));
        }
        while let Some((u, d)) = queue.pop_front() {
            let from = ids[&(u, d)];
            for (s, u2) in &self.edges[u] {
                let d2 = det.step(d, s);
                let to = match ids.get(&(*u2, d2)) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state(self.finals[*u2] && !det.is_accepting(d2));
                        ids.insert((*u2, d2), id);
                        queue.push_back((*u2, d2));
                        id
                    }
                };
                out.add_transition(from, s.clone(), to);
            }
        }
        out.normalize();
        Ok(out)
    }

    fn reverse_edges(&self) -> Vec<Vec<StateId>> {
        let mut rev = vec![Vec::new(); self.num_states()];
        for (p, _, q) in self.transitions() {
            rev[q].push(p);
        }
        rev
    }

    /// Length of the shortest path from each state to a final state.
    fn distance_to_final(&self) -> Vec<usize> {
        let rev = self.reverse_edges();
        let mut dist = vec![usize::MAX; self.num_states()];
        let mut queue = VecDeque::new();
        for q in 0..self.num_states() {
            if self.finals[q] {
                dist[q] = 0;
                queue.push_back(q);
            }
        }
        while let Some(q) = queue.pop_front() {
            for &p in &rev[q] {
                if dist[p] == usize::MAX {
                    dist[p] = dist[q] + 1;
                    queue.push_back(p);
                }
            }
        }
        dist
    }

    /// A shortest accepted word, choosing the smallest symbol at every position.
    pub fn shortest_witness(&self) -> Option<Vec<S>> {
        let dist = self.distance_to_final();
        let best = self
            .initial
            .iter()
            .flat_map(|&p| self.edges[p].iter())
            .filter(|(_, q)| dist[*q] != usize::MAX)
            .map(|(_, q)| dist[*q] + 1)
            .min()?;
        let mut current: BTreeSet<StateId> = self.initial.iter().copied().collect();
        let mut word = Vec::with_capacity(best);
        for remaining in (0..best).rev() {
            let symbol = current
                .iter()
                .flat_map(|&p| self.edges[p].iter())
                .filter(|(_, q)| dist[*q] == remaining)
                .map(|(s, _)| s)
                .min()?
                .clone();
            current = current
                .iter()
                .flat_map(|&p| self.edges[p].iter())
                .filter(|(s, q)| *s == symbol && dist[*q] == remaining)
                .map(|&(_, q)| q)
                .collect();
            word.push(symbol);
        }
        Some(word)
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_witness().is_none()
    }

    /// Every accepted word of length at most `max_len`.
    ///
    /// `limit` bounds the number of visited prefixes.
    pub fn enumerate(&self, max_len: usize, limit: usize) -> Result<BTreeSet<Vec<S>>> {
        let dist = self.distance_to_final();
        let mut out = BTreeSet::new();
        let mut visited = 0usize;
        let mut stack: Vec<(Vec<S>, BTreeSet<StateId>)> =
            vec![(Vec::new(), self.initial.iter().copied().collect())];
        while let Some((prefix, states)) = stack.pop() {
            visited += 1;
            if visited > limit {
                return Err(Error::ResourceLimit(format!(
                    "language enumeration visited more than {limit} prefixes"
                )));
            }
            if !prefix.is_empty() && states.iter().any(|&q| self.finals[q]) {
                out.insert(prefix.clone());
            }
            if prefix.len() == max_len {
                continue;
            }
            let budget = max_len - prefix.len() - 1;
            let mut next: BTreeMap<&S, BTreeSet<StateId>> = BTreeMap::new();
            for &p in &states {
                for (s, q) in &self.edges[p] {
                    if dist[*q] <= budget {
                        next.entry(s).or_default().insert(*q);
                    }
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

    /// Removes states that are unreachable or cannot reach a final state.
    pub fn trim(&self) -> Self {
        let n = self.num_states();
        let mut reach = vec![false; n];
        let mut stack: Vec<StateId> = self.initial.clone();
        for &q in &stack {
            reach[q] = true;
        }
        while let Some(p) = stack.pop() {
            for &(_, q) in &self.edges[p] {
                if !reach[q] {
                    reach[q] = true;
                    stack.push(q);
                }
            }
        }
        let dist = self.distance_to_final();
        let keep: Vec<bool> = (0..n).map(|q| reach[q] && dist[q] != usize::MAX).collect();
        let mut rename = vec![usize::MAX; n];
        let mut out = Nfa::new(self.support.clone());
        for q in 0..n {
            if keep[q] {
                rename[q] = out.add_state(self.finals[q]);
            }
        }
        for &q in &self.initial {
            if keep[q] {
                out.add_initial(rename[q]);
            }
        }
        for (p, s, q) in self.transitions() {
            if keep[p] && keep[q] {
                out.add_transition(rename[p], s.clone(), rename[q]);
            }
        }
        out.normalize();
        out
    }

    /// Trims and merges bisimilar states. The language is unchanged.
    pub fn reduce(&self) -> Self {
        let trimmed = self.trim();
        let n = trimmed.num_states();
        if n == 0 {
            return trimmed;
        }
        let mut block: Vec<usize> = trimmed.finals.iter().map(|&f| usize::from(f)).collect();
        let mut count = block.iter().collect::<BTreeSet<_>>().len();
        loop {
            let mut ids: HashMap<(usize, Vec<(&S, usize)>), usize> = HashMap::new();
            let mut next = Vec::with_capacity(n);
            for q in 0..n {
                let mut signature: Vec<(&S, usize)> =
                    trimmed.edges[q].iter().map(|(s, t)| (s, block[*t])).collect();
                signature.sort();
                signature.dedup();
                let fresh = ids.len();
                next.push(*ids.entry((block[q], signature)).or_insert(fresh));
            }
            let new_count = ids.len();
            block = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        let mut out = Nfa::new(trimmed.support.clone());
        for _ in 0..count {
            out.add_state(false);
        }
        for q in 0..n {
            if trimmed.finals[q] {
                out.set_final(block[q], true);
            }
        }
        for &q in &trimmed.initial {
            out.add_initial(block[q]);
        }
        for (p, s, q) in trimmed.transitions() {
            out.add_transition(block[p], s.clone(), block[q]);
        }
        out.normalize();
        out
    }
}

/// Lazy subset construction, shared by determinization, difference and counting.
pub struct Determinizer<'a, S, A> {
    nfa: &'a Nfa<S, A>,
    index: Index<S>,
    ids: HashMap<Vec<StateId>, usize>,
    sets: Vec<Vec<StateId>>,
    accepting: Vec<bool>,
    memo: HashMap<(usize, S), usize>,
}

impl<'a, S: Symbol, A: SymbolSet<S>> Determinizer<'a, S, A> {
    /// The empty subset.
    pub const SINK: usize = 0;

    pub fn new(nfa: &'a Nfa<S, A>) -> Self {
        let mut det = Determinizer {
            nfa,
            index: nfa.index_by(S::clone),
            ids: HashMap::new(),
            sets: Vec::new(),
            accepting: Vec::new(),
            memo: HashMap::new(),
        };
        det.intern(Vec::new());
        det
    }

    fn intern(&mut self, set: Vec<StateId>) -> usize {
        if let Some(&id) = self.ids.get(&set) {
            return id;
        }
        let id = self.sets.len();
        self.accepting.push(set.iter().any(|&q| self.nfa.finals[q]));
        self.sets.push(set.clone());
        self.ids.insert(set, id);
        id
    }

    pub fn initial(&mut self) -> usize {
        let set = self.nfa.initial.clone();
        self.intern(set)
    }

    pub fn step(&mut self, subset: usize, symbol: &S) -> usize {
        if subset == Self::SINK {
            return Self::SINK;
        }
        if let Some(&id) = self.memo.get(&(subset, symbol.clone())) {
            return id;
        }
        let mut target: Vec<StateId> = self.sets[subset]
            .iter()
            .filter_map(|&p| self.index[p].get(symbol))
            .flatten()
            .copied()
            .collect();
        target.sort_unstable();
        target.dedup();
        let id = self.intern(target);
        self.memo.insert((subset, symbol.clone()), id);
        id
    }

    pub fn is_accepting(&self, subset: usize) -> bool {
        self.accepting[subset]
    }

    pub fn members(&self, subset: usize) -> &[StateId] {
        &self.sets[subset]
    }

    pub fn num_subsets(&self) -> usize {
        self.sets.len()
    }
}

/// A deterministic automaton, total over its support through an explicit sink.
#[derive(Clone, Debug)]
pub struct Dfa<S, A = BTreeSet<S>> {
    support: A,
    next: Vec<HashMap<S, StateId>>,
    finals: Vec<bool>,
    initial: StateId,
    sink: StateId,
}

impl<S: Symbol, A: SymbolSet<S>> Dfa<S, A> {
    pub fn support(&self) -> &A {
        &self.support
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn sink(&self) -> StateId {
        self.sink
    }

    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q]
    }

    /// Explicit edges of `q`; every other support symbol leads to the sink.
    pub fn explicit_edges(&self, q: StateId) -> &HashMap<S, StateId> {
        &self.next[q]
    }

    /// The unique successor, or `None` for symbols outside the support.
    pub fn step(&self, q: StateId, symbol: &S) -> Option<StateId> {
        if !self.support.contains(symbol) {
            return None;
        }
        Some(self.next[q].get(symbol).copied().unwrap_or(self.sink))
    }

    pub fn accepts(&self, word: &[S]) -> bool {
        if word.is_empty() {
            return false;
        }
        let mut q = self.initial;
        for s in word {
            match self.step(q, s) {
                Some(next) => q = next,
                None => return false,
            }
        }
        self.finals[q]
    }

    /// Complement relative to the support.
    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.finals {
            *f = !*f;
        }
        out
    }

    /// States from which a final state is reachable.
    pub fn live_states(&self) -> Vec<StateId> {
        let n = self.num_states();
        let mut live: Vec<bool> = self.finals.clone();
        let sink_final = self.finals[self.sink];
        let size_positive = self.support.size() > BigUint::from(0u32);
        let mut changed = true;
        while changed {
            changed = false;
            for q in 0..n {
                if live[q] {
                    continue;
                }
                let implicit = sink_final
                    && size_positive
                    && BigUint::from(self.next[q].len()) < self.support.size();
                if implicit || self.next[q].values().any(|&t| live[t]) {
                    live[q] = true;
                    changed = true;
                }
            }
        }
        (0..n).filter(|&q| live[q]).collect()
    }

    /// `|L(self) ∩ support^len|`, by dynamic programming over levels.
    pub fn count_exact_length(&self, len: usize) -> BigUint {
        if len == 0 {
            return BigUint::from(0u32);
        }
        let n = self.num_states();
        let size = self.support.size();
        let mut counts = vec![BigUint::from(0u32); n];
        counts[self.initial] = BigUint::from(1u32);
        for _ in 0..len {
            let mut next = vec![BigUint::from(0u32); n];
            for q in 0..n {
                if counts[q] == BigUint::from(0u32) {
                    continue;
                }
                for &t in self.next[q].values() {
                    next[t] += &counts[q];
                }
                let implicit = &size - BigUint::from(self.next[q].len());
                if implicit > BigUint::from(0u32) {
                    next[self.sink] += &counts[q] * implicit;
                }
            }
            counts = next;
        }
        (0..n)
            .filter(|&q| self.finals[q])
            .map(|q| counts[q].clone())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn support(symbols: &str) -> BTreeSet<char> {
        symbols.chars().collect()
    }

    fn nfa(
        symbols: &str,
        states: usize,
        initial: &[StateId],
        finals: &[StateId],
        transitions: &[(StateId, char, StateId)],
    ) -> Nfa<char> {
        Nfa::from_parts(
            support(symbols),
            states,
            initial.iter().copied(),
            finals.iter().copied(),
            transitions.iter().copied(),
        )
        .unwrap()
    }

    fn all_words(symbols: &[char], max_len: usize) -> Vec<Vec<char>> {
        let mut out = Vec::new();
        let mut layer: Vec<Vec<char>> = vec![Vec::new()];
        for _ in 0..max_len {
            layer = layer
                .iter()
                .flat_map(|w| {
                    symbols.iter().map(move |&c| {
                        let mut next = w.clone();
                        next.push(c);
                        next
                    })
                })
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    fn language(a: &Nfa<char>, max_len: usize) -> BTreeSet<Vec<char>> {
        let symbols: Vec<char> = a.support().iter().copied().collect();
        all_words(&symbols, max_len)
            .into_iter()
            .filter(|w| a.accepts(w))
            .collect()
    }

    fn ends_in_b() -> Nfa<char> {
        nfa("ab", 2, &[0], &[1], &[(0, 'a', 0), (0, 'b', 0), (0, 'b', 1)])
    }

    #[test]
    fn universal_loop_accepts_everything() {
        let a = nfa("s", 1, &[0], &[0], &[(0, 's', 0)]);
        assert!(a.accepts(&['s', 's', 's']));
        assert!(!a.accepts(&[]));
        assert!(!a.accepts(&['t']));
    }

    #[test]
    fn unreachable_finals_reject_everything() {
        let a = nfa("ab", 2, &[0], &[1], &[(0, 'a', 0)]);
        assert!(language(&a, 5).is_empty());
        assert!(a.is_empty());
        assert_eq!(a.shortest_witness(), None);
    }

    #[test]
    fn witness_excludes_the_empty_word() {
        let a = nfa("ab", 2, &[0], &[0], &[(0, 'b', 1), (1, 'a', 0), (0, 'a', 1)]);
        assert_eq!(a.shortest_witness(), Some(vec!['a', 'a']));
    }

    #[test]
    fn witness_prefers_small_symbols() {
        let a = nfa("abc", 3, &[0], &[2], &[(0, 'c', 1), (0, 'b', 1), (1, 'c', 2), (0, 'a', 0)]);
        assert_eq!(a.shortest_witness(), Some(vec!['b', 'c']));
    }

    #[test]
    fn intersection_identities() {
        let a = ends_in_b();
        assert_eq!(language(&a.intersect(&a), 6), language(&a, 6));
        let empty: Nfa<char> = Nfa::new(support("ab"));
        assert!(a.intersect(&empty).is_empty());
        assert_eq!(language(&a.union(&a), 6), language(&a, 6));
        assert_eq!(language(&a.union(&empty), 6), language(&a, 6));
    }

    #[test]
    fn determinize_ends_in_b() {
        let a = ends_in_b();
        let d = a.determinize();
        let live = d.live_states();
        assert_eq!(live.len(), 2);
        for w in all_words(&['a', 'b'], 8) {
            assert_eq!(d.accepts(&w), a.accepts(&w), "{w:?}");
        }
    }

    #[test]
    fn determinize_empty_language() {
        let a = nfa("ab", 1, &[0], &[], &[(0, 'a', 0)]);
        let d = a.determinize();
        assert!(d.live_states().is_empty());
        assert_eq!(d.count_exact_length(4), BigUint::from(0u32));
    }

    #[test]
    fn determinize_deterministic_input() {
        let a = nfa("ab", 2, &[0], &[1], &[(0, 'a', 1), (1, 'b', 0)]);
        let d = a.determinize();
        for w in all_words(&['a', 'b'], 6) {
            assert_eq!(d.accepts(&w), a.accepts(&w));
        }
    }

    #[test]
    fn difference_identities() {
        let u = ends_in_b();
        assert!(u.difference(&u).unwrap().is_empty());
        let empty: Nfa<char> = Nfa::new(support("ab"));
        assert_eq!(language(&u.difference(&empty).unwrap(), 6), language(&u, 6));
    }

    #[test]
    fn difference_checks_support() {
        let u = ends_in_b();
        let wider = nfa("abc", 1, &[0], &[0], &[(0, 'c', 0)]);
        assert!(matches!(u.difference(&wider), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn count_universal_dfa() {
        let a = nfa("ab", 1, &[0], &[0], &[(0, 'a', 0), (0, 'b', 0)]);
        assert_eq!(a.determinize().count_exact_length(10), BigUint::from(1024u32));
    }

    #[test]
    fn complemented_empty_dfa_counts_through_the_sink() {
        let a = nfa("ab", 1, &[0], &[], &[]);
        let c = a.determinize().complement();
        assert_eq!(c.count_exact_length(3), BigUint::from(8u32));
    }

    #[test]
    fn trim_and_reduce_keep_language() {
        let a = nfa(
            "ab",
            5,
            &[0, 1],
            &[2, 3],
            &[(0, 'a', 2), (1, 'a', 3), (2, 'b', 2), (3, 'b', 3), (4, 'a', 2)],
        );
        let r = a.reduce();
        assert_eq!(r.num_states(), 2);
        assert_eq!(language(&r, 5), language(&a, 5));
    }

    #[test]
    fn enumerate_respects_limit() {
        let a = nfa("ab", 1, &[0], &[0], &[(0, 'a', 0), (0, 'b', 0)]);
        assert_eq!(a.enumerate(3, 1000).unwrap().len(), 14);
        assert!(matches!(a.enumerate(10, 100), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn from_parts_rejects_bad_input() {
        assert!(Nfa::from_parts(support("a"), 1, [1], [], []).is_err());
        assert!(Nfa::from_parts(support("a"), 1, [0], [], [(0, 'b', 0)]).is_err());
    }

    prop_compose! {
        fn random_nfa(states: usize)
            (edges in proptest::collection::vec((0..states, prop_oneof![Just('a'), Just('b')], 0..states), 0..12),
             initial in proptest::collection::btree_set(0..states, 1..=2),
             finals in proptest::collection::btree_set(0..states, 0..=states))
            -> Nfa<char>
        {
            Nfa::from_parts(support("ab"), states, initial, finals, edges).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn boolean_operations_match_set_semantics(a in random_nfa(4), b in random_nfa(4)) {
            let la = language(&a, 6);
            let lb = language(&b, 6);
            prop_assert_eq!(language(&a.intersect(&b), 6), &la & &lb);
            prop_assert_eq!(language(&a.union(&b), 6), &la | &lb);
            prop_assert_eq!(language(&a.difference(&b).unwrap(), 6), &la - &lb);
            prop_assert_eq!(a.enumerate(6, 1 << 20).unwrap(), la.clone());
            prop_assert_eq!(language(&a.reduce(), 6), la);
        }

        #[test]
        fn determinization_is_total_and_faithful(a in random_nfa(4)) {
            let d = a.determinize();
            for q in 0..d.num_states() {
                for s in ['a', 'b'] {
                    prop_assert!(d.step(q, &s).is_some());
                }
            }
            prop_assert!(d.step(d.initial(), &'z').is_none());
            for w in all_words(&['a', 'b'], 6) {
                prop_assert_eq!(d.accepts(&w), a.accepts(&w));
            }
        }

        #[test]
        fn counting_matches_enumeration(a in random_nfa(5)) {
            let d = a.determinize();
            let language = language(&a, 6);
            for len in 1..=6 {
                let expected = language.iter().filter(|w| w.len() == len).count();
                prop_assert_eq!(d.count_exact_length(len), BigUint::from(expected));
            }
        }

        #[test]
        fn witness_is_shortest(a in random_nfa(4)) {
            let language = language(&a, 8);
            match a.shortest_witness() {
                None => prop_assert!(language.is_empty()),
                Some(w) => {
                    prop_assert!(a.accepts(&w));
                    let shortest = language.iter().map(Vec::len).min().unwrap();
                    prop_assert_eq!(w.len(), shortest);
                    let first = language.iter().filter(|x| x.len() == shortest).min().unwrap();
                    prop_assert_eq!(&w, first);
                }
            }
        }
    }
}

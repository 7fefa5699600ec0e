//! Random instances for differential testing and benchmarks.

use crate::alphabet::{BaseAlphabet, BaseSymbol, PaddedSymbol, TupleSymbol};
use crate::fo::Formula;
use crate::odd::{Layer, Odd};
use crate::relations::{word_track, Tuple};
use crate::structural::{included_in_domain, StructuralTuple, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct OddParams {
    pub alphabet: BaseAlphabet,
    pub arity: usize,
    pub max_width: usize,
    pub max_len: usize,
    /// Probability of each candidate transition.
    pub density: f64,
}

impl OddParams {
    /// Binary alphabet, arity 1, width at most 2, at most 4 layers.
    pub fn small() -> Self {
        OddParams {
            alphabet: BaseAlphabet::binary(),
            arity: 1,
            max_width: 2,
            max_len: 4,
            density: 0.4,
        }
    }
}

fn random_subset<R: Rng>(rng: &mut R, universe: &BTreeSet<u32>, p: f64) -> BTreeSet<u32> {
    universe.iter().copied().filter(|_| rng.gen_bool(p)).collect()
}

/// A valid ODD of random length in `1..=max_len`, width bound `max_width`.
pub fn random_odd<R: Rng>(rng: &mut R, params: &OddParams) -> Odd {
    let len = rng.gen_range(1..=params.max_len);
    random_odd_of_length(rng, params, len)
}

pub fn random_odd_of_length<R: Rng>(rng: &mut R, params: &OddParams, len: usize) -> Odd {
    let w = params.max_width;
    let used = rng.gen_range(1..=w) as u32;
    let all: BTreeSet<u32> = (0..used).collect();
    let frontiers: Vec<BTreeSet<u32>> = (0..=len)
        .map(|_| {
            let f = random_subset(rng, &all, 0.7);
            if f.is_empty() {
                [rng.gen_range(0..used)].into()
            } else {
                f
            }
        })
        .collect();
    let symbols = params.alphabet.padded_tuples(params.arity, true);
    let pad = TupleSymbol::pad(params.arity);
    let layers = (0..len)
        .map(|j| {
            let mut layer = Layer::empty(params.arity, w, frontiers[j].clone(), frontiers[j + 1].clone());
            for &l in &frontiers[j] {
                for symbol in &symbols {
                    // Padding is likelier late, so shorter strings get accepted too.
                    let p = if *symbol == pad {
                        params.density * (j + 1) as f64 / len as f64
                    } else {
                        params.density
                    };
                    for &r in &frontiers[j + 1] {
                        if rng.gen_bool(p.min(1.0)) {
                            layer.transitions.insert((l, symbol.clone(), r));
                        }
                    }
                }
            }
            if j == 0 {
                layer.init_flag = true;
                layer.initial = random_subset(rng, &frontiers[0], 0.6);
                if layer.initial.is_empty() {
                    layer.initial.insert(*frontiers[0].iter().next().expect("non-empty"));
                }
            }
            if j == len - 1 {
                layer.final_flag = true;
                layer.finals = random_subset(rng, &frontiers[len], 0.6);
            }
            layer
        })
        .collect();
    Odd::new(params.alphabet.clone(), params.arity, w, layers).expect("generated layers are valid")
}

#[derive(Clone, Debug)]
pub struct StructureParams {
    pub alphabet: BaseAlphabet,
    pub width: usize,
    pub max_len: usize,
    pub max_rho: usize,
    pub max_arity: usize,
}

impl StructureParams {
    pub fn small() -> Self {
        StructureParams {
            alphabet: BaseAlphabet::binary(),
            width: 2,
            max_len: 4,
            max_rho: 2,
            max_arity: 2,
        }
    }
}

pub fn random_vocabulary<R: Rng>(rng: &mut R, max_rho: usize, max_arity: usize) -> Vocabulary {
    let rho = rng.gen_range(1..=max_rho.max(1));
    let names = ["E", "F", "G", "H", "P", "Q"];
    Vocabulary::new((0..rho).map(|i| {
        let name = names.get(i).map_or_else(|| format!("R{i}"), |n| n.to_string());
        (name, rng.gen_range(1..=max_arity))
    }))
    .expect("distinct names and positive arities")
}

/// A random valid structural tuple: a non-empty domain ODD and relation ODDs
/// contained in it, all of width bound `width` and a common length.
pub fn random_structure<R: Rng>(rng: &mut R, params: &StructureParams) -> StructuralTuple {
    let vocabulary = random_vocabulary(rng, params.max_rho, params.max_arity);
    random_structure_over(rng, params, &vocabulary)
}

pub fn random_structure_over<R: Rng>(
    rng: &mut R,
    params: &StructureParams,
    vocabulary: &Vocabulary,
) -> StructuralTuple {
    let len = rng.gen_range(1..=params.max_len);
    let base = OddParams {
        alphabet: params.alphabet.clone(),
        arity: 1,
        max_width: params.width,
        max_len: params.max_len,
        density: 0.5,
    };
    let domain = loop {
        let d = random_odd_of_length(rng, &base, len);
        if !d.enumerate_language().expect("small ODD").is_empty() {
            break d;
        }
    };
    let mut odds = vec![domain.clone()];
    for i in 0..vocabulary.rho() {
        odds.push(random_relation_odd(rng, &domain, vocabulary.arity(i)));
    }
    StructuralTuple::new(vocabulary.clone(), odds).expect("generated tuple is valid")
}

/// A random ODD whose relation lies inside `domain^arity`: a rejection-sampled
/// sparse ODD, or else a random sub-ODD of the diagonal lift of `domain`.
fn random_relation_odd<R: Rng>(rng: &mut R, domain: &Odd, arity: usize) -> Odd {
    let params = OddParams {
        alphabet: domain.alphabet().clone(),
        arity,
        max_width: domain.width_bound(),
        max_len: domain.len(),
        density: 0.25,
    };
    for _ in 0..8 {
        let candidate = random_odd_of_length(rng, &params, domain.len());
        if included_in_domain(domain, &candidate) {
            return candidate;
        }
    }
    let lift = |s: &TupleSymbol| {
        TupleSymbol::new(std::iter::repeat_n(s.components()[0], arity)).expect("positive arity")
    };
    let layers = domain
        .layers()
        .iter()
        .map(|layer| {
            let mut out = Layer::empty(arity, layer.width, layer.left.clone(), layer.right.clone());
            out.transitions = layer
                .transitions
                .iter()
                .filter(|_| rng.gen_bool(0.8))
                .map(|(l, s, r)| (*l, lift(s), *r))
                .collect();
            out.init_flag = layer.init_flag;
            out.final_flag = layer.final_flag;
            out.initial = layer.initial.clone();
            out.finals = layer.finals.iter().copied().filter(|_| rng.gen_bool(0.8)).collect();
            out
        })
        .collect();
    Odd::new(domain.alphabet().clone(), arity, domain.width_bound(), layers).expect("sub-ODD of a valid ODD")
}

/// ODDs with the right arities for `vocabulary` but otherwise arbitrary:
/// lengths may differ and relations need not lie inside the domain.
pub fn random_candidate<R: Rng>(rng: &mut R, params: &StructureParams, vocabulary: &Vocabulary) -> Vec<Odd> {
    let len = rng.gen_range(1..=params.max_len);
    vocabulary
        .track_arities()
        .into_iter()
        .map(|arity| {
            let odd_params = OddParams {
                alphabet: params.alphabet.clone(),
                arity,
                max_width: params.width,
                max_len: params.max_len,
                density: 0.45,
            };
            let l = if rng.gen_bool(0.85) { len } else { rng.gen_range(1..=params.max_len) };
            random_odd_of_length(rng, &odd_params, l)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FormulaParams {
    pub max_depth: usize,
    pub max_quantifiers: usize,
}

impl FormulaParams {
    pub fn small() -> Self {
        FormulaParams {
            max_depth: 4,
            max_quantifiers: 2,
        }
    }
}

const BOUND_NAMES: [&str; 4] = ["x", "y", "z", "u"];

/// A random formula over `vocabulary` whose free variables lie in `ctx`.
pub fn random_formula<R: Rng>(
    rng: &mut R,
    vocabulary: &Vocabulary,
    ctx: &[String],
    params: &FormulaParams,
) -> Formula {
    let mut scope: Vec<String> = ctx.to_vec();
    let mut quantifiers = params.max_quantifiers;
    gen(rng, vocabulary, &mut scope, params.max_depth, &mut quantifiers)
}

fn gen<R: Rng>(
    rng: &mut R,
    vocabulary: &Vocabulary,
    scope: &mut Vec<String>,
    depth: usize,
    quantifiers: &mut usize,
) -> Formula {
    let must_bind = scope.is_empty();
    let can_bind = *quantifiers > 0;
    if must_bind && !can_bind {
        // Nothing to refer to: a closed formula with no quantifier left.
        return Formula::not(Formula::not(Formula::exists("x", Formula::eq("x", "x"))));
    }
    let choice = if must_bind {
        7 + rng.gen_range(0..2)
    } else if depth == 0 {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..if can_bind { 9 } else { 7 })
    };
    match choice {
        0 => {
            let x = scope.choose(rng).expect("non-empty scope").clone();
            let y = scope.choose(rng).expect("non-empty scope").clone();
            Formula::Eq(x, y)
        }
        1 => {
            let i = rng.gen_range(0..vocabulary.rho());
            let args = (0..vocabulary.arity(i))
                .map(|_| scope.choose(rng).expect("non-empty scope").clone())
                .collect();
            Formula::Atom(vocabulary.name(i).to_string(), args)
        }
        2 => Formula::not(gen(rng, vocabulary, scope, depth - 1, quantifiers)),
        3..=6 => {
            let a = gen(rng, vocabulary, scope, depth - 1, quantifiers);
            let b = gen(rng, vocabulary, scope, depth - 1, quantifiers);
            match choice {
                3 => Formula::and(a, b),
                4 => Formula::or(a, b),
                5 => Formula::implies(a, b),
                _ => Formula::iff(a, b),
            }
        }
        _ => {
            *quantifiers -= 1;
            let name = BOUND_NAMES.choose(rng).expect("non-empty").to_string();
            scope.push(name.clone());
            let body = gen(rng, vocabulary, scope, depth.saturating_sub(1), quantifiers);
            scope.pop();
            if choice == 7 {
                Formula::exists(&name, body)
            } else {
                Formula::forall(&name, body)
            }
        }
    }
}

/// Up to `count` random tuples of words of length `1..=max_len`, one word per track.
pub fn random_word_tuples<R: Rng>(
    rng: &mut R,
    alphabet: &BaseAlphabet,
    tracks: usize,
    max_len: usize,
    count: usize,
) -> BTreeSet<Tuple> {
    (0..count)
        .map(|_| {
            (0..tracks)
                .map(|_| {
                    let len = rng.gen_range(1..=max_len);
                    let word: Vec<BaseSymbol> = (0..len)
                        .map(|_| *alphabet.symbols().choose(rng).expect("non-empty alphabet"))
                        .collect();
                    word_track(&word)
                })
                .collect()
        })
        .collect()
}

/// A random symbol of `Σ ⊎ {_}` (padding with probability `pad`).
pub fn random_padded<R: Rng>(rng: &mut R, alphabet: &BaseAlphabet, pad: f64) -> PaddedSymbol {
    if rng.gen_bool(pad) {
        PaddedSymbol::Pad
    } else {
        PaddedSymbol::Sym(*alphabet.symbols().choose(rng).expect("non-empty alphabet"))
    }
}

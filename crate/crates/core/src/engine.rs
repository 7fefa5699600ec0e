//! Class satisfiability and assignment counting.

use crate::automaton::Determinizer;
use crate::error::{Error, Result};
use crate::fo::{normalize, Compiler, Formula};
use crate::relations::{Column, TrackSym, Tracks};
use crate::structural::{string_to_tuple, ClassAutomaton, StructuralTuple, Support};
use num_bigint::BigUint;
use num_traits::Zero;
use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct Witness {
    pub string: Vec<Column>,
    pub tuple: StructuralTuple,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub witness: Option<Witness>,
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        self.witness.is_some()
    }
}

fn closed(sentence: &Formula) -> Result<()> {
    match sentence.free_vars().into_iter().next() {
        Some(v) => Err(Error::FreeVariable(v)),
        None => Ok(()),
    }
}

/// Whether some string accepted by `class` encodes a structure satisfying
/// `sentence`; a shortest such string is returned as witness.
pub fn check_class(class: &ClassAutomaton, sentence: &Formula) -> Result<CheckResult> {
    closed(sentence)?;
    let support = Support::of_class(class);
    let compiled = Compiler::new(support).compile(&normalize(sentence), &[])?;
    let both = class.relation().intersect(&compiled)?;
    let Some(string) = both.shortest_witness() else {
        return Ok(CheckResult { witness: None });
    };
    let tuple = string_to_tuple(class.vocabulary(), class.alphabet(), class.width(), &string)
        .map_err(|e| Error::Internal(format!("witness does not decode to a structural tuple: {e}")))?;
    Ok(CheckResult {
        witness: Some(Witness { string, tuple }),
    })
}

/// The number of assignments `(v₁, …, vₙ) ∈ L(D₀)ⁿ` to `ctx` satisfying `f`
/// in the structure encoded by `t`.
pub fn count_assignments(t: &StructuralTuple, f: &Formula, ctx: &[String]) -> Result<BigUint> {
    let compiled = Compiler::for_tuple(t).compile(&normalize(f), ctx)?.reduce();
    let nfa = compiled.nfa();
    let mut det = Determinizer::new(nfa);
    let n = ctx.len();
    let alphabet: Vec<TrackSym> = t.alphabet().symbols().iter().map(|&b| TrackSym::Sym(b)).collect();
    let layers: Vec<Vec<TrackSym>> = (0..t.len())
        .map(|j| t.odds().iter().map(|d| TrackSym::Layer(d.layer_ids()[j])).collect())
        .collect();
    // Level-by-level product of the variable-track automaton (state: which
    // strings have ended) with the determinized formula automaton.
    let mut level: HashMap<(u64, usize), BigUint> = HashMap::new();
    level.insert((0, det.initial()), BigUint::from(1u32));
    for (j, fixed) in layers.iter().enumerate() {
        let choices = variable_columns(&alphabet, n, j == 0);
        let mut next: HashMap<(u64, usize), BigUint> = HashMap::new();
        let mut states: Vec<_> = level.into_iter().collect();
        states.sort_by_key(|((m, s), _)| (*m, *s));
        for ((mask, subset), count) in states {
            for (vars, ended) in &choices {
                if vars.iter().enumerate().any(|(i, s)| mask & (1 << i) != 0 && !s.is_pad()) {
                    continue;
                }
                let mut column: Column = fixed.iter().copied().collect();
                column.extend(vars.iter().copied());
                let target = det.step(subset, &column);
                if target == Determinizer::<Column, Tracks>::SINK {
                    continue;
                }
                *next.entry((mask | ended, target)).or_insert_with(BigUint::zero) += &count;
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .filter(|((_, subset), _)| det.is_accepting(*subset))
        .map(|(_, c)| c)
        .sum())
}

/// Every assignment of a symbol or padding to `n` variable tracks, with the
/// mask of tracks that read padding. The first column has no padding.
fn variable_columns(alphabet: &[TrackSym], n: usize, first: bool) -> Vec<(Vec<TrackSym>, u64)> {
    let mut out: Vec<(Vec<TrackSym>, u64)> = vec![(Vec::new(), 0)];
    for i in 0..n {
        let mut next = Vec::new();
        for (prefix, mask) in &out {
            if !first {
                let mut v = prefix.clone();
                v.push(TrackSym::Pad);
                next.push((v, mask | (1 << i)));
            }
            for &s in alphabet {
                let mut v = prefix.clone();
                v.push(s);
                next.push((v, *mask));
            }
        }
        out = next;
    }
    out
}

/// Whether the structure encoded by `t` satisfies `sentence`.
pub fn model_check(t: &StructuralTuple, sentence: &Formula) -> Result<bool> {
    closed(sentence)?;
    Ok(!count_assignments(t, sentence, &[])?.is_zero())
}

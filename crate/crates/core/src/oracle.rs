//! Brute-force ground truth: explicit structures, naive evaluation and
//! exhaustive counting. Shares no evaluation code with the automata pipeline.

use crate::alphabet::{untensor, Word};
use crate::error::{Error, Result, StructuralError};
use crate::fo::Formula;
use crate::odd::BinaryEncoding;
use crate::structural::{StructuralTuple, Vocabulary};
use num_bigint::BigUint;
use std::collections::{BTreeSet, HashMap};

/// Bound on `|domain|^|ctx|` for [`count_brute`].
pub const COUNT_LIMIT: u128 = 10_000_000;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExplicitStructure {
    pub vocabulary: Vocabulary,
    pub domain: BTreeSet<Word>,
    pub relations: Vec<BTreeSet<Vec<Word>>>,
}

impl ExplicitStructure {
    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Vec<Word>>> {
        self.vocabulary.index_of(name).map(|i| &self.relations[i])
    }
}

/// Domain `L(D₀)`; relation `i` decodes `L(Dᵢ)`.
pub fn derive_structure(t: &StructuralTuple) -> Result<ExplicitStructure> {
    let domain: BTreeSet<Word> = t
        .domain()
        .enumerate_language()?
        .iter()
        .map(|s| untensor(s).map(|mut w| w.remove(0)))
        .collect::<Result<_>>()?;
    let mut relations = Vec::new();
    for (index, odd) in t.odds().iter().enumerate().skip(1) {
        let mut rel = BTreeSet::new();
        for s in odd.enumerate_language()? {
            let tuple = untensor(&s)?;
            if !tuple.iter().all(|w| domain.contains(w)) {
                return Err(StructuralError::NotContainedInDomain { index }.into());
            }
            rel.insert(tuple);
        }
        relations.push(rel);
    }
    Ok(ExplicitStructure {
        vocabulary: t.vocabulary().clone(),
        domain,
        relations,
    })
}

/// Tarskian satisfaction; quantifiers range over the domain.
pub fn eval_fo(s: &ExplicitStructure, f: &Formula, assignment: &HashMap<String, Word>) -> Result<bool> {
    let mut env: Vec<(String, Word)> = assignment.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    eval(s, f, &mut env)
}

fn lookup<'a>(env: &'a [(String, Word)], v: &str) -> Result<&'a Word> {
    env.iter()
        .rev()
        .find(|(name, _)| name == v)
        .map(|(_, w)| w)
        .ok_or_else(|| Error::FreeVariable(v.to_string()))
}

fn eval(s: &ExplicitStructure, f: &Formula, env: &mut Vec<(String, Word)>) -> Result<bool> {
    Ok(match f {
        Formula::Eq(x, y) => lookup(env, x)? == lookup(env, y)?,
        Formula::Atom(name, args) => {
            let rel = s.relation(name).ok_or_else(|| Error::UnknownRelation(name.clone()))?;
            let tuple: Vec<Word> = args.iter().map(|a| lookup(env, a).cloned()).collect::<Result<_>>()?;
            rel.contains(&tuple)
        }
        Formula::Not(g) => !eval(s, g, env)?,
        Formula::And(a, b) => eval(s, a, env)? && eval(s, b, env)?,
        Formula::Or(a, b) => eval(s, a, env)? || eval(s, b, env)?,
        Formula::Implies(a, b) => !eval(s, a, env)? || eval(s, b, env)?,
        Formula::Iff(a, b) => eval(s, a, env)? == eval(s, b, env)?,
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            let universal = matches!(f, Formula::Forall(..));
            let mut result = universal;
            for v in &s.domain {
                env.push((x.clone(), v.clone()));
                let holds = eval(s, g, env);
                env.pop();
                if holds? != universal {
                    result = !universal;
                    break;
                }
            }
            result
        }
    })
}

/// Exhaustive count over `domain^|ctx|`.
pub fn count_brute(s: &ExplicitStructure, f: &Formula, ctx: &[String]) -> Result<BigUint> {
    let size = s.domain.len() as u128;
    let total = (0..ctx.len()).try_fold(1u128, |acc, _| acc.checked_mul(size));
    if total.is_none_or(|t| t > COUNT_LIMIT) {
        return Err(Error::ResourceLimit(format!(
            "{} assignments over a domain of {} elements exceed the brute-force bound",
            ctx.len(),
            s.domain.len()
        )));
    }
    let domain: Vec<&Word> = s.domain.iter().collect();
    let mut count = BigUint::from(0u32);
    let mut digits = vec![0usize; ctx.len()];
    if !ctx.is_empty() && domain.is_empty() {
        return Ok(count);
    }
    loop {
        let assignment: HashMap<String, Word> = ctx
            .iter()
            .zip(&digits)
            .map(|(v, &d)| (v.clone(), domain[d].clone()))
            .collect();
        if eval_fo(s, f, &assignment)? {
            count += 1u32;
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(count);
            }
            digits[i] += 1;
            if digits[i] < domain.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Checks that blockwise decoding is an isomorphism from the structure of
/// `binarized` onto the structure of `original`.
pub fn verify_binarize_iso(
    original: &StructuralTuple,
    binarized: &StructuralTuple,
    encoding: &BinaryEncoding,
) -> Result<bool> {
    let s = derive_structure(original)?;
    let b = derive_structure(binarized)?;
    if s.vocabulary != b.vocabulary {
        return Ok(false);
    }
    let decode = |w: &Word| encoding.decode_word(w);
    let mut image = BTreeSet::new();
    for w in &b.domain {
        match decode(w) {
            Some(v) if s.domain.contains(&v) => {
                if !image.insert(v) {
                    return Ok(false);
                }
            }
            _ => return Ok(false),
        }
    }
    if image != s.domain {
        return Ok(false);
    }
    for (rs, rb) in s.relations.iter().zip(&b.relations) {
        let mapped: Option<BTreeSet<Vec<Word>>> =
            rb.iter().map(|t| t.iter().map(decode).collect::<Option<Vec<Word>>>()).collect();
        if mapped.as_ref() != Some(rs) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::chars_word;
    use crate::fo::parse_formula;
    use crate::structural::{hypercube_tuple, hypercube_vocabulary};

    fn f(text: &str) -> Formula {
        parse_formula(text, &hypercube_vocabulary()).unwrap()
    }

    fn assign(pairs: &[(&str, &str)]) -> HashMap<String, Word> {
        pairs.iter().map(|(v, w)| (v.to_string(), chars_word(w).unwrap())).collect()
    }

    #[test]
    fn hypercube_three() {
        let s = derive_structure(&hypercube_tuple(3).unwrap()).unwrap();
        assert_eq!(s.domain.len(), 8);
        assert_eq!(s.relations[0].len(), 24);
        let ctx = vec!["x".to_string(), "y".to_string()];
        assert_eq!(count_brute(&s, &f("E(x,y)"), &ctx).unwrap(), BigUint::from(24u32));
        assert_eq!(count_brute(&s, &f("x = x"), &ctx[..1]).unwrap(), BigUint::from(8u32));
        assert_eq!(count_brute(&s, &f("exists x. x = x"), &[]).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn atoms_on_the_square() {
        let s = derive_structure(&hypercube_tuple(2).unwrap()).unwrap();
        assert!(eval_fo(&s, &f("E(x,y)"), &assign(&[("x", "00"), ("y", "01")])).unwrap());
        assert!(!eval_fo(&s, &f("E(x,y)"), &assign(&[("x", "00"), ("y", "11")])).unwrap());
        assert!(matches!(eval_fo(&s, &f("E(x,y)"), &assign(&[("x", "00")])), Err(Error::FreeVariable(_))));
    }

    #[test]
    fn shadowing_uses_the_innermost_binding() {
        let s = derive_structure(&hypercube_tuple(2).unwrap()).unwrap();
        let g = f("exists x. E(x,y) & exists x. !E(x,y)");
        assert!(eval_fo(&s, &g, &assign(&[("y", "00")])).unwrap());
    }

    #[test]
    fn brute_force_bound() {
        let s = derive_structure(&hypercube_tuple(6).unwrap()).unwrap();
        let ctx: Vec<String> = (0..5).map(|i| format!("x{i}")).collect();
        assert!(matches!(count_brute(&s, &f("x0 = x0"), &ctx), Err(Error::ResourceLimit(_))));
    }
}

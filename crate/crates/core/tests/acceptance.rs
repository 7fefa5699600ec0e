//! Acceptance suite: one pass/fail line per criterion. Runs without the
//! libtest harness so the summary is always printed.

use num_bigint::BigUint;
use oddmc_core::alphabet::{chars_word, tensor_strings, untensor, BaseAlphabet, TupleSymbol, Word};
use oddmc_core::engine::{check_class, count_assignments};
use oddmc_core::fo::{parse_formula, Formula};
use oddmc_core::generators::{
    random_candidate, random_formula, random_odd, random_structure, random_structure_over,
    random_word_tuples, FormulaParams, OddParams, StructureParams,
};
use oddmc_core::odd::{BinaryEncoding, Odd};
use oddmc_core::oracle::{count_brute, derive_structure, eval_fo, verify_binarize_iso};
use oddmc_core::relations::{tuple_track, Relation, TrackSpec, TrackSym, Tracks, Tuple};
use oddmc_core::structural::{
    binarize_structural, hypercube_class, hypercube_tuple, hypercube_vocabulary, membership_rel,
    structural_universe, subset_rel, validate_structural, Support,
};
use oddmc_core::relations::Column;
use oddmc_core::LayerId;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn ctx(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let conv = tensor_strings(&[chars_word("aabab").unwrap(), chars_word("abb").unwrap()]).unwrap();
    let text: String = conv.iter().map(|t| t.to_string()).collect();
    ensure(text == "(a,a)(a,b)(b,b)(a,_)(b,_)", || format!("got {text}"))?;
    within(start, Duration::from_millis(1))?;
    Ok(text)
}

/// Vertices and edges of the `k`-cube straight from the definition.
fn cube_by_definition(k: usize) -> (BTreeSet<Word>, BTreeSet<Vec<Word>>) {
    let bit = |c: char| chars_word(&c.to_string()).unwrap()[0];
    let vertex = |n: usize| -> Word { (0..k).map(|i| bit(if n >> (k - 1 - i) & 1 == 1 { '1' } else { '0' })).collect() };
    let vertices: BTreeSet<Word> = (0..1usize << k).map(vertex).collect();
    let mut edges = BTreeSet::new();
    for u in 0..1usize << k {
        for i in 0..k {
            edges.insert(vec![vertex(u), vertex(u ^ (1 << i))]);
        }
    }
    (vertices, edges)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let exy = Formula::atom("E", &["x", "y"]);
    for k in 1..=6 {
        let t = hypercube_tuple(k).map_err(|e| e.to_string())?;
        let s = derive_structure(&t).map_err(|e| e.to_string())?;
        let expected = k << k;
        ensure(s.domain.len() == 1 << k, || format!("k={k}: {} vertices", s.domain.len()))?;
        ensure(s.relations[0].len() == expected, || format!("k={k}: {} edges", s.relations[0].len()))?;
        let (vertices, edges) = cube_by_definition(k);
        ensure(s.domain == vertices && s.relations[0] == edges, || format!("k={k}: differs from the definition"))?;
        let count = count_assignments(&t, &exy, &ctx(&["x", "y"])).map_err(|e| e.to_string())?;
        ensure(count == BigUint::from(expected), || format!("k={k}: counted {count}"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok("k = 1..6".into())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let vocab = hypercube_vocabulary();
    let class = hypercube_class();
    let edge = parse_formula("exists x. exists y. E(x,y)", &vocab).unwrap();
    let triangle = parse_formula("exists x. exists y. exists z. E(x,y) & E(y,z) & E(z,x)", &vocab).unwrap();

    let sat = check_class(&class, &edge).map_err(|e| e.to_string())?;
    let witness = sat.witness.ok_or("edge sentence reported UNSAT")?;
    ensure(class.accepts(&witness.string), || "witness not accepted by the class".into())?;
    let s = derive_structure(&witness.tuple).map_err(|e| e.to_string())?;
    ensure(eval_fo(&s, &edge, &HashMap::new()).unwrap(), || "witness fails the sentence".into())?;

    let unsat = check_class(&class, &triangle).map_err(|e| e.to_string())?;
    ensure(!unsat.is_sat(), || "triangle sentence reported SAT".into())?;
    let members = class.nfa().enumerate(5, 1000).map_err(|e| e.to_string())?;
    ensure(members.len() == 5, || format!("{} class members up to length 5", members.len()))?;
    for k in 1..=5 {
        let t = hypercube_tuple(k).unwrap();
        ensure(members.contains(&oddmc_core::structural::tuple_to_string(&t)), || format!("H{k} missing"))?;
        let s = derive_structure(&t).unwrap();
        ensure(!eval_fo(&s, &triangle, &HashMap::new()).unwrap(), || format!("H{k} has a triangle"))?;
        ensure(eval_fo(&s, &edge, &HashMap::new()).unwrap(), || format!("H{k} has no edge"))?;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("SAT witness of length {}, UNSAT cross-checked for k <= 5", witness.string.len()))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = StructureParams::small();
    let names = ["v1", "v2", "v3"];
    let instances = 200;
    let mut nonzero = 0;
    for i in 0..instances {
        let t = random_structure(&mut rng, &params);
        let n = rng.gen_range(0..=3);
        let ctx = ctx(&names[..n]);
        let f = random_formula(&mut rng, t.vocabulary(), &ctx, &FormulaParams::small());
        let s = derive_structure(&t).map_err(|e| e.to_string())?;
        let expected = count_brute(&s, &f, &ctx).map_err(|e| e.to_string())?;
        let got = count_assignments(&t, &f, &ctx).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(got == expected, || format!("instance {i}: {f} over {ctx:?}: counted {got}, brute force {expected}"))?;
        if expected > BigUint::from(0u32) {
            nonzero += 1;
        }
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("{instances} instances agree ({nonzero} with a non-zero count)"))
}

fn plain_tracks(n: usize) -> Tracks {
    Tracks::new((0..n).map(|_| TrackSpec::word(&BaseAlphabet::binary(), 1)))
}

fn relation(tuples: &BTreeSet<Tuple>, tracks: usize) -> Relation {
    Relation::from_tuples(plain_tracks(tracks), tuples).expect("valid tuples")
}

fn words_of(t: &[TrackSym]) -> Word {
    t.iter()
        .map(|s| match s {
            TrackSym::Sym(b) => *b,
            other => panic!("unexpected {other}"),
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bits = BaseAlphabet::binary();
    let cases = 100;
    let mut run = |name: &str, check: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<(), String>| -> Result<(), String> {
        for i in 0..cases {
            check(&mut rng).map_err(|e| format!("{name} case {i}: {e}"))?;
        }
        Ok(())
    };
    let sample = |rng: &mut ChaCha8Rng, tracks: usize| {
        let count = rng.gen_range(0..=20);
        random_word_tuples(rng, &bits, tracks, 4, count)
    };
    let same = |got: BTreeSet<Tuple>, want: BTreeSet<Tuple>| ensure(got == want, || format!("got {got:?}, want {want:?}"));

    run("perm", &mut |rng| {
        let r = sample(rng, 3);
        let mut p = vec![0, 1, 2];
        p.shuffle(rng);
        let want = r.iter().map(|t| p.iter().map(|&i| t[i].clone()).collect()).collect();
        same(relation(&r, 3).perm(&p).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("proj", &mut |rng| {
        let r = sample(rng, 3);
        let drop = rng.gen_range(0..3);
        let want = r
            .iter()
            .map(|t| t.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, w)| w.clone()).collect())
            .collect();
        same(relation(&r, 3).proj(&[drop]).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("identify", &mut |rng| {
        let mut r = sample(rng, 3);
        // Plant some tuples with equal components.
        for t in sample(rng, 2).into_iter().take(5) {
            r.insert(vec![t[0].clone(), t[1].clone(), t[0].clone()]);
        }
        let want = r.iter().filter(|t| t[0] == t[2]).cloned().collect();
        same(relation(&r, 3).identify(&[(0, 2)]).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("fold", &mut |rng| {
        let r = sample(rng, 3);
        let want = r
            .iter()
            .map(|t| {
                let conv = tensor_strings(&[words_of(&t[0]), words_of(&t[1])]).unwrap();
                vec![tuple_track(&conv).unwrap(), t[2].clone()]
            })
            .collect();
        same(relation(&r, 3).fold(0, 1).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("unfold", &mut |rng| {
        // Arbitrary strings over Σ_⊥^⊗2, including non-convolutions.
        let symbols = bits.padded_tuples(2, false);
        let count = rng.gen_range(0..=20);
        let strings: BTreeSet<Vec<TupleSymbol>> = (0..count)
            .map(|_| (0..rng.gen_range(1..=4)).map(|_| symbols.choose(rng).unwrap().clone()).collect())
            .collect();
        let tuples: BTreeSet<Tuple> = strings.iter().map(|s| vec![tuple_track(s).unwrap()]).collect();
        let r = Relation::from_tuples(Tracks::new([TrackSpec::word(&bits, 2)]), &tuples).unwrap();
        let want = strings
            .iter()
            .filter_map(|s| untensor(s).ok())
            .map(|ws| ws.iter().map(|w| oddmc_core::relations::word_track(w)).collect())
            .collect();
        same(r.unfold(0).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("direct sum", &mut |rng| {
        let a = sample(rng, 1);
        let b = sample(rng, 2);
        let want: BTreeSet<Tuple> = if a.is_empty() {
            b.clone()
        } else if b.is_empty() {
            a.clone()
        } else {
            a.iter().flat_map(|x| b.iter().map(move |y| x.iter().chain(y).cloned().collect())).collect()
        };
        let got = relation(&a, 1).direct_sum(&relation(&b, 2));
        same(got.enumerate_tuples(4).unwrap(), want)
    })?;
    run("union", &mut |rng| {
        let (a, b) = (sample(rng, 2), sample(rng, 2));
        let want = a.union(&b).cloned().collect();
        same(relation(&a, 2).union(&relation(&b, 2)).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("intersection", &mut |rng| {
        let a = sample(rng, 2);
        let mut b = sample(rng, 2);
        b.extend(a.iter().filter(|_| rng.gen_bool(0.5)).cloned());
        let want = a.intersection(&b).cloned().collect();
        same(relation(&a, 2).intersect(&relation(&b, 2)).unwrap().enumerate_tuples(4).unwrap(), want)
    })?;
    run("complement", &mut |rng| {
        let universe = sample(rng, 2);
        let mut r: BTreeSet<Tuple> = universe.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        r.extend(sample(rng, 2).into_iter().take(3));
        let want = universe.difference(&r).cloned().collect();
        let got = Relation::complement_within(&relation(&universe, 2), &relation(&r, 2)).unwrap();
        same(got.enumerate_tuples(4).unwrap(), want)
    })?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("{cases} cases for each of 9 operations"))
}

fn odd_string(d: &Odd) -> Vec<TrackSym> {
    d.layer_ids().iter().map(|&id| TrackSym::Layer(id)).collect()
}

fn single_support(odds: &[&Odd]) -> oddmc_core::relations::LayerTrack {
    let d = odds[0];
    let layers: BTreeSet<LayerId> = odds.iter().flat_map(|o| o.layer_ids().iter().copied()).collect();
    oddmc_core::relations::LayerTrack::new(d.alphabet().clone(), d.arity(), d.width_bound(), layers)
}

/// `L(relation) ⊆ L(domain)^⊗a`, by enumeration.
fn included_by_enumeration(domain: &Odd, relation: &Odd) -> bool {
    let members: BTreeSet<Word> = domain
        .enumerate_language()
        .unwrap()
        .iter()
        .map(|s| untensor(s).unwrap().remove(0))
        .collect();
    relation.enumerate_language().unwrap().iter().all(|s| match untensor(s) {
        Ok(ws) => ws.iter().all(|w| members.contains(w)),
        Err(_) => false,
    })
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let mut accepted = 0;
    for i in 0..500 {
        let arity = rng.gen_range(1..=2);
        let params = OddParams { arity, ..OddParams::small() };
        let d = random_odd(&mut rng, &params);
        let other = random_odd(&mut rng, &params);
        let symbols = d.tuple_support().into_iter().collect::<Vec<_>>();
        let s: Vec<TupleSymbol> = if rng.gen_bool(0.5) && !d.enumerate_language().unwrap().is_empty() {
            let language: Vec<_> = d.enumerate_language().unwrap().into_iter().collect();
            language.choose(&mut rng).unwrap().clone()
        } else {
            (0..rng.gen_range(1..=d.len())).map(|_| symbols.choose(&mut rng).unwrap().clone()).collect()
        };
        let expected = d.accepts(&s).unwrap();
        let r = membership_rel(&single_support(&[&d, &other]));
        let got = r.contains(&[odd_string(&d), tuple_track(&s).unwrap()]);
        ensure(got == expected, || format!("membership case {i}: got {got}, want {expected}"))?;
        accepted += usize::from(expected);
    }

    let mut included = 0;
    for i in 0..200 {
        let domain = random_odd(&mut rng, &OddParams::small());
        let arity = rng.gen_range(1..=2);
        let relation = random_odd(&mut rng, &OddParams { arity, density: 0.25, ..OddParams::small() });
        let expected = included_by_enumeration(&domain, &relation);
        if domain.len() == relation.len() {
            ensure(
                oddmc_core::structural::included_in_domain(&domain, &relation) == expected,
                || format!("subset case {i}: automata inclusion disagrees with enumeration"),
            )?;
        }
        let r = subset_rel(&single_support(&[&domain]), &single_support(&[&relation])).map_err(|e| e.to_string())?;
        let got = r.contains(&[odd_string(&domain), odd_string(&relation)]);
        ensure(got == expected, || format!("subset case {i}: got {got}, want {expected}"))?;
        included += usize::from(expected);
    }

    let mut valid = 0;
    let params = StructureParams::small();
    for i in 0..200 {
        let vocabulary = oddmc_core::generators::random_vocabulary(&mut rng, 2, 2);
        let odds: Vec<Odd> = if rng.gen_bool(0.5) {
            random_structure_over(&mut rng, &params, &vocabulary).odds().to_vec()
        } else {
            random_candidate(&mut rng, &params, &vocabulary)
        };
        let expected = validate_structural(vocabulary.clone(), odds.clone(), params.width).is_ok();
        let layers = odds.iter().map(|d| d.layer_ids().iter().copied().collect()).collect();
        let support = Support::new(vocabulary, params.alphabet.clone(), params.width, layers).map_err(|e| e.to_string())?;
        let universe = structural_universe(&support, 0).map_err(|e| e.to_string())?;
        let len = odds.iter().map(Odd::len).max().unwrap();
        let string: Vec<Column> = (0..len)
            .map(|j| odds.iter().map(|d| d.layer_ids().get(j).map_or(TrackSym::Pad, |&id| TrackSym::Layer(id))).collect())
            .collect();
        let got = universe.accepts(&string);
        ensure(got == expected, || format!("structural case {i}: got {got}, want {expected}"))?;
        valid += usize::from(expected);
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "500 membership ({accepted} accepted), 200 subset ({included} included), 200 structural ({valid} valid)"
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let arity = rng.gen_range(1..=2);
        let d = random_odd(&mut rng, &OddParams { arity, ..OddParams::small() });
        let target = d.len() + rng.gen_range(0..=3);
        let padded = d.pad_to_length(target).map_err(|e| format!("case {i}: {e}"))?;
        ensure(padded.len() == target, || format!("case {i}: length {}", padded.len()))?;
        let layers: Vec<_> = padded.layers().iter().map(|l| (**l).clone()).collect();
        oddmc_core::odd::validate_odd(padded.alphabet().clone(), arity, padded.width_bound(), layers)
            .map_err(|e| format!("case {i}: padded ODD invalid: {e}"))?;
        ensure(padded.enumerate_language().unwrap() == d.enumerate_language().unwrap(), || {
            format!("case {i}: language changed")
        })?;
    }
    within(start, Duration::from_secs(30))?;
    Ok("100 random ODDs".into())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let abc = BaseAlphabet::from_tokens(["a", "b", "c"]).unwrap();
    let encoding = BinaryEncoding::standard(&abc);
    let params = StructureParams {
        alphabet: abc.clone(),
        max_len: 3,
        ..StructureParams::small()
    };
    for i in 0..50 {
        let t = random_structure(&mut rng, &params);
        let b = binarize_structural(&t, &encoding).map_err(|e| format!("case {i}: {e}"))?;
        let w = t.width_bound();
        let max_arity = t.vocabulary().track_arities().into_iter().max().unwrap();
        let bound = w * w * abc.len().pow(max_arity as u32);
        for (j, d) in b.odds().iter().enumerate() {
            ensure(d.width() <= bound, || format!("case {i}: ODD {j} has width {} > {bound}", d.width()))?;
        }
        ensure(verify_binarize_iso(&t, &b, &encoding).unwrap(), || format!("case {i}: not isomorphic"))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok("50 random tuples over {a,b,c}".into())
}

fn criterion_9() -> Outcome {
    let t = hypercube_tuple(64).unwrap();
    let start = Instant::now();
    let count = count_assignments(&t, &Formula::atom("E", &["x", "y"]), &ctx(&["x", "y"])).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let expected = BigUint::from(64u32) << 64;
    ensure(count == expected, || format!("counted {count}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("{count} edges in {took:.2?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("convolution fixture", criterion_1),
        ("hypercube combinatorics", criterion_2),
        ("class decision", criterion_3),
        ("differential counting", criterion_4),
        ("relation algebra", criterion_5),
        ("core automata", criterion_6),
        ("length padding", criterion_7),
        ("binary re-encoding", criterion_8),
        ("scaling smoke", criterion_9),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|n| n != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why} ({took:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

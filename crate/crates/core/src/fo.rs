//! First-order formulas: syntax, parsing, normalization and compilation into
//! relations over structural tuples and variable tracks.

use crate::error::{Error, Result};
use crate::par;
use crate::relations::{Relation, Side};
use crate::structural::{membership_rel, structural_universe, tuple_universe, StructuralTuple, Support, Vocabulary};
use parking_lot::Mutex;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Eq(String, String),
    Atom(String, Vec<String>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn eq(x: &str, y: &str) -> Self {
        Formula::Eq(x.into(), y.into())
    }

    pub fn atom(name: &str, args: &[&str]) -> Self {
        Formula::Atom(name.into(), args.iter().map(|a| a.to_string()).collect())
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn exists(x: &str, f: Formula) -> Self {
        Formula::Exists(x.into(), Box::new(f))
    }

    pub fn forall(x: &str, f: Formula) -> Self {
        Formula::Forall(x.into(), Box::new(f))
    }

    /// Variables occurring outside the scope of any quantifier binding them.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        let mut note = |v: &String, bound: &Vec<&str>| {
            if !bound.contains(&v.as_str()) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::Eq(x, y) => {
                note(x, bound);
                note(y, bound);
            }
            Formula::Atom(_, args) => args.iter().for_each(|a| note(a, bound)),
            Formula::Not(g) => g.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(x, g) | Formula::Forall(x, g) => {
                bound.push(x);
                g.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_normalized(&self) -> bool {
        match self {
            Formula::Eq(..) | Formula::Atom(..) => true,
            Formula::Not(g) | Formula::Exists(_, g) => g.is_normalized(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_normalized() && b.is_normalized(),
            Formula::Implies(..) | Formula::Iff(..) | Formula::Forall(..) => false,
        }
    }

    /// Number of quantifiers.
    pub fn quantifier_count(&self) -> usize {
        match self {
            Formula::Eq(..) | Formula::Atom(..) => 0,
            Formula::Not(g) => g.quantifier_count(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.quantifier_count() + b.quantifier_count()
            }
            Formula::Exists(_, g) | Formula::Forall(_, g) => 1 + g.quantifier_count(),
        }
    }
}

/// Rewrites `→`, `↔` and `∀` in terms of `¬`, `∧`, `∨`, `∃`.
pub fn normalize(f: &Formula) -> Formula {
    match f {
        Formula::Eq(..) | Formula::Atom(..) => f.clone(),
        Formula::Not(g) => Formula::not(normalize(g)),
        Formula::And(a, b) => Formula::and(normalize(a), normalize(b)),
        Formula::Or(a, b) => Formula::or(normalize(a), normalize(b)),
        Formula::Implies(a, b) => Formula::or(Formula::not(normalize(a)), normalize(b)),
        Formula::Iff(a, b) => {
            let (a, b) = (normalize(a), normalize(b));
            Formula::and(
                Formula::or(Formula::not(a.clone()), b.clone()),
                Formula::or(Formula::not(b), a),
            )
        }
        Formula::Exists(x, g) => Formula::exists(x, normalize(g)),
        Formula::Forall(x, g) => Formula::not(Formula::exists(x, Formula::not(normalize(g)))),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(x, y) => write!(f, "{x} = {y}"),
            Formula::Atom(r, args) => write!(f, "{r}({})", args.join(",")),
            Formula::Not(g) => match **g {
                Formula::Eq(..) => write!(f, "!({g})"),
                _ => write!(f, "!{g}"),
            },
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Iff(a, b) => write!(f, "({a} <-> {b})"),
            Formula::Exists(x, g) => write!(f, "(exists {x}. {g})"),
            Formula::Forall(x, g) => write!(f, "(forall {x}. {g})"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Exists,
    Forall,
    LParen,
    RParen,
    Comma,
    Dot,
    Equals,
    Not,
    And,
    Or,
    Implies,
    Iff,
    End,
}

struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (l, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let at = |tok| Token {
                tok,
                line: l + 1,
                column: i + 1,
            };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_alphanumeric() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "exists" => Tok::Exists,
                    "forall" => Tok::Forall,
                    _ => Tok::Ident(word),
                };
                out.push(Token {
                    tok,
                    line: l + 1,
                    column: start + 1,
                });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let (tok, len) = if rest.starts_with("<->") {
                (Tok::Iff, 3)
            } else if rest.starts_with("->") {
                (Tok::Implies, 2)
            } else {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '=' => Tok::Equals,
                    '!' => Tok::Not,
                    '&' => Tok::And,
                    '|' => Tok::Or,
                    _ => return Err(Error::parse(l + 1, i + 1, format!("unexpected character `{c}`"))),
                };
                (tok, 1)
            };
            out.push(at(tok));
            i += len;
        }
    }
    let (line, column) = out.last().map_or((1, 1), |t| (t.line, t.column + 1));
    out.push(Token {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vocabulary: &'a Vocabulary,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let t = &self.tokens[self.pos];
        Error::parse(t.line, t.column, message)
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if tok != Tok::End {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut left = self.implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            left = Formula::iff(left, self.implies()?);
        }
        Ok(left)
    }

    fn implies(&mut self) -> Result<Formula> {
        let left = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            return Ok(Formula::implies(left, self.implies()?));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut left = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            left = Formula::or(left, self.and()?);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            left = Formula::and(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Exists | Tok::Forall => {
                let universal = self.bump() == Tok::Forall;
                let var = self.ident("a variable after the quantifier")?;
                self.expect(Tok::Dot, "`.` after the quantified variable")?;
                let body = self.iff()?;
                Ok(if universal {
                    Formula::forall(&var, body)
                } else {
                    Formula::exists(&var, body)
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let start = self.pos;
                self.bump();
                match self.peek() {
                    Tok::Equals => {
                        self.bump();
                        let rhs = self.ident("a variable after `=`")?;
                        Ok(Formula::Eq(name, rhs))
                    }
                    Tok::LParen => {
                        self.bump();
                        let mut args = vec![self.ident("a variable")?];
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.ident("a variable")?);
                        }
                        self.expect(Tok::RParen, "`)` after the arguments")?;
                        let Some(index) = self.vocabulary.index_of(&name) else {
                            return Err(Error::UnknownRelation(name));
                        };
                        let expected = self.vocabulary.arity(index);
                        if args.len() != expected {
                            self.pos = start;
                            return Err(Error::ArityMismatch {
                                name,
                                expected,
                                found: args.len(),
                            });
                        }
                        Ok(Formula::Atom(name, args))
                    }
                    _ => Err(self.error("expected `=` or `(` after an identifier")),
                }
            }
            _ => Err(self.error("expected a formula")),
        }
    }
}

/// Parses the concrete syntax. `#` starts a comment that runs to the end of the line.
pub fn parse_formula(text: &str, vocabulary: &Vocabulary) -> Result<Formula> {
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
        vocabulary,
    };
    let f = parser.iff()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error("unexpected input after the formula"));
    }
    Ok(f)
}

/// Compiles formulas over one support, caching the universes and atom relations.
pub struct Compiler {
    support: Support,
    tuple: Option<StructuralTuple>,
    universes: Mutex<HashMap<usize, Arc<OnceLock<Result<Relation>>>>>,
    atoms: Vec<OnceLock<Result<Relation>>>,
}

impl Compiler {
    pub fn new(support: Support) -> Self {
        let atoms = (0..support.rho()).map(|_| OnceLock::new()).collect();
        Compiler {
            support,
            tuple: None,
            universes: Mutex::new(HashMap::new()),
            atoms,
        }
    }

    /// A compiler whose universes contain only the layer string of `t`.
    /// Compiled relations then describe the assignments in `t` alone.
    pub fn for_tuple(t: &StructuralTuple) -> Self {
        Compiler {
            tuple: Some(t.clone()),
            ..Compiler::new(Support::of_tuple(t))
        }
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// The structural universe with `n` variable tracks.
    pub fn universe(&self, n: usize) -> Result<Relation> {
        let cell = Arc::clone(self.universes.lock().entry(n).or_default());
        cell.get_or_init(|| match &self.tuple {
            Some(t) => tuple_universe(t, n),
            None => structural_universe(&self.support, n),
        })
        .clone()
    }

    /// `(D_r, v₁, …, v_a)` with `v₁⊗…⊗v_a ∈ L(D_r)`, for relation `r` (0-based).
    fn atom_relation(&self, r: usize) -> Result<Relation> {
        self.atoms[r]
            .get_or_init(|| membership_rel(&self.support.tracks[r + 1]).unfold(1))
            .clone()
    }

    /// Compiles a normalized formula against `ctx` (distinct variable names).
    pub fn compile(&self, f: &Formula, ctx: &[String]) -> Result<Relation> {
        for (i, v) in ctx.iter().enumerate() {
            if ctx[..i].contains(v) {
                return Err(Error::invalid(format!("variable `{v}` occurs twice in the context")));
            }
        }
        if let Some(v) = f.free_vars().into_iter().find(|v| !ctx.contains(v)) {
            return Err(Error::FreeVariable(v));
        }
        self.check(f)?;
        let mut ctx = ctx.to_vec();
        self.compile_in(f, &mut ctx)
    }

    fn check(&self, f: &Formula) -> Result<()> {
        match f {
            Formula::Eq(..) => Ok(()),
            Formula::Atom(name, args) => {
                let index = self
                    .support
                    .vocabulary
                    .index_of(name)
                    .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
                let expected = self.support.vocabulary.arity(index);
                if args.len() != expected {
                    return Err(Error::ArityMismatch {
                        name: name.clone(),
                        expected,
                        found: args.len(),
                    });
                }
                Ok(())
            }
            Formula::Not(g) | Formula::Exists(_, g) => self.check(g),
            Formula::And(a, b) | Formula::Or(a, b) => {
                self.check(a)?;
                self.check(b)
            }
            Formula::Implies(..) => Err(Error::NotNormalized("implication")),
            Formula::Iff(..) => Err(Error::NotNormalized("biconditional")),
            Formula::Forall(..) => Err(Error::NotNormalized("universal quantifier")),
        }
    }

    fn compile_in(&self, f: &Formula, ctx: &mut Vec<String>) -> Result<Relation> {
        let n = ctx.len();
        let rho = self.support.rho();
        let track = |v: &String| {
            ctx.iter()
                .rposition(|c| c == v)
                .map(|i| rho + 1 + i)
                .ok_or_else(|| Error::FreeVariable(v.clone()))
        };
        match f {
            Formula::Eq(x, y) => {
                let (i, j) = (track(x)?, track(y)?);
                self.universe(n)?.identify(&[(i, j)])
            }
            Formula::Atom(name, args) => {
                let r = self
                    .support
                    .vocabulary
                    .index_of(name)
                    .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
                let mut pairs = vec![(0, r + 1)];
                for (k, v) in args.iter().enumerate() {
                    pairs.push((k + 1, track(v)?));
                }
                let universe = self.universe(n)?;
                let keep: Vec<Side> = (0..universe.arity()).map(Side::Right).collect();
                self.atom_relation(r)?.join(&universe, &pairs, &keep)
            }
            Formula::Not(g) => {
                let inner = self.compile_in(g, ctx)?;
                Ok(self.universe(n)?.difference(&inner)?.reduce())
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                let (mut ca, mut cb) = (ctx.clone(), ctx.clone());
                let (ra, rb) = par::join(|| self.compile_in(a, &mut ca), || self.compile_in(b, &mut cb));
                let (ra, rb) = (ra?, rb?);
                let out = if matches!(f, Formula::And(..)) {
                    ra.intersect(&rb)?
                } else {
                    ra.union(&rb)?
                };
                Ok(out.reduce())
            }
            Formula::Exists(y, g) => {
                ctx.push(y.clone());
                let body = self.compile_in(g, ctx);
                ctx.pop();
                body?.proj(&[rho + 1 + n])
            }
            Formula::Implies(..) => Err(Error::NotNormalized("implication")),
            Formula::Iff(..) => Err(Error::NotNormalized("biconditional")),
            Formula::Forall(..) => Err(Error::NotNormalized("universal quantifier")),
        }
    }
}

/// Compiles a normalized formula over `support`; see [`Compiler::compile`].
pub fn compile(f: &Formula, ctx: &[String], support: &Support) -> Result<Relation> {
    Compiler::new(support.clone()).compile(f, ctx)
}

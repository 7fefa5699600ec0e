//! Line-oriented text formats: `.odd`, `.struct`, `.classnfa` and layer strings.
//!
//! `#` starts a comment running to the end of the line. Padding is `_`.

use crate::alphabet::{BaseAlphabet, TupleSymbol};
use crate::error::{Error, Result};
use crate::odd::{Layer, LayerId, Odd};
use crate::relations::{Column, TrackSym};
use crate::structural::{string_to_tuple, ClassAutomaton, StructuralTuple, Vocabulary};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|(_, l)| *l)
    }

    fn line_no(&self) -> usize {
        match self.lines.get(self.pos) {
            Some((n, _)) => *n,
            None => self.lines.last().map_or(1, |(n, _)| n + 1),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.line_no(), 1, message)
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        let line = self.peek().ok_or_else(|| self.error(format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(line)
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        let line = self.peek();
        if line != Some(word) {
            return Err(self.error(format!("expected `{word}`, found `{}`", line.unwrap_or("end of input"))));
        }
        self.pos += 1;
        Ok(())
    }

    /// `key: value`, returning the value.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.peek().unwrap_or("");
        match line.split_once(':') {
            Some((k, v)) if k.trim() == key => {
                self.pos += 1;
                Ok(v.trim())
            }
            _ => Err(self.error(format!("expected `{key}:`, found `{line}`"))),
        }
    }

    fn number(&mut self, key: &str) -> Result<usize> {
        let value = self.field(key)?;
        value.parse().map_err(|_| self.back_error(format!("`{key}` needs a non-negative integer, found `{value}`")))
    }

    fn back_error(&self, message: impl Into<String>) -> Error {
        let line = self.lines.get(self.pos.saturating_sub(1)).map_or(1, |(n, _)| *n);
        Error::parse(line, 1, message)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.lines.len()
    }
}

fn state_set(lines: &Lines, value: &str) -> Result<BTreeSet<u32>> {
    value
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| lines.back_error(format!("bad state `{t}`"))))
        .collect()
}

fn flag(lines: &Lines, value: &str) -> Result<bool> {
    match value {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(lines.back_error(format!("flag must be 0 or 1, found `{value}`"))),
    }
}

fn parse_transition(lines: &Lines, value: &str) -> Result<(u32, TupleSymbol, u32)> {
    let bad = || lines.back_error(format!("expected `<l> (<s1,...>) <r>`, found `{value}`"));
    let open = value.find('(').ok_or_else(bad)?;
    let close = value.rfind(')').ok_or_else(bad)?;
    if close < open {
        return Err(bad());
    }
    let l = value[..open].trim().parse().map_err(|_| bad())?;
    let r = value[close + 1..].trim().parse().map_err(|_| bad())?;
    let symbol = TupleSymbol::parse(&value[open..=close]).map_err(|e| lines.back_error(e.to_string()))?;
    Ok((l, symbol, r))
}

/// The body of a layer block (everything after its `LAYER` line).
fn parse_layer_body(lines: &mut Lines, arity: usize, width: usize) -> Result<Layer> {
    let left = lines.field("left")?;
    let left = state_set(lines, left)?;
    let right = lines.field("right")?;
    let right = state_set(lines, right)?;
    let mut layer = Layer::empty(arity, width, left, right);
    let initial = lines.field("initial")?;
    layer.initial = state_set(lines, initial)?;
    let finals = lines.field("final")?;
    layer.finals = state_set(lines, finals)?;
    let iflag = lines.field("iflag")?;
    layer.init_flag = flag(lines, iflag)?;
    let fflag = lines.field("fflag")?;
    layer.final_flag = flag(lines, fflag)?;
    while lines.peek().is_some_and(|l| l.starts_with("trans:")) {
        let value = lines.field("trans")?;
        let (l, symbol, r) = parse_transition(lines, value)?;
        layer.transitions.insert((l, symbol, r));
    }
    Ok(layer)
}

fn write_layer_body(out: &mut String, layer: &Layer) {
    let set = |s: &BTreeSet<u32>| s.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
    let line = |key: &str, value: String| {
        if value.is_empty() {
            format!("{key}:\n")
        } else {
            format!("{key}: {value}\n")
        }
    };
    out.push_str(&line("left", set(&layer.left)));
    out.push_str(&line("right", set(&layer.right)));
    out.push_str(&line("initial", set(&layer.initial)));
    out.push_str(&line("final", set(&layer.finals)));
    out.push_str(&line("iflag", u8::from(layer.init_flag).to_string()));
    out.push_str(&line("fflag", u8::from(layer.final_flag).to_string()));
    for (l, symbol, r) in &layer.transitions {
        let components: Vec<String> = symbol.components().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "trans: {l} ({}) {r}", components.join(","));
    }
}

fn parse_alphabet(lines: &mut Lines) -> Result<BaseAlphabet> {
    let value = lines.field("alphabet")?;
    BaseAlphabet::from_tokens(value.split_whitespace()).map_err(|e| lines.back_error(e.to_string()))
}

fn parse_vocabulary(lines: &mut Lines) -> Result<Vocabulary> {
    let value = lines.field("vocabulary")?;
    Vocabulary::parse(value).map_err(|e| lines.back_error(e.to_string()))
}

fn parse_odd_block(lines: &mut Lines) -> Result<Odd> {
    let alphabet = parse_alphabet(lines)?;
    let arity = lines.number("arity")?;
    let width = lines.number("width")?;
    let length = lines.number("length")?;
    let mut layers = Vec::with_capacity(length);
    while lines.peek() == Some("LAYER") {
        lines.pos += 1;
        layers.push(parse_layer_body(lines, arity, width)?);
    }
    lines.keyword("END")?;
    if layers.len() != length {
        return Err(lines.back_error(format!("header declares {length} layers, found {}", layers.len())));
    }
    Ok(Odd::new(alphabet, arity, width, layers)?)
}

fn write_odd_block(out: &mut String, odd: &Odd) {
    let _ = writeln!(out, "alphabet: {}", odd.alphabet().tokens());
    let _ = writeln!(out, "arity: {}", odd.arity());
    let _ = writeln!(out, "width: {}", odd.width_bound());
    let _ = writeln!(out, "length: {}", odd.len());
    for layer in odd.layers() {
        out.push_str("LAYER\n");
        write_layer_body(out, &layer);
    }
    out.push_str("END\n");
}

fn finish(lines: &Lines) -> Result<()> {
    if lines.at_end() {
        Ok(())
    } else {
        Err(lines.error(format!("unexpected trailing content `{}`", lines.peek().unwrap_or(""))))
    }
}

pub fn parse_odd(text: &str) -> Result<Odd> {
    let mut lines = Lines::new(text);
    let odd = parse_odd_block(&mut lines)?;
    finish(&lines)?;
    Ok(odd)
}

pub fn write_odd(odd: &Odd) -> String {
    let mut out = String::new();
    write_odd_block(&mut out, odd);
    out
}

pub fn parse_structure(text: &str) -> Result<StructuralTuple> {
    let mut lines = Lines::new(text);
    lines.keyword("STRUCTURE")?;
    let vocabulary = parse_vocabulary(&mut lines)?;
    let mut odds = Vec::new();
    while !lines.at_end() {
        odds.push(parse_odd_block(&mut lines)?);
    }
    Ok(StructuralTuple::new(vocabulary, odds)?)
}

pub fn write_structure(t: &StructuralTuple) -> String {
    let mut out = String::from("STRUCTURE\n");
    let _ = writeln!(out, "vocabulary: {}", t.vocabulary());
    for odd in t.odds() {
        write_odd_block(&mut out, odd);
    }
    out
}

/// Shared header of class automata and layer strings.
struct Header {
    vocabulary: Vocabulary,
    alphabet: BaseAlphabet,
    width: usize,
    layers: HashMap<String, LayerId>,
}

fn parse_header(lines: &mut Lines) -> Result<Header> {
    let vocabulary = parse_vocabulary(lines)?;
    let alphabet = parse_alphabet(lines)?;
    let width = lines.number("width")?;
    lines.keyword("LAYERS")?;
    let mut layers = HashMap::new();
    while let Some(name) = lines.peek().and_then(|l| l.strip_prefix("LAYER ")) {
        let name = name.trim().to_string();
        lines.pos += 1;
        let arity = lines.number("arity")?;
        let layer = parse_layer_body(lines, arity, width)?;
        if layers.insert(name.clone(), LayerId::of(layer)).is_some() {
            return Err(lines.back_error(format!("layer `{name}` defined twice")));
        }
    }
    Ok(Header {
        vocabulary,
        alphabet,
        width,
        layers,
    })
}

fn parse_column(lines: &Lines, header: &Header, text: &str) -> Result<Vec<LayerId>> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| lines.back_error(format!("expected `(L1,...)`, found `{text}`")))?;
    inner
        .split(',')
        .map(|name| {
            let name = name.trim();
            header
                .layers
                .get(name)
                .copied()
                .ok_or_else(|| lines.back_error(format!("undefined layer `{name}`")))
        })
        .collect()
}

/// Names layers `L0, L1, …` in order of first use.
fn write_header<'a>(
    out: &mut String,
    vocabulary: &Vocabulary,
    alphabet: &BaseAlphabet,
    width: usize,
    used: impl IntoIterator<Item = &'a LayerId>,
) -> BTreeMap<LayerId, String> {
    let _ = writeln!(out, "vocabulary: {vocabulary}");
    let _ = writeln!(out, "alphabet: {}", alphabet.tokens());
    let _ = writeln!(out, "width: {width}");
    out.push_str("LAYERS\n");
    let mut names = BTreeMap::new();
    for id in used {
        if names.contains_key(id) {
            continue;
        }
        let name = format!("L{}", names.len());
        let layer = id.get();
        let _ = writeln!(out, "LAYER {name}");
        let _ = writeln!(out, "arity: {}", layer.arity);
        write_layer_body(out, &layer);
        names.insert(*id, name);
    }
    names
}

fn format_column(names: &BTreeMap<LayerId, String>, column: &[LayerId]) -> String {
    let parts: Vec<&str> = column.iter().map(|id| names[id].as_str()).collect();
    format!("({})", parts.join(","))
}

pub fn parse_class(text: &str) -> Result<ClassAutomaton> {
    let mut lines = Lines::new(text);
    lines.keyword("CLASS-AUTOMATON")?;
    let header = parse_header(&mut lines)?;
    let states = lines.next("STATES")?;
    let states: usize = states
        .strip_prefix("STATES")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| lines.back_error(format!("expected `STATES <n>`, found `{states}`")))?;
    let list = |lines: &mut Lines, key: &str| -> Result<Vec<usize>> {
        let line = lines.next(key)?;
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| lines.back_error(format!("expected `{key}`, found `{line}`")))?;
        rest.split_whitespace()
            .map(|t| t.parse().map_err(|_| lines.back_error(format!("bad state `{t}`"))))
            .collect()
    };
    let initial = list(&mut lines, "INITIAL")?;
    let finals = list(&mut lines, "FINAL")?;
    let mut transitions = Vec::new();
    while let Some(rest) = lines.peek().and_then(|l| l.strip_prefix("TRANS ")) {
        lines.pos += 1;
        let bad = || lines.back_error(format!("expected `TRANS q (L,...) q'`, found `TRANS {rest}`"));
        let open = rest.find('(').ok_or_else(bad)?;
        let close = rest.rfind(')').ok_or_else(bad)?;
        if close < open {
            return Err(bad());
        }
        let p: usize = rest[..open].trim().parse().map_err(|_| bad())?;
        let q: usize = rest[close + 1..].trim().parse().map_err(|_| bad())?;
        let column = parse_column(&lines, &header, &rest[open..=close])?;
        transitions.push((p, column, q));
    }
    finish(&lines)?;
    ClassAutomaton::new(header.vocabulary, header.alphabet, header.width, states, initial, finals, transitions)
}

pub fn write_class(class: &ClassAutomaton) -> String {
    let nfa = class.nfa();
    let layer_columns: Vec<(usize, Vec<LayerId>, usize)> = nfa
        .transitions()
        .map(|(p, column, q)| (p, column.iter().filter_map(layer_of).collect(), q))
        .collect();
    let mut out = String::from("CLASS-AUTOMATON\n");
    let names = write_header(
        &mut out,
        class.vocabulary(),
        class.alphabet(),
        class.width(),
        layer_columns.iter().flat_map(|(_, c, _)| c),
    );
    let _ = writeln!(out, "STATES {}", nfa.num_states());
    let join = |xs: Vec<usize>| xs.iter().map(|x| format!(" {x}")).collect::<String>();
    let _ = writeln!(out, "INITIAL{}", join(nfa.initial().to_vec()));
    let _ = writeln!(out, "FINAL{}", join((0..nfa.num_states()).filter(|&q| nfa.is_final(q)).collect()));
    for (p, column, q) in &layer_columns {
        let _ = writeln!(out, "TRANS {p} {} {q}", format_column(&names, column));
    }
    out
}

fn layer_of(sym: &TrackSym) -> Option<LayerId> {
    match sym {
        TrackSym::Layer(id) => Some(*id),
        _ => None,
    }
}

/// The layer string of `t`, one `(L,…)` line per column.
pub fn write_layer_string(t: &StructuralTuple) -> String {
    let columns: Vec<Vec<LayerId>> = (0..t.len())
        .map(|j| t.odds().iter().map(|d| d.layer_ids()[j]).collect())
        .collect();
    let mut out = String::from("LAYER-STRING\n");
    let names = write_header(&mut out, t.vocabulary(), t.alphabet(), t.width_bound(), columns.iter().flatten());
    out.push_str("STRING\n");
    for column in &columns {
        out.push_str(&format_column(&names, column));
        out.push('\n');
    }
    out
}

/// A parsed layer string with the header needed to decode it.
#[derive(Clone, Debug)]
pub struct LayerString {
    pub vocabulary: Vocabulary,
    pub alphabet: BaseAlphabet,
    pub width: usize,
    pub columns: Vec<Column>,
}

impl LayerString {
    pub fn decode(&self) -> Result<StructuralTuple> {
        string_to_tuple(&self.vocabulary, &self.alphabet, self.width, &self.columns)
    }
}

pub fn parse_layer_string(text: &str) -> Result<LayerString> {
    let mut lines = Lines::new(text);
    lines.keyword("LAYER-STRING")?;
    let header = parse_header(&mut lines)?;
    lines.keyword("STRING")?;
    let mut columns = Vec::new();
    while !lines.at_end() {
        let line = lines.next("a column")?;
        let column = parse_column(&lines, &header, line)?;
        columns.push(column.into_iter().map(TrackSym::Layer).collect());
    }
    Ok(LayerString {
        vocabulary: header.vocabulary,
        alphabet: header.alphabet,
        width: header.width,
        columns,
    })
}

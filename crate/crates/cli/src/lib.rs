//! The `oddmc` command line.
//!
//! Exit codes: 0 success (SAT, true), 1 negative answer (UNSAT, false,
//! invalid input file under `validate`), 2 input error, 3 resource limit.

use clap::{Args, Parser, Subcommand};
use oddmc_core::format::{
    parse_class, parse_layer_string, parse_odd, parse_structure, write_layer_string, write_odd,
    write_structure,
};
use oddmc_core::oracle::{count_brute, derive_structure};
use oddmc_core::structural::{binarize_structural, hypercube_tuple};
use oddmc_core::{check_class, count_assignments, model_check, parse_formula, BinaryEncoding, Error, Formula};
use oddmc_core::{StructuralTuple, Vocabulary};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "oddmc", version, about = "First-order model checking and counting over ODD-presented structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an .odd, .struct, .classnfa or layer-string file.
    Validate { file: PathBuf },
    /// Decide whether some structure of a class satisfies a sentence.
    Check {
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        formula: PathBuf,
        /// Write the witness structure here when SAT.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Count satisfying assignments with the automata pipeline.
    Count(CountArgs),
    /// Count satisfying assignments by brute force.
    OracleCount(CountArgs),
    /// Decide whether a structure satisfies a sentence.
    ModelCheck {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        formula: PathBuf,
    },
    /// Generate structures.
    #[command(subcommand)]
    Gen(Gen),
    /// Pad an ODD or every ODD of a structure to a given length.
    Pad {
        input: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-encode an ODD or a structure over {0,1}.
    Binarize {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the layer string of a structure.
    Encode {
        structure: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a layer string back into a structure.
    Decode {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long)]
    structure: PathBuf,
    #[arg(long)]
    formula: PathBuf,
    /// Comma-separated variable order; defaults to the sorted free variables.
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// The k-dimensional hypercube.
    Hypercube {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Limit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceLimit(_) => Failure::Limit(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: Error) -> Failure {
    match Failure::from(e) {
        Failure::Input(m) => Failure::Input(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn in_file<T>(path: &Path, r: oddmc_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| located(path, e))
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> Result<(), Failure> {
    match target {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn structure(path: &Path) -> Result<StructuralTuple, Failure> {
    in_file(path, parse_structure(&read(path)?))
}

fn formula(path: &Path, vocabulary: &Vocabulary) -> Result<Formula, Failure> {
    in_file(path, parse_formula(&read(path)?, vocabulary))
}

#[derive(PartialEq)]
enum Kind {
    Odd,
    Structure,
    Class,
    LayerString,
}

fn kind(text: &str) -> Kind {
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    match first {
        "STRUCTURE" => Kind::Structure,
        "CLASS-AUTOMATON" => Kind::Class,
        "LAYER-STRING" => Kind::LayerString,
        _ => Kind::Odd,
    }
}

/// Runs one command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Input(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Limit(m)) => {
            let _ = writeln!(err, "error: {m}");
            3
        }
    }
}

fn count(args: &CountArgs, out: &mut dyn Write, brute: bool) -> Result<i32, Failure> {
    let t = structure(&args.structure)?;
    let f = formula(&args.formula, t.vocabulary())?;
    let vars = args.vars.clone().unwrap_or_else(|| f.free_vars().into_iter().collect());
    let n = if brute {
        count_brute(&derive_structure(&t)?, &f, &vars)?
    } else {
        count_assignments(&t, &f, &vars)?
    };
    writeln!(out, "{n}")?;
    Ok(0)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Validate { file } => {
            let text = read(&file)?;
            let result = match kind(&text) {
                Kind::Odd => parse_odd(&text).map(|_| ()),
                Kind::Structure => parse_structure(&text).map(|_| ()),
                Kind::Class => parse_class(&text).map(|_| ()),
                Kind::LayerString => parse_layer_string(&text).and_then(|s| s.decode()).map(|_| ()),
            };
            match result {
                Ok(()) => {
                    writeln!(out, "valid")?;
                    Ok(0)
                }
                Err(e @ (Error::InvalidOdd(_) | Error::InvalidStructure(_))) => {
                    writeln!(out, "invalid: {e}")?;
                    Ok(1)
                }
                Err(e) => Err(located(&file, e)),
            }
        }
        Command::Check { class, formula: f, witness } => {
            let class_auto = in_file(&class, parse_class(&read(&class)?))?;
            let sentence = formula(&f, class_auto.vocabulary())?;
            let result = check_class(&class_auto, &sentence)?;
            match result.witness {
                Some(w) => {
                    writeln!(out, "SAT")?;
                    if let Some(path) = witness {
                        emit(out, Some(&path), &write_structure(&w.tuple))?;
                        writeln!(out, "witness: {}", path.display())?;
                    }
                    Ok(0)
                }
                None => {
                    writeln!(out, "UNSAT")?;
                    Ok(1)
                }
            }
        }
        Command::Count(args) => count(&args, out, false),
        Command::OracleCount(args) => count(&args, out, true),
        Command::ModelCheck { structure: s, formula: f } => {
            let t = structure(&s)?;
            let sentence = formula(&f, t.vocabulary())?;
            let holds = model_check(&t, &sentence)?;
            writeln!(out, "{holds}")?;
            Ok(if holds { 0 } else { 1 })
        }
        Command::Gen(Gen::Hypercube { k, out: target }) => {
            let t = hypercube_tuple(k)?;
            emit(out, target.as_deref(), &write_structure(&t))?;
            Ok(0)
        }
        Command::Pad { input, length, out: target } => {
            let text = read(&input)?;
            let padded = match kind(&text) {
                Kind::Odd => write_odd(&in_file(&input, parse_odd(&text))?.pad_to_length(length)?),
                Kind::Structure => {
                    let t = in_file(&input, parse_structure(&text))?;
                    let odds = t.odds().iter().map(|d| d.pad_to_length(length)).collect::<Result<Vec<_>, _>>()?;
                    write_structure(&StructuralTuple::new(t.vocabulary().clone(), odds).map_err(Error::from)?)
                }
                _ => return Err(Failure::Input(format!("{}: expected an ODD or a structure", input.display()))),
            };
            emit(out, target.as_deref(), &padded)?;
            Ok(0)
        }
        Command::Binarize { input, out: target } => {
            let text = read(&input)?;
            let binary = match kind(&text) {
                Kind::Odd => {
                    let d = in_file(&input, parse_odd(&text))?;
                    write_odd(&d.binarize(&BinaryEncoding::standard(d.alphabet()))?)
                }
                Kind::Structure => {
                    let t = in_file(&input, parse_structure(&text))?;
                    write_structure(&binarize_structural(&t, &BinaryEncoding::standard(t.alphabet()))?)
                }
                _ => return Err(Failure::Input(format!("{}: expected an ODD or a structure", input.display()))),
            };
            emit(out, target.as_deref(), &binary)?;
            Ok(0)
        }
        Command::Encode { structure: s, out: target } => {
            let t = structure(&s)?;
            emit(out, target.as_deref(), &write_layer_string(&t))?;
            Ok(0)
        }
        Command::Decode { input, out: target } => {
            let s = in_file(&input, parse_layer_string(&read(&input)?))?;
            let t = in_file(&input, s.decode())?;
            emit(out, target.as_deref(), &write_structure(&t))?;
            Ok(0)
        }
    }
}

//! First-order model checking and counting over structures presented by
//! ordered decision diagrams (ODDs).
//!
//! A structure is given as a tuple of ODDs: one for the domain and one per
//! relation symbol. Formulas compile into automata over layer strings, which
//! decide satisfiability over classes of such tuples and count satisfying
//! assignments on a single tuple.

pub mod alphabet;
pub mod automaton;
pub mod engine;
pub mod error;
pub mod fo;
pub mod format;
pub mod generators;
mod intern;
pub mod odd;
pub mod oracle;
pub mod par;
pub mod relations;
pub mod structural;

pub use alphabet::{BaseAlphabet, BaseSymbol, PaddedSymbol, TupleSymbol, Word};
pub use engine::{check_class, count_assignments, model_check, CheckResult, Witness};
pub use error::{Error, OddError, Result, StructuralError};
pub use fo::{normalize, parse_formula, Formula};
pub use odd::{BinaryEncoding, Layer, LayerId, Odd};
pub use relations::Relation;
pub use structural::{ClassAutomaton, StructuralTuple, Vocabulary};

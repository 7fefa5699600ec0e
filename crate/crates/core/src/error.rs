use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed convolution: {0}")]
    MalformedConvolution(String),

    #[error("invalid ODD: {0}")]
    InvalidOdd(#[from] OddError),

    #[error("invalid structural tuple: {0}")]
    InvalidStructure(#[from] StructuralError),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),

    #[error("relation `{name}` has arity {expected}, used with {found} arguments")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("free variable `{0}` is not bound by the context")]
    FreeVariable(String),

    #[error("formula is not normalized: found {0}")]
    NotNormalized(&'static str),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

/// First violated ODD condition, with the 1-based index of the offending layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OddError {
    #[error("an ODD needs at least one layer")]
    NoLayers,
    #[error("layer {layer}: state {state} is outside 0..{width}")]
    StateOutOfRange {
        layer: usize,
        state: u32,
        width: usize,
    },
    #[error("layer {layer}: transition references undeclared frontier state {state}")]
    UndeclaredState { layer: usize, state: u32 },
    #[error("layer {layer}: initial/final states are not contained in the frontier")]
    InitialFinalOutsideFrontier { layer: usize },
    #[error("layer {layer}: initial states present while the initial flag is false")]
    InitialWithoutFlag { layer: usize },
    #[error("layer {layer}: final states present while the final flag is false")]
    FinalWithoutFlag { layer: usize },
    #[error("layer {layer}: left frontier differs from the right frontier of layer {previous}")]
    FrontierMismatch { layer: usize, previous: usize },
    #[error("layer {layer}: initial flag must be set exactly on the first layer")]
    InitialFlagPlacement { layer: usize },
    #[error("layer {layer}: final flag must be set exactly on the last layer")]
    FinalFlagPlacement { layer: usize },
    #[error("layer {layer}: transition symbol has arity {found}, expected {expected}")]
    SymbolArity {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer}: transition symbol `{symbol}` is not over the ODD alphabet")]
    ForeignSymbol { layer: usize, symbol: String },
    #[error("layer {layer}: layer arity {found} differs from ODD arity {expected}")]
    LayerArity {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer}: layer width bound {found} differs from ODD width bound {expected}")]
    LayerWidth {
        layer: usize,
        expected: usize,
        found: usize,
    },
}

/// Violations of the structural-tuple conditions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("expected {expected} ODDs (domain plus one per relation), found {found}")]
    TrackCount { expected: usize, found: usize },
    #[error("ODD {index} has length {found}, the domain ODD has length {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("ODD {index} has arity {found}, expected {expected}")]
    ArityMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("ODD {index} has width {found}, above the bound {bound}")]
    WidthExceeded {
        index: usize,
        found: usize,
        bound: usize,
    },
    #[error("ODD {index} has width bound {found}, expected {expected}")]
    WidthBoundMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("ODD {index} is over a different base alphabet than the domain ODD")]
    AlphabetMismatch { index: usize },
    #[error("ODD {index}: {source}")]
    Odd { index: usize, source: OddError },
    #[error("relation ODD {index} accepts a tuple with a component outside the domain")]
    NotContainedInDomain { index: usize },
    #[error("the domain ODD accepts no string (structures need a non-empty domain)")]
    EmptyDomain,
}

use thiserror::Error;

use crate::net::{PlaceId, TransitionId, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid identifier {0:?}")]
    InvalidId(String),
    #[error("duplicate identifier {0}")]
    DuplicateId(String),
    #[error("transition {0} has an empty pre-set")]
    EmptyPreset(TransitionId),
    #[error("transition {transition} refers to undeclared place {place}")]
    DanglingReference {
        transition: TransitionId,
        place: PlaceId,
    },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("not an occurrence net: {}", list_violations(.0))]
    NotOccurrence(Vec<Violation>),
    #[error("marked place {0} is not initial")]
    MarkedNonInitial(PlaceId),
    #[error("marked place {0} is isolated")]
    MarkedIsolated(PlaceId),
    #[error("initial place {0} is not marked")]
    UnmarkedInitial(PlaceId),
    #[error("transition {0} is not enabled")]
    NotEnabled(TransitionId),
}

fn list_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn list<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("parallel composition overlaps on {{{}}}", list(.0))]
    Overlap(Vec<String>),
    #[error("sequential interface mismatch on {{{}}} (left outputs {{{}}}, right inputs {{{}}})", list(.difference), list(.left_outputs), list(.right_inputs))]
    InterfaceMismatch {
        left_outputs: Vec<PlaceId>,
        right_inputs: Vec<PlaceId>,
        difference: Vec<String>,
    },
    #[error("cannot remove place {0}: not an unmarked initial place")]
    NotRemovable(PlaceId),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TermError {
    #[error("parallel operands share {{{}}}", list(.0))]
    Overlap(Vec<String>),
    #[error("sequential mismatch: left outputs {{{}}}, right inputs {{{}}}", list(.left_outputs), list(.right_inputs))]
    InterfaceMismatch {
        left_outputs: Vec<PlaceId>,
        right_inputs: Vec<PlaceId>,
    },
    #[error("sequential operands share {{{}}} beyond their interface", list(.0))]
    HiddenShare(Vec<String>),
    #[error("sum over {inputs} is missing the branch for {missing}")]
    MissingBranch { inputs: String, missing: String },
    #[error("sum over {inputs} has a branch for {extra}, which is not a subset of its inputs")]
    ForeignBranch { inputs: String, extra: String },
    #[error("sum branch {branch}: {reason}")]
    BranchType { branch: String, reason: String },
    #[error("sum inputs {0} do not occur in any branch")]
    UncoveredInputs(String),
    #[error("constant has no transactions")]
    EmptyConstant,
    #[error("normal form changed the type")]
    NormalizeType,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("recursion depth limit {0} exceeded")]
    DepthExceeded(usize),
    #[error("cell restricted to inputs {marking} strands non-final place(s) {places}")]
    StrandedPlace { marking: String, places: String },
    #[error("not an s-cell: {0}")]
    NotACell(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KleisliError {
    #[error("wiring repeats place {0}")]
    RepeatedPlace(PlaceId),
    #[error("place {0} is not on the wiring")]
    ForeignPlace(PlaceId),
    #[error("wirings cover different place sets")]
    SetMismatch,
    #[error("wiring mismatch: expected ({expected}), found ({found})")]
    WiringMismatch { expected: String, found: String },
    #[error("copair needs {expected} rows, got {found}")]
    RowCount { expected: usize, found: usize },
    #[error("interface of width {width} exceeds the cap {cap} (the matrix would have 2^{width} rows or columns)")]
    WidthExceeded { width: usize, cap: usize },
    #[error("no distribution for constant {0}")]
    MissingDelta(String),
    #[error(
        "distribution for {signature} mentions {transaction}, which is not one of its transactions"
    )]
    ForeignTransaction {
        signature: String,
        transaction: String,
    },
    #[error("distribution for {signature} is invalid: {reason}")]
    BadDistribution { signature: String, reason: String },
    #[error("matrix shape {rows}x{cols} does not match its wirings")]
    Shape { rows: usize, cols: usize },
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferError {
    #[error("conditioning on a predicate of zero validity")]
    ZeroValidity,
    #[error("predicate value {0} outside [0,1]")]
    PredicateRange(f64),
    #[error(transparent)]
    Kleisli(#[from] KleisliError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} is not a configuration")]
    NotAConfiguration(String),
    #[error("marking {marking} is not contained in the inputs {inputs}")]
    ForeignMarking { marking: String, inputs: String },
    #[error("branching cell with outcomes {0} has no distribution")]
    MissingCellDistribution(String),
    #[error("{0} events exceed the oracle limit of 64")]
    TooManyEvents(usize),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Kleisli(#[from] KleisliError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Kleisli(#[from] KleisliError),
}

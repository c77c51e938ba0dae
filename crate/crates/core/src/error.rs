use thiserror::Error;

use crate::constructions::Hypothesis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("operation `{symbol}` has arity {expected}, got {got} arguments")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("element {element} out of range for carrier of size {size}")]
    ElementOutOfRange { element: u64, size: usize },
    #[error("power over an empty coordinate set")]
    EmptyCoordinateSet,
    #[error("closure exceeded budget of {budget} elements")]
    ClosureBudgetExceeded { budget: usize },
    #[error("search exceeded budget of {budget} steps")]
    SearchBudgetExceeded { budget: usize },
    #[error("congruence lattice exceeded budget of {budget} congruences")]
    LatticeBudgetExceeded { budget: usize },
    #[error("partition is not compatible with the operations of `{algebra}`")]
    IncompatibleCongruence { algebra: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("relation is not square ({src}x{dst})")]
    NotSquare { src: usize, dst: usize },
    #[error("map is not surjective: {0} is not hit")]
    NotSurjective(u64),
    #[error("operands live on different algebras")]
    AlgebraMismatch,
    #[error("enumeration of Mal'tsev operations is supported only for n <= 3 (got {0})")]
    SizeUnsupported(usize),
    #[error("`{0}` has no Mal'tsev term")]
    NotMaltsev(String),
    #[error("candidate commutators have no least element")]
    NoLeastElement,
    #[error("more than one connector exists; the ambient algebra is outside the Mal'tsev regime")]
    NonMaltsevAmbiguity,
    #[error("ternary operation is not a homomorphism X^3 -> X")]
    NotInternalOperation,
    #[error("ternary operation is not a Mal'tsev operation")]
    NotMaltsevOp,
    #[error("group axiom failed: {0}")]
    GroupAxiomFailure(String),
    #[error("direction needs a nonempty carrier")]
    EmptyCarrier,
    #[error("elements {0} and {1} lie in different fibres")]
    DifferentFibers(u64, u64),
    #[error("mismatched extension data: {0}")]
    MismatchedData(String),
    #[error("internal axiom failure: {0}")]
    InternalAxiomFailure(String),
    #[error("invalid square: {0}")]
    InvalidSquare(String),
    #[error("invalid 3x3 diagram: {0}")]
    InvalidDiagram(String),
    #[error("hypothesis `{which}` failed")]
    HypothesisFailed { which: Hypothesis },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownSymbol(_) => "UnknownSymbol",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::ElementOutOfRange { .. } => "ElementOutOfRange",
            Error::EmptyCoordinateSet => "EmptyCoordinateSet",
            Error::ClosureBudgetExceeded { .. } => "ClosureBudgetExceeded",
            Error::SearchBudgetExceeded { .. } => "SearchBudgetExceeded",
            Error::LatticeBudgetExceeded { .. } => "LatticeBudgetExceeded",
            Error::IncompatibleCongruence { .. } => "IncompatibleCongruence",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::NotSurjective(_) => "NotSurjective",
            Error::AlgebraMismatch => "AlgebraMismatch",
            Error::SizeUnsupported(_) => "SizeUnsupported",
            Error::NotMaltsev(_) => "NotMaltsev",
            Error::NoLeastElement => "NoLeastElement",
            Error::NonMaltsevAmbiguity => "NonMaltsevAmbiguity",
            Error::NotInternalOperation => "NotInternalOperation",
            Error::NotMaltsevOp => "NotMaltsevOp",
            Error::GroupAxiomFailure(_) => "GroupAxiomFailure",
            Error::EmptyCarrier => "EmptyCarrier",
            Error::DifferentFibers(..) => "DifferentFibers",
            Error::MismatchedData(_) => "MismatchedData",
            Error::InternalAxiomFailure(_) => "InternalAxiomFailure",
            Error::InvalidSquare(_) => "InvalidSquare",
            Error::InvalidDiagram(_) => "InvalidDiagram",
            Error::HypothesisFailed { .. } => "HypothesisFailed",
            Error::Parse { .. } => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::Io(_) => "IoError",
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::ClosureBudgetExceeded { .. }
                | Error::SearchBudgetExceeded { .. }
                | Error::LatticeBudgetExceeded { .. }
        )
    }
}

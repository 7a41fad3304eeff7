use thiserror::Error;

use crate::symcore::SymError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("expected {expected} factors, found {found}")]
    FactorCount { expected: usize, found: usize },
    #[error("factor {factor} is not normalized: component along {coord} is `{value}`")]
    NotNormalized {
        factor: usize,
        coord: String,
        value: String,
    },
    #[error("multivector field is not transverse (base determinant `{0}`)")]
    NotTransverse(String),
    #[error("chart has no jet coordinates")]
    NoJetCoordinates,
    #[error("jet field is not a SOPDE: F{a}_{mu} - v = `{residual}`")]
    NotSopde { a: usize, mu: usize, residual: String },
    #[error("Euler-Lagrange system is not regular: {0}")]
    NotRegular(String),
    #[error("no value assigned to free unknown `{0}`")]
    MissingAssignment(String),
    #[error("symmetry defect is nonzero: {0}")]
    NonzeroDefect(String),
    #[error("form degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("initial point violates constraint `{constraint}` by {value:e}")]
    ConstraintViolation { constraint: String, value: f64 },
    #[error("flow step rejected: {0}")]
    StepRejected(String),
    #[error("grid too small for the stencil: {0}")]
    GridTooSmall(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("computation cancelled")]
    Cancelled,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Expression engine: parsing, exact arithmetic, calculus and zero-testing.

mod eval;
mod expr;
mod factor;
mod matrix;
mod parse;
mod poly;
mod zero;

pub use eval::CompiledExpr;
pub use expr::{Expr, Node};
pub use factor::factor_constraint;
pub use matrix::{Matrix, RankInfo};
pub use parse::{parse, parse_with};
pub use poly::{Func, RatFunc};
pub use zero::{is_zero, Confidence, SimplifyConfig, ZeroVerdict};

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent out of range")]
    ExponentTooLarge,
    #[error("exponent must be a rational constant")]
    NonConstantExponent,
    #[error("undefined value: {0}")]
    Undefined(String),
    #[error("numeric sampling failed: only {valid} of {required} points were regular after {attempts} attempts")]
    SamplingFailed {
        valid: usize,
        required: usize,
        attempts: usize,
    },
}

/// Partial derivative, normalized.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    e.diff(var)
}

/// Simultaneous substitution followed by normalization.
pub fn substitute(e: &Expr, bindings: &HashMap<String, Expr>) -> Result<Expr, SymError> {
    e.subs(bindings)
}

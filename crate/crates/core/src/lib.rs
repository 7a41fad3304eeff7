//! Symbolic-numeric engine for multivector fields on jet bundles.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod jet;
pub mod lagrangian;
pub mod noether;
pub mod numeric;
pub mod symcore;

pub use error::{Error, Result};
pub use geometry::{ChartSpec, DecomposableMVF, VectorField};
pub use symcore::{Confidence, Expr, SimplifyConfig, SymError};

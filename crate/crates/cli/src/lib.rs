//! Problem files, command dispatch and reports for the `multijet` binary.

pub mod commands;
pub mod dsl;
pub mod problem;
pub mod report;

pub use commands::{run, Command, Settings};
pub use report::Report;

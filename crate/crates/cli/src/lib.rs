//! Command-line front end: system descriptions in, JSON run reports out.

pub mod commands;
pub mod input;
pub mod report;

pub use commands::{execute, Command, Outcome, INPUT_ERROR};
pub use input::{InputError, SystemDescription};
pub use report::{CheckRecord, RunReport, Status};

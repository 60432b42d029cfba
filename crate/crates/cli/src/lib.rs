//! Problem files, command dispatch and report output for the `hamsfl` tool.

pub mod commands;
pub mod error;
pub mod output;
pub mod problem;

pub use commands::{run_command, Command, Outcome, Status};
pub use error::CliError;
pub use problem::{parse_problem, ProblemSpec};

//! Input files, reports, tree generation, the Monte-Carlo oracle and the
//! command-line front end.

pub mod generate;
pub mod input;
pub mod oracle;
pub mod report;
pub mod run;

pub use generate::{generate_expanded_tree, generate_tree, GenerateError, DEFAULT_NODE_CAP};
pub use input::{parse_input, parse_str, InputError, InputFile, Model, ParsedInput};
pub use oracle::{monte_carlo_acceptability, monte_carlo_at, OracleEstimate};
pub use report::Report;
pub use run::{execute, run, Cli, CliError, Command};

//! Command-line runner and network node for txforge sessions.

pub mod commands;
pub mod http;
pub mod node;

pub use commands::{execute, Cli, CliError, Command};
pub use node::Node;

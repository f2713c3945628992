//! Library surface of the nodal CLI: configuration, output rendering and
//! the subcommand implementations, kept separate from the binary so they
//! can be tested directly.

pub mod commands;
pub mod config;
pub mod output;

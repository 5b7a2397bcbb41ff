//! Command implementations and HTTP routes behind the `redund` binary.

pub mod cli;
pub mod commands;
pub mod server;

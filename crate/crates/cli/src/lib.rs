//! Command-line front end and HTTP advisor for `faultbandit-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod server;

//! Configuration loading and subcommands of the `trilevel-heat` binary.

pub mod commands;
pub mod config;

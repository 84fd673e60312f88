//! Experiment harness around `vde-core`: configuration, file formats, and
//! the subcommand implementations behind the `vde` binary.

pub mod commands;
pub mod config;
pub mod formats;

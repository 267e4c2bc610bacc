//! Library backing the `cnlqnn` binary: experiment configuration, run-directory
//! artifacts, dataset loading, and the five subcommand implementations.
//!
//! The binary in `main.rs` is a thin argument-parsing layer over
//! [`commands`]; integration tests exercise both this library and the
//! compiled binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;

//! Configuration, sweeps and validation reports for the `hybrid-repeater` command.

pub mod config;
pub mod report;
pub mod sweep;

//! Experiment driver for the phase-field tumour-growth model: configuration
//! parsing, run orchestration, and artifact emission on top of `chb-core`.

pub mod commands;
pub mod config;
pub mod output;

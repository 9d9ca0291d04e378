//! Driver layer: run configuration, problem presets, diagnostics, and
//! deterministic file outputs for the sparse-grid VPLB solver.

pub mod config;
pub mod diagnostics;
pub mod outputs;
pub mod runner;

//! Benchmark problems, run configuration, drivers and output writers.

pub mod config;
pub mod drivers;
pub mod output;
pub mod problems;

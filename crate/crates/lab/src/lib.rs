//! Experiment runner for the `dirac-core` solvers: config parsing, run
//! directories, CSV output and the named experiments.

pub mod config;
pub mod csvout;
pub mod experiments;
pub mod runner;

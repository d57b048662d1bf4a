//! Experiment harness for coarse-to-fine inference: reads image inputs,
//! runs flat, static-lifted, threshold-baseline or coarse-to-fine solves,
//! and writes label maps, traces, partition dumps and a run manifest.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use config::{exit_code, Mode, RunConfig, Task};
pub use run::{execute, run, RunOutcome};

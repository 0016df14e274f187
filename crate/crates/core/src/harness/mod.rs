//! Experiment configuration, checkpoints, end-to-end runs and reports.

pub mod checkpoint;
pub mod config;
pub mod pipeline;
pub mod report;

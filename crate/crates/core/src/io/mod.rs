//! Configuration, CSV, checkpoints and report files.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod report;

//! Trajectory playback, benchmarking and the interactive session service.

pub mod bench;
pub mod builtin;
pub mod engine;
pub mod error;
pub mod report;
pub mod run;
pub mod service;
pub mod trajectory;

//! Library surface of the negative-volume CLI: configuration, the pipeline
//! orchestrator, and the phantom/stage helpers the binary wires together.

pub mod config;
pub mod phantom_files;
pub mod pipeline;

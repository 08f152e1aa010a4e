//! Orchestration layer for the vitasim toolkit: configuration files,
//! the synthesis pipeline, synthetic training-set generation, the
//! direction-of-change evaluation harness, and all file I/O.

pub mod config;
pub mod datagen;
pub mod evaldir;
pub mod fileio;
pub mod pipeline;

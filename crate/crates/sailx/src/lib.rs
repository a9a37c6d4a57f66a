//! File formats, experiment orchestration and the command line for the
//! SAILx laboratory. The models and generators live in `sailx-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod experiment;
pub mod formats;
pub mod manifest;
pub mod render;

pub use sailx_core as core;

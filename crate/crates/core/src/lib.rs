//! Core of the SAILx laboratory: procedurally generated maze worlds, paired
//! instruction/action data, a sequence-to-sequence navigator with channel
//! attention over a grid percept, and learning-efficiency evaluation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel orchestration live in the `sailx` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod datastore;
pub mod evalbench;
pub mod langgen;
pub mod math;
pub mod navmodel;
pub mod nnet;
pub mod percept;
pub mod rng;
pub mod worldsim;

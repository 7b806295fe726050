//! Noise-induced synchronization in open XY spin chains.
//!
//! Build a [`chain::ChainSpec`], evolve an initial [`evolve::DensityMatrix`]
//! with [`evolve::lindblad_evolve`] or an ensemble of synthesized noise
//! trajectories, and inspect the result with [`analysis`].

pub mod analysis;
pub mod chain;
pub mod config;
pub mod error;
pub mod evolve;
pub mod experiment;
pub mod format;
pub mod linalg;
pub mod mems;
pub mod noise;

pub use error::{Error, Result};

//! Simulator for a single-excitation bosonic pulse used as a clock that
//! switches the Hamiltonian of a finite-dimensional engine.
//!
//! The clock is propagated spectrally on a periodic grid, the joint state is
//! advanced with a split-step integrator, and small instances can be checked
//! against dense exact evolution.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clock;
pub mod config;
pub mod engine;
pub mod error;
pub mod exec;
pub mod oracle;
pub mod output;
pub mod propagator;
pub mod protocol;
pub mod run;
pub mod scenarios;
pub mod sweep;
pub mod timeops;
pub mod verify;

pub use error::{Error, Result};

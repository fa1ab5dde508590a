//! Allocation-only core of an imitation-learning engine for exploratory data
//! analysis (EDA) sessions.
//!
//! Everything here is pure computation over in-memory values: the tabular
//! engine, the session MDP, interestingness measures, the synthetic data and
//! expert-session generator, the small neural networks with hand-written
//! gradients, the adversarial imitation trainer, and the session metrics.
//! File formats, IO and the command line live in the `autoeda` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod env;
pub mod error;
pub mod eval;
pub mod math;
pub mod measures;
pub mod nn;
pub mod seed;
pub mod synth;
pub mod tabular;
pub mod train;

pub use error::{Error, Result};

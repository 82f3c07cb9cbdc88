//! Self-interacting random walks on graphs: discrete simulators, continuous
//! time-lines constructions, a monotone coupling, online diagnostics and a
//! replicated-experiment harness.

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod timelines;
pub mod urns;
pub mod walk;
pub mod weights;
pub mod window;

pub use error::{Error, Result};

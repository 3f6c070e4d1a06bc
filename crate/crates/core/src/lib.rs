//! Nested multi-agent reasoning with amortized inference.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: interactive-state beliefs, the exact and importance-sampling
//! inference engines, a small feed-forward network stack used for learned
//! proposals, and the two simulated domains (the Construction grid world and
//! the intersection Driving world). File formats, the CLI and the evaluation
//! harness live in the `nested-tom` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod construction;
pub mod driving;
pub mod error;
pub mod inference;
pub mod ipomdp;
pub mod math;
pub mod neural;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};

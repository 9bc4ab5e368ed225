#![no_std]
//! Finite LOCC protocol trees over multipartite quantum systems.
//!
//! The crate evaluates state-discrimination success of a protocol tree and
//! compresses the number of outcomes per local measurement in two ways:
//!
//! * [`compress`] rewrites every measurement on a `d`-dimensional local system
//!   into one with at most `2·d²` outcomes while keeping the success
//!   probability unchanged.
//! * [`slim`] splits a fine-grained protocol into a convex mixture of slim
//!   protocols (at most `d²` nonzero outcomes per measurement), picks the best
//!   one for the discrimination objective, and bounds the shared randomness
//!   needed to reproduce the original instrument exactly.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! live in the `locc-slim` crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod caratheodory;
pub mod compress;
mod error;
pub mod generate;
pub mod numerics;
pub mod quantum;
pub mod slim;
pub mod tree;

pub use error::Error;
pub use num_complex::Complex64;

//! Core of a simulator for bandits with concave rewards and convex knapsacks.
//!
//! Everything here is deterministic given a seed and free of IO, so the crate
//! builds with `#![no_std]` (an allocator is required). The `bwcr-sim` crate
//! adds configuration files, CSV traces and the command line.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algorithms;
pub mod benchmark;
pub mod confidence;
pub mod error;
pub mod geometry;
pub mod math;
pub mod model;
pub mod objective;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};

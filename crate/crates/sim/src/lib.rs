//! Configuration files, instance generators, the experiment runner and the
//! acceptance checks for `bwcr-core`.

pub mod config;
pub mod error;
pub mod generate;
pub mod runner;
pub mod stats;
pub mod verify;

pub use error::{Result, SimError};

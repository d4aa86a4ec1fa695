//! Testable learning with queries over `{0,1}^n` and the reductions that turn
//! testable learners into refuters, feature selectors and weak learners.
//!
//! Coordinates are 1-indexed throughout the public API. Subsets of coordinates
//! are `u32` bitmasks where bit `i - 1` stands for coordinate `i`.

pub mod boolean_core;
pub mod error;
pub mod learners;
pub mod oracles;
pub mod reductions;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

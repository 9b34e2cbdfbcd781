//! Complex multiplicative cascades: b-adic, compound Poisson and
//! log-infinitely divisible constructions, their convergence theory and
//! the fine analysis of the limiting paths.

pub mod analysis;
pub mod badic;
pub mod cascades;
pub mod catalog;
pub mod convergence;
pub mod error;
pub mod numerics;
pub mod rng;
pub mod simulate;
pub mod schedule;
pub mod weights;

pub use error::{CascadeError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

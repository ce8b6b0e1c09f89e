pub mod analysis;
pub mod baselines;
pub mod corrsh;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};

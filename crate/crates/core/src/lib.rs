pub mod automlp;
pub mod baselines;
pub mod class_outlier;
pub mod data;
pub mod distance;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mlp;
pub mod rng;

pub use error::{Error, Result};

//! Sparse time-varying parameter regressions and VARs with global-local
//! shrinkage priors, stochastic volatility and draw-wise sparsification.

pub mod cli;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod models;
pub mod priors;
pub mod savs;
pub mod state_space;
pub mod stochvol;

pub use error::{Error, Result};

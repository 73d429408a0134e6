//! Biased label distribution learning toolkit.
//!
//! Recovers true label distributions from biased annotations through their
//! multi-hot degradations while training a low-rank-regularized predictor,
//! and ships the simulation, metric, and statistical machinery needed to
//! evaluate the approach end to end.

pub mod bias;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod svt;
pub mod types;

pub use error::{Error, Result};

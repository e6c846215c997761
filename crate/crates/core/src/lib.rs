//! Robust test for the equality of `k` nonparametric regression curves.
//!
//! Each population is smoothed by a local M-estimator (or Nadaraya-Watson for
//! the classical variant), a pooled curve is built as the density-weighted
//! mixture of the fits, and the residual empirical characteristic functions
//! under both fits are compared in a weighted `L2` norm. The null law of the
//! statistic is a weighted sum of chi-square variables estimated by plug-in.
//!
//! ```no_run
//! use robust_curves::{pipeline::{run_test, TestConfig}, smoothing::Sample};
//! # fn data() -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) { unimplemented!() }
//! let (x1, y1, x2, y2) = data();
//! let samples = vec![
//!     Sample::new("a", x1, y1).unwrap(),
//!     Sample::new("b", x2, y2).unwrap(),
//! ];
//! let outcome = run_test(&samples, &TestConfig::default()).unwrap();
//! println!("T = {}, p = {}", outcome.result.t, outcome.result.p_value);
//! ```

pub mod bandwidth;
pub mod ecf;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod robust;
pub mod simulation;
pub mod smoothing;

pub use error::{Error, Result};

//! Evidence (marginal likelihood) estimation for univariate Gaussian mixtures.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: log-domain arithmetic, label permutations, densities and
//!   splittable random streams.
//! - [`model`]: the mixture likelihood, the two exchangeable prior families and
//!   the Gibbs block conditionals, including the normalised block kernel that
//!   every Rao–Blackwellised density is built from.
//! - [`gibbs`]: the data-augmentation sampler.
//! - [`relabel`]: pivot-based removal of label switching.
//! - [`estimators`]: Chib's estimator (plain, `k!`-scaled and
//!   permutation-averaged), plug-in and dual importance sampling, the truncated
//!   dual scheme with its calibration step, Rao–Blackwellised importance
//!   sampling and iterative bridge sampling.
//! - [`harness`]: datasets, experiment configuration, the replicate runner and
//!   the CSV/JSON outputs.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the default `parallel`
//! feature they run on rayon, otherwise they fall back to plain iteration.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod exec;
pub mod gibbs;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod relabel;

pub use error::{Error, Result};
pub use exec::Exec;

//! Numerical building blocks shared by every other module.

pub mod dist;
pub mod logspace;
pub mod permutation;
pub mod rng;

pub use dist::{DistSpec, Variate};
pub use logspace::{log_add_exp, log_mean_exp, log_sum_exp, try_log_sum_exp};
pub use permutation::{enumerate_permutations, factorial, Permutation, MAX_ENUMERATED_K};
pub use rng::{RngStream, Role, StreamRng};

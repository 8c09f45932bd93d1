//! Univariate Gaussian mixture: data, parameters, priors, likelihood and the
//! Gibbs block conditionals.

mod conditionals;
mod dataset;
mod kernel;
mod params;
mod prior;

pub use conditionals::{
    allocation_conditional, full_conditionals, mean_conditional_moments, sample_allocation,
    variance_conditional_params, AllocationConditional, BlockConditionals, SufficientStats,
};
pub use dataset::Dataset;
pub use kernel::{log_block_density, BlockKernel};
pub use params::{Allocation, Draw, MixtureParams};
pub use prior::PriorSpec;

use crate::numerics::{dist::normal_ln_pdf, log_sum_exp};

/// `Σⱼ ln Σᵢ λᵢ N(xⱼ; μᵢ, σ²ᵢ)`.
pub fn log_likelihood(data: &Dataset, params: &MixtureParams) -> f64 {
    let k = params.k();
    let log_w: Vec<f64> = params.weights().iter().map(|w| w.ln()).collect();
    let mut row = vec![0.0; k];
    data.values()
        .iter()
        .map(|&x| {
            for i in 0..k {
                row[i] = log_w[i] + normal_ln_pdf(x, params.means()[i], params.variances()[i]);
            }
            log_sum_exp(&row)
        })
        .sum()
}

/// Unnormalised log-posterior `ln π(θ) + ln p(x | θ)`.
pub fn log_posterior_unnormalized(
    data: &Dataset,
    prior: &PriorSpec,
    params: &MixtureParams,
) -> f64 {
    prior.log_prior(params) + log_likelihood(data, params)
}

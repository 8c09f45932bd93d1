//! Full conditionals of the data-augmentation Gibbs sampler.

use rand::Rng;

use super::{Allocation, Dataset, MixtureParams, PriorSpec};
use crate::numerics::dist::{normal_ln_pdf, sample_categorical};
use crate::numerics::DistSpec;

/// Per-component counts, sums and sums of squares under an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub counts: Vec<usize>,
    pub sums: Vec<f64>,
    pub sum_squares: Vec<f64>,
}

impl SufficientStats {
    pub fn new(data: &Dataset, alloc: &Allocation) -> Self {
        let k = alloc.k();
        let mut s = SufficientStats {
            counts: vec![0; k],
            sums: vec![0.0; k],
            sum_squares: vec![0.0; k],
        };
        for (&x, &z) in data.values().iter().zip(alloc.labels()) {
            s.counts[z] += 1;
            s.sums[z] += x;
            s.sum_squares[z] += x * x;
        }
        s
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// `Σ_{zⱼ=i} (xⱼ − μ)²`.
    pub fn squared_deviation(&self, i: usize, mu: f64) -> f64 {
        let n = self.counts[i] as f64;
        (self.sum_squares[i] - 2.0 * mu * self.sums[i] + n * mu * mu).max(0.0)
    }
}

/// Normal full conditional of one mean given its variance: returns
/// `(mean, variance)` from the precision-weighted combination of prior and data.
pub fn mean_conditional_moments(
    count: usize,
    sum: f64,
    variance: f64,
    prior: &PriorSpec,
) -> (f64, f64) {
    let (m0, v0) = prior.mean_prior();
    let precision = 1.0 / v0 + count as f64 / variance;
    let mean = (m0 / v0 + sum / variance) / precision;
    (mean, 1.0 / precision)
}

/// IG full conditional of one variance: `(shape, scale)`.
pub fn variance_conditional_params(
    count: usize,
    sq_dev: f64,
    prior: &PriorSpec,
    beta: Option<f64>,
) -> (f64, f64) {
    (
        prior.var_shape() + 0.5 * count as f64,
        prior.var_scale(beta) + 0.5 * sq_dev,
    )
}

/// The block conditionals evaluated at one state of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockConditionals {
    /// `λ | z ~ Dirichlet(1 + n₁, …, 1 + n_k)`.
    pub weights: DistSpec,
    /// `μᵢ | σ²ᵢ, z, x`.
    pub means: Vec<DistSpec>,
    /// `σ²ᵢ | μᵢ, z, x` (and `β` when hierarchical).
    pub variances: Vec<DistSpec>,
    /// `β | σ²` for the hierarchical prior.
    pub beta: Option<DistSpec>,
}

pub fn weights_conditional(stats: &SufficientStats) -> DistSpec {
    DistSpec::Dirichlet {
        concentration: stats.counts.iter().map(|&n| 1.0 + n as f64).collect(),
    }
}

pub fn mean_conditional(
    stats: &SufficientStats,
    i: usize,
    variance: f64,
    prior: &PriorSpec,
) -> DistSpec {
    let (mean, variance) =
        mean_conditional_moments(stats.counts[i], stats.sums[i], variance, prior);
    DistSpec::Normal { mean, variance }
}

pub fn variance_conditional(
    stats: &SufficientStats,
    i: usize,
    mean: f64,
    prior: &PriorSpec,
    beta: Option<f64>,
) -> DistSpec {
    let (shape, scale) = variance_conditional_params(
        stats.counts[i],
        stats.squared_deviation(i, mean),
        prior,
        beta,
    );
    DistSpec::InverseGamma { shape, scale }
}

/// `β | σ² ~ Gamma(g + k·a, h + Σ 1/σ²ᵢ)`.
pub fn beta_conditional(params: &MixtureParams, prior: &PriorSpec) -> Option<DistSpec> {
    prior.beta_prior().map(|(g, h)| DistSpec::Gamma {
        shape: g + params.k() as f64 * prior.var_shape(),
        rate: h + params.variances().iter().map(|v| 1.0 / v).sum::<f64>(),
    })
}

/// All block conditionals at `(z, θ, β)`. Empty components reduce to the prior.
pub fn full_conditionals(
    data: &Dataset,
    alloc: &Allocation,
    params: &MixtureParams,
    beta: Option<f64>,
    prior: &PriorSpec,
) -> BlockConditionals {
    let stats = SufficientStats::new(data, alloc);
    let k = params.k();
    BlockConditionals {
        weights: weights_conditional(&stats),
        means: (0..k)
            .map(|i| mean_conditional(&stats, i, params.variances()[i], prior))
            .collect(),
        variances: (0..k)
            .map(|i| variance_conditional(&stats, i, params.means()[i], prior, beta))
            .collect(),
        beta: beta_conditional(params, prior),
    }
}

/// Per-observation categorical conditionals of `z` given θ.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationConditional {
    pub rows: Vec<DistSpec>,
    /// Rows where every term underflowed and the argmax fallback was used.
    pub underflow_fallbacks: usize,
}

/// Fills `out` with normalised probabilities `∝ λᵢ N(x; μᵢ, σ²ᵢ)`. Returns
/// `false` when the row degenerated and a one-hot argmax was written instead.
fn allocation_row(x: f64, params: &MixtureParams, out: &mut [f64]) -> bool {
    let mut max = f64::NEG_INFINITY;
    for (i, slot) in out.iter_mut().enumerate() {
        let l =
            params.weights()[i].ln() + normal_ln_pdf(x, params.means()[i], params.variances()[i]);
        *slot = l;
        if l > max {
            max = l;
        }
    }
    if max.is_finite() {
        let mut total = 0.0;
        for v in out.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        if total.is_finite() && total > 0.0 {
            out.iter_mut().for_each(|v| *v /= total);
            return true;
        }
    }
    let best =
        (0..out.len())
            .max_by(|&a, &b| {
                normal_ln_pdf(x, params.means()[a], params.variances()[a])
                    .total_cmp(&normal_ln_pdf(x, params.means()[b], params.variances()[b]))
            })
            .unwrap_or(0);
    out.iter_mut()
        .enumerate()
        .for_each(|(i, v)| *v = if i == best { 1.0 } else { 0.0 });
    false
}

pub fn allocation_conditional(data: &Dataset, params: &MixtureParams) -> AllocationConditional {
    let mut fallbacks = 0;
    let rows = data
        .values()
        .iter()
        .map(|&x| {
            let mut p = vec![0.0; params.k()];
            if !allocation_row(x, params, &mut p) {
                fallbacks += 1;
            }
            DistSpec::Categorical { probs: p }
        })
        .collect();
    AllocationConditional {
        rows,
        underflow_fallbacks: fallbacks,
    }
}

/// Draws `z | x, θ` in place; returns the number of underflow fallbacks.
pub fn sample_allocation<R: Rng + ?Sized>(
    data: &Dataset,
    params: &MixtureParams,
    rng: &mut R,
    alloc: &mut Allocation,
) -> usize {
    let mut row = vec![0.0; params.k()];
    let mut fallbacks = 0;
    for (z, &x) in alloc.labels_mut().iter_mut().zip(data.values()) {
        if !allocation_row(x, params, &mut row) {
            fallbacks += 1;
        }
        *z = sample_categorical(rng, &row);
    }
    fallbacks
}

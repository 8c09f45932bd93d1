//! The normalised block kernel `π(θ | φ, x)` built from one conditioning draw
//! `φ = (θ', z', β')`:
//!
//! ```text
//! p(λ | z') · Πᵢ IG(σ²ᵢ; a + n'ᵢ/2, b(β') + ½ Σ_{z'ⱼ=i} (xⱼ − μ'ᵢ)²) · N(μᵢ; m'ᵢ(σ²ᵢ), v'ᵢ(σ²ᵢ))
//! ```
//!
//! i.e. one Gibbs pass over θ given `z'`: variances given the stored means,
//! then means given the fresh variances. It integrates to one over θ and its
//! average over posterior draws is the marginal posterior, which is what makes
//! it usable both as Chib's ordinate estimate and as an importance density.
//!
//! Everything that depends only on `φ` is cached, so evaluating the kernel of a
//! relabelled `σ(φ)` at θ costs `O(k)` once the `k × k` term matrix for θ is
//! known.

use rand::Rng;

use super::{Dataset, Draw, MixtureParams, PriorSpec, SufficientStats};
use crate::numerics::dist::{dirichlet_ln_norm, sample_dirichlet, sample_inv_gamma, sample_normal};
use crate::numerics::Permutation;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockKernel {
    counts: Vec<f64>,
    sums: Vec<f64>,
    var_shape: Vec<f64>,
    var_scale: Vec<f64>,
    var_log_norm: Vec<f64>,
    dir_alpha: Vec<f64>,
    dir_log_norm: f64,
    mean_loc: f64,
    mean_var: f64,
}

impl BlockKernel {
    pub fn new(given: &Draw, data: &Dataset, prior: &PriorSpec) -> Self {
        let stats = SufficientStats::new(data, &given.alloc);
        let k = given.k();
        let (mean_loc, mean_var) = prior.mean_prior();
        let mut var_shape = Vec::with_capacity(k);
        let mut var_scale = Vec::with_capacity(k);
        for i in 0..k {
            let (shape, scale) = super::conditionals::variance_conditional_params(
                stats.counts[i],
                stats.squared_deviation(i, given.params.means()[i]),
                prior,
                given.beta,
            );
            var_shape.push(shape);
            var_scale.push(scale);
        }
        let var_log_norm = var_shape
            .iter()
            .zip(&var_scale)
            .map(|(&a, &b): (&f64, &f64)| a * b.ln() - statrs::function::gamma::ln_gamma(a))
            .collect();
        let dir_alpha: Vec<f64> = stats.counts.iter().map(|&n| 1.0 + n as f64).collect();
        BlockKernel {
            counts: stats.counts.iter().map(|&n| n as f64).collect(),
            sums: stats.sums,
            var_shape,
            var_scale,
            var_log_norm,
            dir_log_norm: dirichlet_ln_norm(&dir_alpha),
            dir_alpha,
            mean_loc,
            mean_var,
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// The kernel of the relabelled conditioning set `σ(φ)`.
    pub fn permuted(&self, sigma: &Permutation) -> Self {
        BlockKernel {
            counts: sigma.apply(&self.counts),
            sums: sigma.apply(&self.sums),
            var_shape: sigma.apply(&self.var_shape),
            var_scale: sigma.apply(&self.var_scale),
            var_log_norm: sigma.apply(&self.var_log_norm),
            dir_alpha: sigma.apply(&self.dir_alpha),
            dir_log_norm: self.dir_log_norm,
            mean_loc: self.mean_loc,
            mean_var: self.mean_var,
        }
    }

    /// Constant part of the Dirichlet block, shared by every relabelling.
    pub fn dirichlet_log_norm(&self) -> f64 {
        self.dir_log_norm
    }

    /// Fills `out[i * k + c]` with the log-contribution of evaluation component
    /// `i` paired with conditioning component `c`. Then
    /// `ln π(θ | σ(φ)) = dirichlet_log_norm() + Σᵢ out[i·k + σ[i]]`.
    pub fn term_matrix(&self, at: &MixtureParams, out: &mut [f64]) {
        let k = self.k();
        debug_assert_eq!(at.k(), k);
        debug_assert!(out.len() >= k * k);
        let inv_v0 = 1.0 / self.mean_var;
        let prior_pull = self.mean_loc * inv_v0;
        for i in 0..k {
            let lam_ln = at.weights()[i].ln();
            let var = at.variances()[i];
            let ln_var = var.ln();
            let inv_var = 1.0 / var;
            let mu = at.means()[i];
            let row = &mut out[i * k..(i + 1) * k];
            for (c, cell) in row.iter_mut().enumerate() {
                let n = self.counts[c];
                let weight_term = if n == 0.0 { 0.0 } else { n * lam_ln };
                let var_term = self.var_log_norm[c]
                    - (self.var_shape[c] + 1.0) * ln_var
                    - self.var_scale[c] * inv_var;
                let precision = inv_v0 + n * inv_var;
                let m = (prior_pull + self.sums[c] * inv_var) / precision;
                let d = mu - m;
                let mean_term = 0.5 * precision.ln() - HALF_LN_2PI - 0.5 * precision * d * d;
                *cell = weight_term + var_term + mean_term;
            }
        }
    }

    /// `ln π(θ | φ)` with the identity pairing.
    pub fn log_density(&self, at: &MixtureParams) -> f64 {
        self.log_density_permuted(at, &Permutation::identity(self.k()))
    }

    /// `ln π(θ | σ(φ))`.
    pub fn log_density_permuted(&self, at: &MixtureParams, sigma: &Permutation) -> f64 {
        let k = self.k();
        let mut m = vec![0.0; k * k];
        self.term_matrix(at, &mut m);
        self.dir_log_norm
            + sigma
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &c)| m[i * k + c])
                .sum::<f64>()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MixtureParams {
        let k = self.k();
        let weights = sample_dirichlet(rng, &self.dir_alpha);
        let mut means = Vec::with_capacity(k);
        let mut variances = Vec::with_capacity(k);
        for i in 0..k {
            let var = sample_inv_gamma(rng, self.var_shape[i], self.var_scale[i]);
            let precision = 1.0 / self.mean_var + self.counts[i] / var;
            let m = (self.mean_loc / self.mean_var + self.sums[i] / var) / precision;
            means.push(sample_normal(rng, m, 1.0 / precision));
            variances.push(var);
        }
        MixtureParams::new(weights, means, variances)
            .expect("kernel draws satisfy the parameter invariants")
    }
}

/// `ln π(θ | given, x)` for one conditioning draw.
pub fn log_block_density(
    at: &MixtureParams,
    given: &Draw,
    data: &Dataset,
    prior: &PriorSpec,
) -> f64 {
    BlockKernel::new(given, data, prior).log_density(at)
}

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{Dataset, MixtureParams};
use crate::error::{Error, Result};
use crate::numerics::dist::{gamma_ln_pdf, inv_gamma_ln_pdf, normal_ln_pdf};

/// Exchangeable priors. Weights are always `Dirichlet(1, …, 1)`.
///
/// `Fixed`: `μᵢ ~ N(m₀, s₀²)`, `σ²ᵢ ~ IG(a, b)`.
///
/// `RichardsonGreen`: `μᵢ ~ N(median, r²/4)`, `σ²ᵢ | β ~ IG(2, β)`,
/// `β ~ Gamma(0.2, rate = 10/r²)` with `r` the data range. [`PriorSpec::log_prior`]
/// integrates `β` out analytically, so the evidence is defined over θ alone;
/// the Gibbs sampler still carries `β` as an auxiliary block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Fixed {
        mean_loc: f64,
        mean_var: f64,
        var_shape: f64,
        var_scale: f64,
    },
    RichardsonGreen {
        mean_loc: f64,
        mean_var: f64,
        var_shape: f64,
        beta_shape: f64,
        beta_rate: f64,
    },
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "prior {name} must be positive, got {v}"
        )))
    }
}

impl PriorSpec {
    pub fn fixed(mean_loc: f64, mean_var: f64, var_shape: f64, var_scale: f64) -> Result<Self> {
        check_positive("mean variance", mean_var)?;
        check_positive("variance shape", var_shape)?;
        check_positive("variance scale", var_scale)?;
        if !mean_loc.is_finite() {
            return Err(Error::InvalidParameter(
                "prior mean location must be finite".into(),
            ));
        }
        Ok(PriorSpec::Fixed {
            mean_loc,
            mean_var,
            var_shape,
            var_scale,
        })
    }

    /// `μ ~ N(0, 10²)`, `σ² ~ IG(a, b)`.
    pub fn normal_inverse_gamma(a: f64, b: f64) -> Result<Self> {
        Self::fixed(0.0, 100.0, a, b)
    }

    pub fn richardson_green(data: &Dataset) -> Result<Self> {
        let r = data.range();
        check_positive("data range", r)?;
        Ok(PriorSpec::RichardsonGreen {
            mean_loc: data.median(),
            mean_var: r * r / 4.0,
            var_shape: 2.0,
            beta_shape: 0.2,
            beta_rate: 10.0 / (r * r),
        })
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self, PriorSpec::RichardsonGreen { .. })
    }

    /// `(location, variance)` of the Gaussian prior on each mean.
    pub fn mean_prior(&self) -> (f64, f64) {
        match *self {
            PriorSpec::Fixed {
                mean_loc, mean_var, ..
            }
            | PriorSpec::RichardsonGreen {
                mean_loc, mean_var, ..
            } => (mean_loc, mean_var),
        }
    }

    pub fn var_shape(&self) -> f64 {
        match *self {
            PriorSpec::Fixed { var_shape, .. } | PriorSpec::RichardsonGreen { var_shape, .. } => {
                var_shape
            }
        }
    }

    /// IG scale of the variance prior; the current `β` when hierarchical.
    pub fn var_scale(&self, beta: Option<f64>) -> f64 {
        match *self {
            PriorSpec::Fixed { var_scale, .. } => var_scale,
            PriorSpec::RichardsonGreen { .. } => {
                beta.expect("hierarchical prior needs a beta state")
            }
        }
    }

    /// `(shape, rate)` of the hyperprior on `β`.
    pub fn beta_prior(&self) -> Option<(f64, f64)> {
        match *self {
            PriorSpec::Fixed { .. } => None,
            PriorSpec::RichardsonGreen {
                beta_shape,
                beta_rate,
                ..
            } => Some((beta_shape, beta_rate)),
        }
    }

    /// Starting value for the `β` block: its prior mean.
    pub fn initial_beta(&self) -> Option<f64> {
        self.beta_prior().map(|(g, h)| g / h)
    }

    fn log_mean_terms(&self, params: &MixtureParams) -> f64 {
        let (m0, v0) = self.mean_prior();
        params
            .means()
            .iter()
            .map(|&m| normal_ln_pdf(m, m0, v0))
            .sum()
    }

    /// `ln Dirichlet(λ; 1, …, 1) = ln Γ(k)` on the simplex.
    fn log_weight_term(params: &MixtureParams) -> f64 {
        ln_gamma(params.k() as f64)
    }

    /// Marginal log prior density of θ (β integrated out when hierarchical).
    pub fn log_prior(&self, params: &MixtureParams) -> f64 {
        let base = Self::log_weight_term(params) + self.log_mean_terms(params);
        match *self {
            PriorSpec::Fixed {
                var_shape,
                var_scale,
                ..
            } => {
                base + params
                    .variances()
                    .iter()
                    .map(|&v| inv_gamma_ln_pdf(v, var_shape, var_scale))
                    .sum::<f64>()
            }
            PriorSpec::RichardsonGreen {
                var_shape,
                beta_shape,
                beta_rate,
                ..
            } => {
                // ∫ Gamma(β; g, h) Πᵢ IG(σ²ᵢ; a, β) dβ
                //   = hᵍ Γ(g + ka) / (Γ(g) Γ(a)ᵏ) · Π σᵢ^{-2(a+1)} · (h + Σ 1/σ²ᵢ)^{-(g+ka)}
                let k = params.k() as f64;
                let post_shape = beta_shape + k * var_shape;
                let inv_sum: f64 = params.variances().iter().map(|v| 1.0 / v).sum();
                let log_vars: f64 = params.variances().iter().map(|v| v.ln()).sum();
                base + beta_shape * beta_rate.ln() + ln_gamma(post_shape)
                    - ln_gamma(beta_shape)
                    - k * ln_gamma(var_shape)
                    - (var_shape + 1.0) * log_vars
                    - post_shape * (beta_rate + inv_sum).ln()
            }
        }
    }

    /// Joint log density of (θ, β) for the hierarchical prior; equals
    /// [`PriorSpec::log_prior`] for the fixed prior.
    pub fn log_prior_with_beta(&self, params: &MixtureParams, beta: f64) -> f64 {
        match *self {
            PriorSpec::Fixed { .. } => self.log_prior(params),
            PriorSpec::RichardsonGreen {
                var_shape,
                beta_shape,
                beta_rate,
                ..
            } => {
                Self::log_weight_term(params)
                    + self.log_mean_terms(params)
                    + params
                        .variances()
                        .iter()
                        .map(|&v| inv_gamma_ln_pdf(v, var_shape, beta))
                        .sum::<f64>()
                    + gamma_ln_pdf(beta, beta_shape, beta_rate)
            }
        }
    }
}

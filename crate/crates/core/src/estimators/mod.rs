//! Evidence estimators for the mixture posterior.
//!
//! Every estimator returns an [`EvidenceEstimate`] carrying the log-evidence,
//! a Monte Carlo standard error on the log scale and the effective sample size.

mod bridge;
mod calibration;
mod chib;
mod importance;
mod proposal;

pub use bridge::{bridge_sampling, BridgeConfig};
pub use calibration::{calibrate_truncation, workload_gain, ContributionReport};
pub use chib::{chib, ChibMode};
pub use importance::{
    dual_importance_sampling, importance_sampling, truncated_dual_importance_sampling, Truncation,
};
pub use proposal::{
    build_dual_proposal, build_plugin_proposal, build_rao_blackwell_proposal, h_sigma, DualProposal,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{log_posterior_unnormalized, Dataset, MixtureParams, PriorSpec};
use crate::numerics::log_sum_exp;

/// Data, prior and execution strategy shared by every estimator.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub data: &'a Dataset,
    pub prior: &'a PriorSpec,
    pub exec: Exec,
}

impl<'a> Target<'a> {
    pub fn new(data: &'a Dataset, prior: &'a PriorSpec) -> Self {
        Target {
            data,
            prior,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(self, exec: Exec) -> Self {
        Target { exec, ..self }
    }

    /// `ln π(θ) + ln p(x | θ)`.
    pub fn log_joint(&self, params: &MixtureParams) -> f64 {
        log_posterior_unnormalized(self.data, self.prior, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Chib's estimate on the raw chain multiplied by `k!`.
    ChibStar,
    /// Chib's estimate with the ordinate averaged over all relabellings.
    Chib,
    /// Chib's estimate on the raw chain, uncorrected.
    ChibPlain,
    /// Importance sampling from the symmetrised plug-in proposal.
    Is,
    /// Dual importance sampling with the full permutation set.
    Ds,
    /// Dual importance sampling restricted to the calibrated subset.
    DsApprox,
    /// Importance sampling from the randomly permuted Rao–Blackwell mixture.
    J1,
    Bridge,
}

impl Method {
    /// The seven estimators compared by the experiment runner.
    pub const COMPARED: [Method; 7] = [
        Method::ChibStar,
        Method::Chib,
        Method::Is,
        Method::Ds,
        Method::DsApprox,
        Method::J1,
        Method::Bridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ChibStar => "chib_star",
            Method::Chib => "chib",
            Method::ChibPlain => "chib_plain",
            Method::Is => "is",
            Method::Ds => "ds",
            Method::DsApprox => "ds_approx",
            Method::J1 => "j1",
            Method::Bridge => "bridge",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Method::ChibPlain]
            .into_iter()
            .chain(Method::COMPARED)
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown estimator `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEstimate {
    pub method: Method,
    pub k: usize,
    pub log_evidence: f64,
    /// Monte Carlo standard error of `log_evidence`.
    pub std_error: f64,
    pub ess: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(skip)]
    pub log_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contributions: Option<ContributionReport>,
    /// Bridge iterates `ln Ê⁽⁰⁾, ln Ê⁽¹⁾, …`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    /// Block-density evaluations spent on the proposal.
    pub evaluations: u64,
    pub elapsed_seconds: f64,
}

/// `(Σ wₜ)² / Σ wₜ²` from log-weights.
pub fn effective_sample_size(log_weights: &[f64]) -> Result<f64> {
    let s1 = log_sum_exp(log_weights);
    if !s1.is_finite() {
        return Err(Error::EstimationFailure(
            "effective sample size needs at least one finite weight".into(),
        ));
    }
    let doubled: Vec<f64> = log_weights.iter().map(|w| 2.0 * w).collect();
    let ess = (2.0 * s1 - log_sum_exp(&doubled)).exp();
    Ok(ess.min(log_weights.len() as f64))
}

/// Assembles an importance-sampling estimate from its log-weights.
pub(crate) fn from_log_weights(
    method: Method,
    k: usize,
    log_weights: Vec<f64>,
) -> Result<EvidenceEstimate> {
    let t = log_weights.len();
    if t == 0 {
        return Err(Error::EmptyInput(
            "importance sampling needs at least one particle",
        ));
    }
    let lse = log_sum_exp(&log_weights);
    if !lse.is_finite() {
        return Err(Error::EstimationFailure(format!(
            "{method}: every importance weight is zero"
        )));
    }
    let ess = effective_sample_size(&log_weights)?;
    let std_error = if t > 1 {
        ((t as f64 / ess - 1.0).max(0.0) / (t as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EvidenceEstimate {
        method,
        k,
        log_evidence: lse - (t as f64).ln(),
        std_error,
        ess,
        r: ess / t as f64,
        log_weights,
        contributions: None,
        trace: Vec::new(),
        evaluations: 0,
        elapsed_seconds: 0.0,
    })
}

/// Relative variance of the mean of a positive, possibly autocorrelated
/// series, by non-overlapping batch means.
pub(crate) fn batch_means_relative_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean <= 0.0 {
        return f64::INFINITY;
    }
    let batches = ((n as f64).sqrt() as usize).clamp(2, 50).min(n);
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    var / batches as f64 / (mean * mean)
}

//! Iterative bridge sampling between a proposal and posterior draws.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixtureParams;
use crate::numerics::{log_add_exp, log_sum_exp, RngStream};

use super::proposal::DualProposal;
use super::{batch_means_relative_variance, EvidenceEstimate, Method, Target};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeConfig {
    /// Draws from the proposal.
    pub m1: usize,
    /// Posterior draws used, taken evenly spaced from the supplied sample.
    pub m2: usize,
    pub iterations: usize,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            m1: 6_000,
            m2: 6_000,
            iterations: 10,
        }
    }
}

/// Starts from the importance-sampling estimate on the proposal draws and
/// runs `iterations` fixed-point updates. `trace` holds every iterate.
pub fn bridge_sampling(
    target: &Target<'_>,
    q: &DualProposal,
    posterior: &[MixtureParams],
    config: BridgeConfig,
    stream: &RngStream,
) -> Result<EvidenceEstimate> {
    let start = Instant::now();
    let before = q.evaluations();
    if config.m1 == 0 || config.m2 == 0 || config.iterations == 0 {
        return Err(Error::Usage(
            "bridge sampling needs M1, M2 and iterations of at least 1".into(),
        ));
    }
    if posterior.is_empty() {
        return Err(Error::EmptyInput("bridge sampling needs posterior draws"));
    }
    let m2 = config.m2.min(posterior.len());
    let picked: Vec<&MixtureParams> = (0..m2)
        .map(|i| &posterior[i * posterior.len() / m2])
        .collect();

    // ln(π*/q) on both samples
    let l1: Vec<f64> = target.exec.map(config.m1, |i| {
        let theta = q.sample_particle(stream, i);
        target.log_joint(&theta) - q.log_density(&theta)
    });
    let l2: Vec<f64> = target.exec.map(m2, |i| {
        target.log_joint(picked[i]) - q.log_density(picked[i])
    });

    let ln_m1 = (config.m1 as f64).ln();
    let ln_m2 = (m2 as f64).ln();
    let mut log_e = log_sum_exp(&l1) - ln_m1;
    if !log_e.is_finite() {
        return Err(Error::EstimationFailure(
            "bridge sampling: proposal draws carry no posterior mass".into(),
        ));
    }
    let mut trace = vec![log_e];
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..config.iterations {
        a = l1
            .iter()
            .map(|&l| (l - log_e) - log_add_exp(ln_m1, ln_m2 + l - log_e))
            .collect();
        b = l2
            .iter()
            .map(|&l| -log_add_exp(ln_m1, ln_m2 + l - log_e))
            .collect();
        let (num, den) = (log_sum_exp(&a), log_sum_exp(&b));
        if !num.is_finite() || !den.is_finite() {
            return Err(Error::EstimationFailure(
                "bridge sampling: proposal and posterior samples do not overlap".into(),
            ));
        }
        log_e += num - ln_m1 - (den - ln_m2);
        trace.push(log_e);
    }
    let rel = |v: &[f64]| {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.iter().map(|x| (x - max).exp()).collect::<Vec<_>>()
    };
    let a_lin = rel(&a);
    let n1 = a_lin.len() as f64;
    let mean_a = a_lin.iter().sum::<f64>() / n1;
    let var_a = a_lin.iter().map(|x| (x - mean_a).powi(2)).sum::<f64>() / (n1 - 1.0).max(1.0);
    let re2 = var_a / (n1 * mean_a * mean_a) + batch_means_relative_variance(&rel(&b));
    let ess = super::effective_sample_size(&l1)?;
    Ok(EvidenceEstimate {
        method: Method::Bridge,
        k: q.k(),
        log_evidence: log_e,
        std_error: re2.sqrt(),
        ess,
        r: ess / config.m1 as f64,
        log_weights: l1,
        contributions: None,
        trace,
        evaluations: q.evaluations() - before,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

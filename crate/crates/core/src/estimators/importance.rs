//! Importance sampling with a [`DualProposal`].

use std::time::Instant;

use crate::error::Result;
use crate::model::MixtureParams;
use crate::numerics::{log_sum_exp, RngStream};

use super::calibration::report_from_log_h;
use super::proposal::DualProposal;
use super::{from_log_weights, EvidenceEstimate, Method, Target};

/// How the calibrated subset is chosen for [`truncated_dual_importance_sampling`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Calibration particles, reused as the first `m` estimation particles.
    pub m: usize,
    /// Threshold on the mean absolute truncation error.
    pub tau: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            m: 1_000,
            tau: f64::MIN_POSITIVE,
        }
    }
}

fn particles(
    target: &Target<'_>,
    q: &DualProposal,
    t: usize,
    stream: &RngStream,
) -> Vec<MixtureParams> {
    target.exec.map(t, |i| q.sample_particle(stream, i))
}

/// `T` particles from `q` weighted by `π(θ)p(x|θ)/q(θ)`.
pub fn importance_sampling(
    target: &Target<'_>,
    q: &DualProposal,
    method: Method,
    t: usize,
    stream: &RngStream,
) -> Result<EvidenceEstimate> {
    let start = Instant::now();
    let before = q.evaluations();
    let thetas = particles(target, q, t, stream);
    let lw = target.exec.map(t, |i| {
        target.log_joint(&thetas[i]) - q.log_density(&thetas[i])
    });
    let mut est = from_log_weights(method, q.k(), lw)?;
    est.evaluations = q.evaluations() - before;
    est.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(est)
}

/// Dual importance sampling: particles from `h_id`, weights against the full
/// symmetrised `q`.
pub fn dual_importance_sampling(
    target: &Target<'_>,
    q: &DualProposal,
    t: usize,
    stream: &RngStream,
) -> Result<EvidenceEstimate> {
    importance_sampling(target, q, Method::Ds, t, stream)
}

/// Dual importance sampling where, after `m` calibration particles, `q` is
/// replaced by the partial sum over the leading permutations.
pub fn truncated_dual_importance_sampling(
    target: &Target<'_>,
    q: &DualProposal,
    t: usize,
    truncation: Truncation,
    stream: &RngStream,
) -> Result<EvidenceEstimate> {
    let start = Instant::now();
    let before = q.evaluations();
    let m = truncation.m.min(t);
    let thetas = particles(target, q, t, stream);
    let log_h: Vec<Vec<f64>> = target.exec.map(m, |i| q.log_h_all(&thetas[i]));
    let report = report_from_log_h(&log_h, q.permutations(), truncation.tau, t)?;
    let ln_perms = (q.permutations().len() as f64).ln();
    let kept = &report.ordering[..report.a_size];
    let lw = target.exec.map(t, |i| {
        let log_q = if i < m {
            log_sum_exp(&log_h[i]) - ln_perms
        } else {
            log_sum_exp(&q.log_h_subset(&thetas[i], kept)) - ln_perms
        };
        target.log_joint(&thetas[i]) - log_q
    });
    let mut est = from_log_weights(Method::DsApprox, q.k(), lw)?;
    est.contributions = Some(report);
    est.evaluations = q.evaluations() - before;
    est.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(est)
}

/// Calibration alone, on the first `m` particles of `stream`.
pub(crate) fn calibration_points(
    target: &Target<'_>,
    q: &DualProposal,
    m: usize,
    stream: &RngStream,
) -> Vec<Vec<f64>> {
    target
        .exec
        .map(m, |i| q.log_h_all(&q.sample_particle(stream, i)))
}

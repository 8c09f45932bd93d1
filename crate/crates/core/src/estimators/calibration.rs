//! Contribution of each relabelled cluster of the dual proposal and the
//! truncated permutation subset derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{factorial, log_sum_exp, Permutation, RngStream};

use super::importance::calibration_points;
use super::proposal::DualProposal;
use super::Target;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    /// Mean contribution `Ê[η_σ]` of each permutation, sorted descending.
    pub eta_bar: Vec<f64>,
    /// Positions in the proposal's permutation set, matching `eta_bar`.
    pub ordering: Vec<usize>,
    pub permutations: Vec<Permutation>,
    /// Size of the retained subset.
    pub a_size: usize,
    /// Mean absolute truncation error `(1/M) Σₗ |q̃ₙ(θₗ) − q(θₗ)|` at
    /// `a_size`, evaluated in double precision.
    pub phi_hat: f64,
    /// `ln φ̂ₙ` for `n = 1..=|P|`.
    pub log_phi_hat: Vec<f64>,
    pub delta: f64,
    pub m: usize,
    pub t: usize,
    pub tau: f64,
}

/// `(M/T)(1 − A/k!) + A/k!`.
pub fn workload_gain(m: usize, t: usize, a_size: f64, k: usize) -> f64 {
    let frac = a_size / factorial(k) as f64;
    (m as f64 / t as f64) * (1.0 - frac) + frac
}

/// Draws `m` particles from `h_id` and ranks the permutations by mean
/// contribution. `t_total` is the particle budget used for `Δ`.
pub fn calibrate_truncation(
    target: &Target<'_>,
    q: &DualProposal,
    m: usize,
    tau: f64,
    t_total: usize,
    stream: &RngStream,
) -> Result<ContributionReport> {
    report_from_log_h(
        &calibration_points(target, q, m, stream),
        q.permutations(),
        tau,
        t_total,
    )
}

pub(crate) fn report_from_log_h(
    log_h: &[Vec<f64>],
    perms: &[Permutation],
    tau: f64,
    t_total: usize,
) -> Result<ContributionReport> {
    let m = log_h.len();
    if m == 0 {
        return Err(Error::EmptyInput("calibration needs at least one particle"));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {tau}"
        )));
    }
    let n_perm = perms.len();
    let mut eta_sum = vec![0.0; n_perm];
    for row in log_h {
        let norm = log_sum_exp(row);
        for (acc, &lh) in eta_sum.iter_mut().zip(row) {
            *acc += (lh - norm).exp();
        }
    }
    let mut ordering: Vec<usize> = (0..n_perm).collect();
    ordering.sort_by(|&a, &b| eta_sum[b].total_cmp(&eta_sum[a]).then(a.cmp(&b)));
    let eta_bar: Vec<f64> = ordering.iter().map(|&p| eta_sum[p] / m as f64).collect();

    // |q̃ₙ − q| in double arithmetic: partial sums of h in contribution order,
    // after one common rescaling of all points
    let log_q: Vec<f64> = log_h.iter().map(|row| log_sum_exp(row)).collect();
    let scale = log_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut gap = vec![0.0; n_perm];
    let mut partial = vec![0.0; n_perm];
    for row in log_h {
        let mut acc = 0.0;
        for (n, &p) in ordering.iter().enumerate() {
            acc += (row[p] - scale).exp();
            partial[n] = acc;
        }
        for n in 0..n_perm {
            gap[n] += acc - partial[n];
        }
    }
    let offset = scale - (n_perm as f64).ln() - (m as f64).ln();
    let log_phi_hat: Vec<f64> = gap
        .iter()
        .map(|&g| {
            if g > 0.0 {
                g.ln() + offset
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let ln_tau = tau.ln();
    let a_size = (1..=n_perm)
        .find(|&n| log_phi_hat[n - 1] < ln_tau)
        .unwrap_or(n_perm);
    let k = perms.first().map_or(1, Permutation::len);
    // Δ is defined against the full group 𝔖ₖ
    let delta = if n_perm as u128 == factorial(k) {
        workload_gain(m.min(t_total), t_total.max(1), a_size as f64, k)
    } else {
        1.0
    };
    Ok(ContributionReport {
        eta_bar,
        permutations: ordering.iter().map(|&p| perms[p].clone()).collect(),
        ordering,
        a_size,
        phi_hat: log_phi_hat[a_size - 1].exp(),
        log_phi_hat,
        delta,
        m,
        t: t_total,
        tau,
    })
}

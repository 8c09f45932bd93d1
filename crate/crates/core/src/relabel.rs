//! Pivot relabelling of Gibbs output.
//!
//! Each draw is permuted to the `σ ∈ 𝔖ₖ` that brings it closest to a reference
//! in standardized `(μ, ln σ², ln λ)` coordinates. The scales are
//! within-component standard deviations, estimated after a preliminary
//! alignment on the means alone. Ties go to the lexicographically smallest `σ`,
//! so an aligned draw keeps the identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gibbs::{select_pivot_from, GibbsChain};
use crate::model::{Dataset, Draw, MixtureParams, PriorSpec};
use crate::numerics::{enumerate_permutations, Permutation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelledChain {
    pub draws: Vec<Draw>,
    /// `draws[t] == original[t].permuted(&perms[t])`.
    pub perms: Vec<Permutation>,
}

impl RelabelledChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn k(&self) -> usize {
        self.draws.first().map_or(0, Draw::k)
    }
}

fn coordinates(p: &MixtureParams, scales: &[f64; 3]) -> Vec<[f64; 3]> {
    (0..p.k())
        .map(|c| {
            [
                p.means()[c] / scales[0],
                p.variances()[c].ln() / scales[1],
                p.weights()[c].max(f64::MIN_POSITIVE).ln() / scales[2],
            ]
        })
        .collect()
}

fn mean_coordinates(p: &MixtureParams) -> Vec<[f64; 3]> {
    p.means().iter().map(|&m| [m, 0.0, 0.0]).collect()
}

/// Within-component sd of `μ`, `ln σ²` and `ln λ` after aligning the draws on
/// their means alone. Per-component variances are sorted before pooling so
/// the result does not depend on component order.
fn coordinate_scales(
    draws: &[Draw],
    reference: &MixtureParams,
    perms: &[Permutation],
    exec: Exec,
) -> [f64; 3] {
    let target = mean_coordinates(reference);
    let aligned: Vec<Vec<[f64; 3]>> = exec.map(draws.len(), |t| {
        let p = &draws[t].params;
        let sigma = &perms[best_permutation(&mean_coordinates(p), &target, perms)];
        sigma.apply(&coordinates(p, &[1.0; 3]))
    });
    let n = aligned.len() as f64;
    let k = reference.k();
    let mut out = [1.0; 3];
    for (a, slot) in out.iter_mut().enumerate() {
        let mut vars: Vec<f64> = (0..k)
            .map(|c| {
                let mean = aligned.iter().map(|d| d[c][a]).sum::<f64>() / n;
                aligned
                    .iter()
                    .map(|d| (d[c][a] - mean).powi(2))
                    .sum::<f64>()
                    / n
            })
            .collect();
        vars.sort_by(f64::total_cmp);
        let sd = (vars.iter().sum::<f64>() / k as f64).sqrt();
        if sd.is_finite() && sd > 0.0 {
            *slot = sd;
        }
    }
    out
}

fn best_permutation(draw: &[[f64; 3]], reference: &[[f64; 3]], perms: &[Permutation]) -> usize {
    let k = reference.len();
    // cost[i * k + c]: distance between reference component i and draw component c
    let mut cost = vec![0.0; k * k];
    for i in 0..k {
        for c in 0..k {
            cost[i * k + c] = (0..3).map(|a| (draw[c][a] - reference[i][a]).powi(2)).sum();
        }
    }
    let mut best = (0, f64::INFINITY);
    for (p, sigma) in perms.iter().enumerate() {
        let d: f64 = sigma
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &c)| cost[i * k + c])
            .sum();
        if d < best.1 {
            best = (p, d);
        }
    }
    best.0
}

pub fn relabel_chain(
    chain: &GibbsChain,
    reference: &MixtureParams,
    exec: Exec,
) -> Result<RelabelledChain> {
    relabel_draws(&chain.draws, reference, exec)
}

pub fn relabel_draws(
    draws: &[Draw],
    reference: &MixtureParams,
    exec: Exec,
) -> Result<RelabelledChain> {
    let k = reference.k();
    if let Some(d) = draws.iter().find(|d| d.k() != k) {
        return Err(Error::InvalidParameter(format!(
            "draw has k = {} but the reference has k = {k}",
            d.k()
        )));
    }
    let perms = enumerate_permutations(k)?;
    let scales = coordinate_scales(draws, reference, &perms, exec);
    let target = coordinates(reference, &scales);
    let chosen = exec.map(draws.len(), |t| {
        let sigma =
            &perms[best_permutation(&coordinates(&draws[t].params, &scales), &target, &perms)];
        (draws[t].permuted(sigma), sigma.clone())
    });
    let (draws, perms) = chosen.into_iter().unzip();
    Ok(RelabelledChain { draws, perms })
}

/// The joint-MAP draw of the chain, used as the recentering target.
pub fn reference_from_pivot(
    chain: &GibbsChain,
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<MixtureParams> {
    Ok(select_pivot_from(&chain.draws, data, prior)?.draw.params)
}

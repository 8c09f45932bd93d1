use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Permutation;

/// θ = (λ, μ, σ²) of a `k`-component univariate Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "a mixture needs at least one component".into(),
            ));
        }
        if means.len() != k || variances.len() != k {
            return Err(Error::InvalidParameter(format!(
                "component vectors disagree: {} weights, {} means, {} variances",
                k,
                means.len(),
                variances.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "negative weight in {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite mean in {means:?}"
            )));
        }
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "non-positive variance in {variances:?}"
            )));
        }
        Ok(MixtureParams {
            weights,
            means,
            variances,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn permuted(&self, sigma: &Permutation) -> Self {
        MixtureParams {
            weights: sigma.apply(&self.weights),
            means: sigma.apply(&self.means),
            variances: sigma.apply(&self.variances),
        }
    }

    pub(crate) fn set_weights(&mut self, w: Vec<f64>) {
        self.weights = w;
    }

    pub(crate) fn set_mean(&mut self, i: usize, m: f64) {
        self.means[i] = m;
    }

    pub(crate) fn set_variance(&mut self, i: usize, v: f64) {
        self.variances[i] = v;
    }
}

/// Latent component labels `z`, one per observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    labels: Vec<usize>,
    k: usize,
}

impl Allocation {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&z| z >= k) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside 0..{k}"
            )));
        }
        Ok(Allocation { labels, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &z in &self.labels {
            c[z] += 1;
        }
        c
    }

    pub fn permuted(&self, sigma: &Permutation) -> Self {
        Allocation {
            labels: sigma.relabel(&self.labels),
            k: self.k,
        }
    }

    pub(crate) fn labels_mut(&mut self) -> &mut [usize] {
        &mut self.labels
    }

    /// FNV-1a over the labels; a compact fingerprint for chain exports.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &z in &self.labels {
            for b in (z as u32).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// One Gibbs state `(θ, z)` plus the hierarchical variance scale `β` when the
/// prior has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub params: MixtureParams,
    pub alloc: Allocation,
    pub beta: Option<f64>,
}

impl Draw {
    pub fn k(&self) -> usize {
        self.params.k()
    }

    /// Applies `σ` jointly to (λ, μ, σ², z); `β` is label-free.
    pub fn permuted(&self, sigma: &Permutation) -> Self {
        Draw {
            params: self.params.permuted(sigma),
            alloc: self.alloc.permuted(sigma),
            beta: self.beta,
        }
    }
}

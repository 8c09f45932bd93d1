//! Relabellings of mixture components.
//!
//! A permutation `σ` acts on any per-component vector `v` by
//! `σ(v)[i] = v[σ[i]]`: new component `i` is old component `σ[i]`. The induced
//! action on allocation labels is `c ↦ σ⁻¹[c]`, so that an observation keeps
//! pointing at the same physical component.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` for which the full symmetric group is enumerated (8! = 40320).
pub const MAX_ENUMERATED_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Permutation((0..k).collect())
    }

    /// Builds a permutation from its image vector, checking bijectivity.
    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let k = mapping.len();
        let mut seen = vec![false; k];
        for &m in &mapping {
            if m >= k || seen[m] {
                return Err(Error::InvalidParameter(format!(
                    "{mapping:?} is not a permutation of 0..{k}"
                )));
            }
            seen[m] = true;
        }
        Ok(Permutation(mapping))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Permutation) -> Self {
        assert_eq!(
            self.len(),
            inner.len(),
            "composing permutations of different size"
        );
        Permutation(self.0.iter().map(|&m| inner.0[m]).collect())
    }

    /// Applies the relabelling to a per-component vector.
    pub fn apply<T: Clone>(&self, values: &[T]) -> Vec<T> {
        debug_assert_eq!(values.len(), self.0.len());
        self.0.iter().map(|&m| values[m].clone()).collect()
    }

    /// Maps every allocation label through `σ⁻¹`.
    pub fn relabel(&self, labels: &[usize]) -> Vec<usize> {
        let inv = self.inverse();
        labels.iter().map(|&c| inv.0[c]).collect()
    }
}

pub fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

/// Every element of `𝔖ₖ` in lexicographic order, identity first.
pub fn enumerate_permutations(k: usize) -> Result<Vec<Permutation>> {
    enumerate_permutations_capped(k, MAX_ENUMERATED_K)
}

pub fn enumerate_permutations_capped(k: usize, cap: usize) -> Result<Vec<Permutation>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > cap {
        return Err(Error::Capacity {
            k,
            cost: factorial(k),
            cap,
        });
    }
    Ok((0..k).permutations(k).map(Permutation).collect())
}

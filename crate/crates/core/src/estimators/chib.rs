//! Chib's identity `p(x) = π(θ°) p(x | θ°) / π(θ° | x)` with the posterior
//! ordinate estimated by averaging block kernels over Gibbs draws.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockKernel, Draw, MixtureParams};
use crate::numerics::{enumerate_permutations, factorial, log_sum_exp};

use super::{batch_means_relative_variance, EvidenceEstimate, Method, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChibMode {
    /// Ordinate from the raw draws.
    Plain,
    /// `Plain` plus `ln k!`.
    KFactorial,
    /// Ordinate averaged over every relabelling of each draw.
    PermutationAveraged,
}

impl ChibMode {
    pub fn method(self) -> Method {
        match self {
            ChibMode::Plain => Method::ChibPlain,
            ChibMode::KFactorial => Method::ChibStar,
            ChibMode::PermutationAveraged => Method::Chib,
        }
    }
}

pub fn chib(
    target: &Target<'_>,
    draws: &[Draw],
    pivot: &MixtureParams,
    mode: ChibMode,
) -> Result<EvidenceEstimate> {
    let start = Instant::now();
    let t = draws.len();
    if t == 0 {
        return Err(Error::EmptyInput("Chib's estimate needs a non-empty chain"));
    }
    let k = pivot.k();
    let perms = match mode {
        ChibMode::PermutationAveraged => enumerate_permutations(k)?,
        _ => vec![crate::numerics::Permutation::identity(k)],
    };
    // ln of the per-draw ordinate contribution, averaged over `perms`
    let per_draw: Vec<f64> = target.exec.map(t, |i| {
        let kernel = BlockKernel::new(&draws[i], target.data, target.prior);
        let mut m = vec![0.0; k * k];
        kernel.term_matrix(pivot, &mut m);
        let vals: Vec<f64> = perms
            .iter()
            .map(|s| {
                kernel.dirichlet_log_norm()
                    + s.as_slice()
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| m[i * k + c])
                        .sum::<f64>()
            })
            .collect();
        log_sum_exp(&vals) - (perms.len() as f64).ln()
    });
    let log_ordinate = log_sum_exp(&per_draw) - (t as f64).ln();
    if !log_ordinate.is_finite() {
        return Err(Error::UnsupportedPivot);
    }
    let mut log_evidence = target.log_joint(pivot) - log_ordinate;
    if mode == ChibMode::KFactorial {
        log_evidence += (factorial(k) as f64).ln();
    }
    let max = per_draw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = per_draw.iter().map(|v| (v - max).exp()).collect();
    Ok(EvidenceEstimate {
        method: mode.method(),
        k,
        log_evidence,
        std_error: batch_means_relative_variance(&scaled).sqrt(),
        ess: t as f64,
        r: 1.0,
        log_weights: Vec::new(),
        contributions: None,
        trace: Vec::new(),
        evaluations: (t * perms.len()) as u64,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{run_gibbs, select_pivot, GibbsConfig};
    use crate::model::{Dataset, PriorSpec};
    use crate::numerics::Permutation;

    fn setup(k: usize) -> (Dataset, PriorSpec, Vec<Draw>, MixtureParams) {
        let data =
            Dataset::new("c", vec![-2.2, -1.9, -2.5, -2.0, 2.1, 1.8, 2.6, 2.2, 2.0]).unwrap();
        let prior = PriorSpec::normal_inverse_gamma(2.0, 1.0).unwrap();
        let chain = run_gibbs(
            &data,
            &prior,
            k,
            &GibbsConfig {
                iterations: 2_000,
                burn_in: 200,
                ..Default::default()
            },
        )
        .unwrap();
        let pivot = select_pivot(&chain, &data, &prior).unwrap().draw.params;
        (data, prior, chain.draws, pivot)
    }

    #[test]
    fn modes_coincide_at_k1() {
        let (data, prior, draws, pivot) = setup(1);
        let target = Target::new(&data, &prior);
        let a = chib(&target, &draws, &pivot, ChibMode::Plain).unwrap();
        let b = chib(&target, &draws, &pivot, ChibMode::KFactorial).unwrap();
        let c = chib(&target, &draws, &pivot, ChibMode::PermutationAveraged).unwrap();
        assert_eq!(a.log_evidence, b.log_evidence);
        assert!((a.log_evidence - c.log_evidence).abs() < 1e-12);
        assert_eq!(c.method, Method::Chib);
        assert_eq!(a.ess, draws.len() as f64);
    }

    #[test]
    fn permutation_averaged_ignores_global_relabelling() {
        let (data, prior, draws, pivot) = setup(2);
        let target = Target::new(&data, &prior);
        let flip = Permutation::from_mapping(vec![1, 0]).unwrap();
        let moved: Vec<Draw> = draws.iter().map(|d| d.permuted(&flip)).collect();
        let a = chib(&target, &draws, &pivot, ChibMode::PermutationAveraged).unwrap();
        let b = chib(&target, &moved, &pivot, ChibMode::PermutationAveraged).unwrap();
        assert!((a.log_evidence - b.log_evidence).abs() < 1e-12);
    }

    #[test]
    fn k_factorial_adds_log_k_factorial() {
        let (data, prior, draws, pivot) = setup(2);
        let target = Target::new(&data, &prior);
        let a = chib(&target, &draws, &pivot, ChibMode::Plain).unwrap();
        let b = chib(&target, &draws, &pivot, ChibMode::KFactorial).unwrap();
        assert!((b.log_evidence - a.log_evidence - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unsupported_pivot_is_reported() {
        let (data, prior, draws, _) = setup(2);
        let target = Target::new(&data, &prior);
        let far = MixtureParams::new(vec![1.0, 0.0], vec![-2.0, 2.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            chib(&target, &draws, &far, ChibMode::Plain),
            Err(Error::UnsupportedPivot)
        ));
        assert!(chib(&target, &[], &far, ChibMode::Plain).is_err());
    }
}

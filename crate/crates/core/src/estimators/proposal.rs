//! Mixtures of block kernels used as importance functions.
//!
//! A [`DualProposal`] holds `J` conditioning sets `φ⁽ʲ⁾` and a permutation set
//! `P`. Its density is
//!
//! ```text
//! q(θ) = 1/(J·|P|) Σⱼ Σ_{σ∈P} π(θ | σ(φ⁽ʲ⁾), x) = 1/|P| Σ_{σ∈P} h_σ(θ)
//! ```
//!
//! With `P = 𝔖ₖ` the density is invariant under relabelling of θ.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gibbs::random_permutation_step;
use crate::model::{BlockKernel, Draw, MixtureParams};
use crate::numerics::{enumerate_permutations, log_sum_exp, Permutation, RngStream, StreamRng};
use crate::relabel::RelabelledChain;

use super::Target;

#[derive(Debug)]
pub struct DualProposal {
    k: usize,
    kernels: Vec<BlockKernel>,
    permutations: Vec<Permutation>,
    /// Apply a uniform relabelling to every draw.
    symmetric_sampling: bool,
    evaluations: AtomicU64,
}

impl Clone for DualProposal {
    fn clone(&self) -> Self {
        DualProposal {
            k: self.k,
            kernels: self.kernels.clone(),
            permutations: self.permutations.clone(),
            symmetric_sampling: self.symmetric_sampling,
            evaluations: AtomicU64::new(self.evaluations()),
        }
    }
}

impl DualProposal {
    fn new(
        target: &Target<'_>,
        hyper: &[Draw],
        permutations: Vec<Permutation>,
        symmetric_sampling: bool,
    ) -> Result<Self> {
        let first = hyper.first().ok_or(Error::EmptyInput(
            "a proposal needs at least one conditioning draw",
        ))?;
        let k = first.k();
        if hyper.iter().any(|d| d.k() != k) {
            return Err(Error::InvalidParameter(
                "conditioning draws disagree on k".into(),
            ));
        }
        let kernels = target.exec.map(hyper.len(), |j| {
            BlockKernel::new(&hyper[j], target.data, target.prior)
        });
        Ok(DualProposal {
            k,
            kernels,
            permutations,
            symmetric_sampling,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of conditioning sets `J`.
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.permutations
    }

    /// Block-density evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    fn count(&self, n: usize) {
        self.evaluations.fetch_add(n as u64, Ordering::Relaxed);
    }

    fn term_matrices(&self, at: &MixtureParams) -> Vec<f64> {
        let kk = self.k * self.k;
        let mut out = vec![0.0; self.kernels.len() * kk];
        for (kernel, block) in self.kernels.iter().zip(out.chunks_exact_mut(kk)) {
            kernel.term_matrix(at, block);
        }
        out
    }

    fn log_h_from_terms(&self, terms: &[f64], sigma: &Permutation, buf: &mut Vec<f64>) -> f64 {
        let k = self.k;
        let kk = k * k;
        buf.clear();
        buf.extend(
            self.kernels
                .iter()
                .zip(terms.chunks_exact(kk))
                .map(|(kernel, m)| {
                    kernel.dirichlet_log_norm()
                        + sigma
                            .as_slice()
                            .iter()
                            .enumerate()
                            .map(|(i, &c)| m[i * k + c])
                            .sum::<f64>()
                }),
        );
        log_sum_exp(buf) - (self.kernels.len() as f64).ln()
    }

    /// `ln h_σ(θ)` for an arbitrary `σ ∈ 𝔖ₖ`.
    pub fn log_h(&self, sigma: &Permutation, at: &MixtureParams) -> f64 {
        self.count(self.kernels.len());
        self.log_h_from_terms(&self.term_matrices(at), sigma, &mut Vec::new())
    }

    /// `ln h_σ(θ)` for the permutations at the given positions of the set.
    pub fn log_h_subset(&self, at: &MixtureParams, positions: &[usize]) -> Vec<f64> {
        self.count(self.kernels.len() * positions.len());
        let terms = self.term_matrices(at);
        let mut buf = Vec::with_capacity(self.kernels.len());
        positions
            .iter()
            .map(|&p| self.log_h_from_terms(&terms, &self.permutations[p], &mut buf))
            .collect()
    }

    /// `ln h_σ(θ)` for every permutation of the set, in set order.
    pub fn log_h_all(&self, at: &MixtureParams) -> Vec<f64> {
        let all: Vec<usize> = (0..self.permutations.len()).collect();
        self.log_h_subset(at, &all)
    }

    /// `ln q(θ)`.
    pub fn log_density(&self, at: &MixtureParams) -> f64 {
        log_sum_exp(&self.log_h_all(at)) - (self.permutations.len() as f64).ln()
    }

    /// A draw from `h_id`, relabelled uniformly at random for symmetric
    /// sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MixtureParams {
        let j = rng.random_range(0..self.kernels.len());
        let theta = self.kernels[j].sample(rng);
        if self.symmetric_sampling {
            let mut mapping: Vec<usize> = (0..self.k).collect();
            mapping.shuffle(rng);
            theta.permuted(&Permutation::from_mapping(mapping).expect("a shuffle is a permutation"))
        } else {
            theta
        }
    }

    /// Particle `t` drawn from its own substream of `stream`.
    pub fn sample_particle(&self, stream: &RngStream, t: usize) -> MixtureParams {
        let mut rng: StreamRng = stream.child(t as u64).rng();
        self.sample(&mut rng)
    }
}

/// `ln h_σ(θ)`.
pub fn h_sigma(proposal: &DualProposal, sigma: &Permutation, at: &MixtureParams) -> f64 {
    proposal.log_h(sigma, at)
}

/// The symmetrised plug-in proposal built on a single pivot draw.
pub fn build_plugin_proposal(target: &Target<'_>, pivot: &Draw) -> Result<DualProposal> {
    DualProposal::new(
        target,
        std::slice::from_ref(pivot),
        enumerate_permutations(pivot.k())?,
        true,
    )
}

/// `J` relabelled draws, subsampled without replacement, symmetrised over 𝔖ₖ.
pub fn build_dual_proposal(
    target: &Target<'_>,
    relabelled: &RelabelledChain,
    j: usize,
    stream: &RngStream,
) -> Result<DualProposal> {
    let hyper = subsample(&relabelled.draws, j, stream)?;
    DualProposal::new(
        target,
        &hyper,
        enumerate_permutations(relabelled.k())?,
        false,
    )
}

/// `J` draws subsampled without replacement, each relabelled by an independent
/// uniform permutation, and no symmetrisation.
pub fn build_rao_blackwell_proposal(
    target: &Target<'_>,
    draws: &[Draw],
    j: usize,
    stream: &RngStream,
) -> Result<DualProposal> {
    let chosen = subsample(draws, j, stream)?;
    let mut rng = stream.child(u64::MAX).rng();
    let hyper: Vec<Draw> = chosen
        .iter()
        .map(|d| random_permutation_step(d, &mut rng).0)
        .collect();
    let k = hyper.first().map_or(1, Draw::k);
    DualProposal::new(target, &hyper, vec![Permutation::identity(k)], false)
}

fn subsample(draws: &[Draw], j: usize, stream: &RngStream) -> Result<Vec<Draw>> {
    if j == 0 || j > draws.len() {
        return Err(Error::Usage(format!(
            "J = {j} must lie in 1..={}",
            draws.len()
        )));
    }
    let mut rng = stream.rng();
    let mut picked = index::sample(&mut rng, draws.len(), j).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| draws[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{run_gibbs, select_pivot, GibbsConfig};
    use crate::model::{Dataset, PriorSpec};
    use crate::relabel::relabel_chain;
    use crate::Exec;
    use proptest::prelude::*;

    struct Fixture {
        data: Dataset,
        prior: PriorSpec,
    }

    fn fixture(k: usize) -> (Fixture, Vec<Draw>) {
        let data = Dataset::new(
            "f",
            vec![
                -4.1, -3.7, -4.4, -3.9, 0.2, 0.5, -0.1, 0.3, 4.8, 5.3, 5.1, 4.6, 5.0,
            ],
        )
        .unwrap();
        let prior = PriorSpec::normal_inverse_gamma(2.0, 1.0).unwrap();
        let chain = run_gibbs(
            &data,
            &prior,
            k,
            &GibbsConfig {
                iterations: 600,
                burn_in: 100,
                ..Default::default()
            },
        )
        .unwrap();
        (Fixture { data, prior }, chain.draws)
    }

    #[test]
    fn plugin_matches_single_block_density_at_k1() {
        let (f, draws) = fixture(1);
        let target = Target::new(&f.data, &f.prior);
        let q = build_plugin_proposal(&target, &draws[0]).unwrap();
        let at = &draws[10].params;
        let direct = crate::model::log_block_density(at, &draws[0], &f.data, &f.prior);
        assert!((q.log_density(at) - direct).abs() < 1e-12);
    }

    #[test]
    fn dual_with_one_draw_is_the_plugin() {
        let (f, draws) = fixture(2);
        let target = Target::new(&f.data, &f.prior);
        let rc = RelabelledChain {
            draws: vec![draws[5].clone()],
            perms: vec![Permutation::identity(2)],
        };
        let dual = build_dual_proposal(&target, &rc, 1, &RngStream::new(1)).unwrap();
        let plug = build_plugin_proposal(&target, &draws[5]).unwrap();
        for d in &draws[..20] {
            assert_eq!(dual.log_density(&d.params), plug.log_density(&d.params));
        }
        assert!(build_dual_proposal(&target, &rc, 2, &RngStream::new(1)).is_err());
    }

    #[test]
    fn q_is_the_mean_of_h() {
        let (f, draws) = fixture(3);
        let target = Target::new(&f.data, &f.prior);
        let chain = GibbsChain::from_draws(draws);
        let reference = select_pivot(&chain, &f.data, &f.prior).unwrap().draw.params;
        let rc = relabel_chain(&chain, &reference, Exec::Parallel).unwrap();
        let q = build_dual_proposal(&target, &rc, 20, &RngStream::new(2)).unwrap();
        for t in 0..10 {
            let theta = q.sample_particle(&RngStream::new(3), t);
            let h = q.log_h_all(&theta);
            let mean = log_sum_exp(&h) - 6f64.ln();
            assert!((mean - q.log_density(&theta)).abs() < 1e-12);
            for (p, sigma) in q.permutations().iter().enumerate() {
                assert!((h[p] - h_sigma(&q, sigma, &theta)).abs() < 1e-12);
            }
        }
    }

    use crate::gibbs::GibbsChain;
    impl GibbsChain {
        fn from_draws(draws: Vec<Draw>) -> Self {
            GibbsChain {
                k: draws[0].k(),
                label_switches: vec![false; draws.len()],
                beta_trace: vec![],
                draws,
                underflow_fallbacks: 0,
            }
        }
    }

    #[test]
    fn evaluation_counter_tracks_block_densities() {
        let (f, draws) = fixture(3);
        let target = Target::new(&f.data, &f.prior);
        let rc = RelabelledChain {
            perms: vec![Permutation::identity(3); draws.len()],
            draws,
        };
        let q = build_dual_proposal(&target, &rc, 7, &RngStream::new(4)).unwrap();
        let theta = rc.draws[0].params.clone();
        q.log_density(&theta);
        assert_eq!(q.evaluations(), 7 * 6);
        q.log_h_subset(&theta, &[0, 3]);
        assert_eq!(q.evaluations(), 7 * 6 + 7 * 2);
        q.reset_evaluations();
        q.log_h(&Permutation::identity(3), &theta);
        assert_eq!(q.evaluations(), 7);
    }

    #[test]
    fn rao_blackwell_proposal_has_trivial_permutation_set() {
        let (f, draws) = fixture(2);
        let target = Target::new(&f.data, &f.prior);
        let q = build_rao_blackwell_proposal(&target, &draws, 50, &RngStream::new(5)).unwrap();
        assert_eq!(q.len(), 50);
        assert_eq!(q.permutations(), &[Permutation::identity(2)]);
        let theta = q.sample_particle(&RngStream::new(6), 0);
        assert!(q.log_density(&theta).is_finite());
    }

    #[test]
    fn h_id_dominates_near_its_own_mode() {
        let (f, draws) = fixture(3);
        let target = Target::new(&f.data, &f.prior);
        let pivot = select_pivot(&GibbsChain::from_draws(draws), &f.data, &f.prior).unwrap();
        let q = build_plugin_proposal(&target, &pivot.draw).unwrap();
        let q_id = DualProposal {
            symmetric_sampling: false,
            ..q.clone()
        };
        for t in 0..20 {
            let theta = q_id.sample_particle(&RngStream::new(7), t);
            let h = q.log_h_all(&theta);
            assert!(h[1..].iter().all(|&v| v < h[0]), "{h:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn symmetric_and_equivariant(k in 1usize..=3, t in 0usize..1000, s in 0usize..6) {
            let (f, draws) = fixture(k);
            let target = Target::new(&f.data, &f.prior);
            let rc = RelabelledChain { perms: vec![Permutation::identity(k); draws.len()], draws };
            let q = build_dual_proposal(&target, &rc, 10, &RngStream::new(8)).unwrap();
            let plug = build_plugin_proposal(&target, &rc.draws[3]).unwrap();
            let theta = q.sample_particle(&RngStream::new(9), t);
            let perms = enumerate_permutations(k).unwrap();
            let sigma = &perms[s % perms.len()];
            let moved = theta.permuted(sigma);
            prop_assert!((q.log_density(&moved) - q.log_density(&theta)).abs() < 1e-12);
            prop_assert!((plug.log_density(&moved) - plug.log_density(&theta)).abs() < 1e-12);
            let id = Permutation::identity(k);
            let lhs = q.log_h(sigma, &theta);
            let rhs = q.log_h(&id, &theta.permuted(&sigma.inverse()));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}

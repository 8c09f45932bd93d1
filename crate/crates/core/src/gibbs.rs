//! Data-augmentation Gibbs sampler for the mixture posterior.
//!
//! One sweep updates `z | θ`, then `λ | z`, then for each component
//! `μᵢ | σ²ᵢ, z` and `σ²ᵢ | μᵢ, z` (with `β`), then `β | σ²` when the prior is
//! hierarchical. The chain is seeded from a quantile split of the sorted data.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    log_posterior_unnormalized, mean_conditional_moments, sample_allocation,
    variance_conditional_params, Allocation, Dataset, Draw, MixtureParams, PriorSpec,
    SufficientStats,
};
use crate::numerics::dist::{sample_dirichlet, sample_gamma, sample_inv_gamma, sample_normal};
use crate::numerics::{Permutation, RngStream, Role, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Apply a uniformly drawn relabelling to the state after every sweep.
    pub random_permutation: bool,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: 15_000,
            burn_in: 5_000,
            thinning: 1,
            random_permutation: false,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::Usage(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Usage("thinning stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thinning)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsChain {
    pub k: usize,
    pub draws: Vec<Draw>,
    /// `true` at `t` when the component holding the smallest mean changed
    /// between draws `t − 1` and `t`.
    pub label_switches: Vec<bool>,
    /// `β` per kept draw; empty for the fixed prior.
    pub beta_trace: Vec<f64>,
    /// Allocation rows resolved by the underflow fallback, over the whole run.
    pub underflow_fallbacks: usize,
}

impl GibbsChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn switch_count(&self) -> usize {
        self.label_switches.iter().filter(|&&s| s).count()
    }

    pub fn params(&self) -> Vec<MixtureParams> {
        self.draws.iter().map(|d| d.params.clone()).collect()
    }

    /// Copy of the chain with an independent uniform relabelling applied to
    /// every draw.
    pub fn randomly_permuted(&self, stream: &RngStream) -> GibbsChain {
        let mut rng = stream.rng();
        let draws: Vec<Draw> = self
            .draws
            .iter()
            .map(|d| random_permutation_step(d, &mut rng).0)
            .collect();
        GibbsChain {
            k: self.k,
            label_switches: switch_indicators(&draws),
            draws,
            beta_trace: self.beta_trace.clone(),
            underflow_fallbacks: self.underflow_fallbacks,
        }
    }
}

fn smallest_mean_component(p: &MixtureParams) -> usize {
    (0..p.k())
        .min_by(|&a, &b| p.means()[a].total_cmp(&p.means()[b]))
        .unwrap_or(0)
}

fn switch_indicators(draws: &[Draw]) -> Vec<bool> {
    let mut out = Vec::with_capacity(draws.len());
    let mut prev = None;
    for d in draws {
        let cur = smallest_mean_component(&d.params);
        out.push(prev.is_some_and(|p| p != cur));
        prev = Some(cur);
    }
    out
}

/// Applies one uniformly drawn `σ ∈ 𝔖ₖ` jointly to (λ, μ, σ², z).
pub fn random_permutation_step<R: Rng + ?Sized>(draw: &Draw, rng: &mut R) -> (Draw, Permutation) {
    let mut mapping: Vec<usize> = (0..draw.k()).collect();
    mapping.shuffle(rng);
    let sigma = Permutation::from_mapping(mapping).expect("a shuffle is a permutation");
    (draw.permuted(&sigma), sigma)
}

fn initial_state(data: &Dataset, prior: &PriorSpec, k: usize, rng: &mut StreamRng) -> Draw {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.values()[a].total_cmp(&data.values()[b]));
    let mut labels = vec![0; n];
    for (rank, &j) in order.iter().enumerate() {
        labels[j] = (rank * k / n).min(k - 1);
    }
    let alloc = Allocation::new(labels, k).expect("quantile labels are in range");
    let stats = SufficientStats::new(data, &alloc);

    let overall_var = if data.variance() > 0.0 {
        data.variance()
    } else {
        1.0
    };
    let (m0, _) = prior.mean_prior();
    let mut means = Vec::with_capacity(k);
    let mut vars = Vec::with_capacity(k);
    for i in 0..k {
        let c = stats.counts[i];
        means.push(if c > 0 { stats.sums[i] / c as f64 } else { m0 });
        let v = if c > 1 {
            stats.squared_deviation(i, means[i]) / (c - 1) as f64
        } else {
            overall_var
        };
        vars.push(if v > 0.0 { v } else { overall_var });
    }
    let params =
        MixtureParams::new(vec![1.0 / k as f64; k], means, vars).expect("initial state is valid");
    let mut draw = Draw {
        params,
        alloc,
        beta: prior.initial_beta(),
    };
    update_parameters(data, prior, &mut draw, rng);
    draw
}

/// λ | z, then (μᵢ | σ²ᵢ, σ²ᵢ | μᵢ) for each component, then β.
fn update_parameters(data: &Dataset, prior: &PriorSpec, draw: &mut Draw, rng: &mut StreamRng) {
    let stats = SufficientStats::new(data, &draw.alloc);
    let k = draw.k();
    let alpha: Vec<f64> = stats.counts.iter().map(|&n| 1.0 + n as f64).collect();
    let mut w = sample_dirichlet(rng, &alpha);
    // renormalise so the weights sum to one to machine precision
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    draw.params.set_weights(w);
    for i in 0..k {
        let var = draw.params.variances()[i];
        let (m, v) = mean_conditional_moments(stats.counts[i], stats.sums[i], var, prior);
        let mu = sample_normal(rng, m, v);
        draw.params.set_mean(i, mu);
        let (shape, scale) = variance_conditional_params(
            stats.counts[i],
            stats.squared_deviation(i, mu),
            prior,
            draw.beta,
        );
        draw.params
            .set_variance(i, sample_inv_gamma(rng, shape, scale));
    }
    if let Some((g, h)) = prior.beta_prior() {
        let shape = g + k as f64 * prior.var_shape();
        let rate = h + draw.params.variances().iter().map(|v| 1.0 / v).sum::<f64>();
        draw.beta = Some(sample_gamma(rng, shape, rate));
    }
}

pub fn run_gibbs(
    data: &Dataset,
    prior: &PriorSpec,
    k: usize,
    config: &GibbsConfig,
) -> Result<GibbsChain> {
    config.validate()?;
    if k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    let stream = RngStream::new(config.seed).role(Role::Gibbs);
    let mut rng = stream.rng();
    let mut state = initial_state(data, prior, k, &mut rng);
    let mut draws = Vec::with_capacity(config.kept_draws());
    let mut fallbacks = 0;
    for it in 0..config.iterations {
        fallbacks += sample_allocation(data, &state.params, &mut rng, &mut state.alloc);
        update_parameters(data, prior, &mut state, &mut rng);
        if config.random_permutation {
            state = random_permutation_step(&state, &mut rng).0;
        }
        if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thinning) {
            draws.push(state.clone());
        }
    }
    Ok(GibbsChain {
        k,
        label_switches: switch_indicators(&draws),
        beta_trace: draws.iter().filter_map(|d| d.beta).collect(),
        draws,
        underflow_fallbacks: fallbacks,
    })
}

/// The visited draw with the largest `ln π(θ) + ln p(x | θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    pub index: usize,
    pub draw: Draw,
    pub log_posterior: f64,
}

pub fn select_pivot(chain: &GibbsChain, data: &Dataset, prior: &PriorSpec) -> Result<Pivot> {
    select_pivot_from(&chain.draws, data, prior)
}

pub fn select_pivot_from(draws: &[Draw], data: &Dataset, prior: &PriorSpec) -> Result<Pivot> {
    let mut best: Option<(usize, f64)> = None;
    for (t, d) in draws.iter().enumerate() {
        let lp = log_posterior_unnormalized(data, prior, &d.params);
        if best.is_none_or(|(_, b)| lp > b) {
            best = Some((t, lp));
        }
    }
    let (index, log_posterior) =
        best.ok_or(Error::EmptyInput("pivot selection needs a non-empty chain"))?;
    Ok(Pivot {
        index,
        draw: draws[index].clone(),
        log_posterior,
    })
}

/// One row per draw: weights, means, variances, `β`, allocation fingerprint and
/// unnormalised log-posterior.
pub fn write_chain_csv<W: Write>(
    chain: &GibbsChain,
    data: &Dataset,
    prior: &PriorSpec,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = chain.k;
    let mut header = vec!["draw".to_string()];
    header.extend((1..=k).map(|i| format!("lambda_{i}")));
    header.extend((1..=k).map(|i| format!("mu_{i}")));
    header.extend((1..=k).map(|i| format!("sigma2_{i}")));
    header.extend(["beta", "z_hash", "log_posterior"].map(String::from));
    w.write_record(&header)?;
    for (t, d) in chain.draws.iter().enumerate() {
        let mut row = vec![t.to_string()];
        let p = &d.params;
        row.extend(
            p.weights()
                .iter()
                .chain(p.means())
                .chain(p.variances())
                .map(|v| v.to_string()),
        );
        row.push(d.beta.map_or_else(String::new, |b| b.to_string()));
        row.push(format!("{:016x}", d.alloc.fingerprint()));
        row.push(log_posterior_unnormalized(data, prior, p).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_likelihood;
    use rand_distr::{Distribution, Normal};

    fn normal_data(n: usize, seed: u64) -> Dataset {
        let mut rng = RngStream::new(seed).rng();
        let d = Normal::new(0.0, 1.0).unwrap();
        Dataset::new("n", (0..n).map(|_| d.sample(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(GibbsConfig {
            iterations: 10,
            burn_in: 10,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(GibbsConfig {
            iterations: 10,
            burn_in: 0,
            thinning: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(
            GibbsConfig {
                iterations: 20,
                burn_in: 5,
                thinning: 4,
                ..Default::default()
            }
            .kept_draws(),
            4
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let data = normal_data(30, 1);
        let prior = PriorSpec::normal_inverse_gamma(2.0, 3.0).unwrap();
        let cfg = GibbsConfig {
            iterations: 300,
            burn_in: 100,
            thinning: 2,
            random_permutation: true,
            seed: 9,
        };
        let a = run_gibbs(&data, &prior, 2, &cfg).unwrap();
        let b = run_gibbs(&data, &prior, 2, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        let c = run_gibbs(&data, &prior, 2, &GibbsConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn draws_keep_invariants() {
        let data = normal_data(40, 2);
        for prior in [
            PriorSpec::normal_inverse_gamma(2.0, 3.0).unwrap(),
            PriorSpec::richardson_green(&data).unwrap(),
        ] {
            let cfg = GibbsConfig {
                iterations: 600,
                burn_in: 100,
                seed: 3,
                ..Default::default()
            };
            let chain = run_gibbs(&data, &prior, 3, &cfg).unwrap();
            for d in &chain.draws {
                assert!((d.params.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(d.params.variances().iter().all(|&v| v > 0.0));
                assert_eq!(d.alloc.counts().iter().sum::<usize>(), data.len());
            }
            assert_eq!(
                chain.beta_trace.len(),
                if prior.is_hierarchical() {
                    chain.len()
                } else {
                    0
                }
            );
        }
    }

    #[test]
    fn identity_permutation_leaves_draw_unchanged() {
        let data = normal_data(10, 3);
        let prior = PriorSpec::normal_inverse_gamma(2.0, 3.0).unwrap();
        let chain = run_gibbs(
            &data,
            &prior,
            1,
            &GibbsConfig {
                iterations: 5,
                burn_in: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let mut rng = RngStream::new(0).rng();
        let (d, s) = random_permutation_step(&chain.draws[0], &mut rng);
        assert!(s.is_identity());
        assert_eq!(d, chain.draws[0]);
    }

    #[test]
    fn permutation_step_preserves_likelihood_and_is_uniform() {
        let data = normal_data(25, 4);
        let prior = PriorSpec::normal_inverse_gamma(2.0, 3.0).unwrap();
        let chain = run_gibbs(
            &data,
            &prior,
            3,
            &GibbsConfig {
                iterations: 50,
                burn_in: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let draw = &chain.draws[0];
        let base = log_likelihood(&data, &draw.params);
        let all = crate::numerics::enumerate_permutations(3).unwrap();
        let mut counts = vec![0usize; all.len()];
        let mut rng = RngStream::new(77).rng();
        let n = 100_000;
        for _ in 0..n {
            let (d, s) = random_permutation_step(draw, &mut rng);
            counts[all.iter().position(|p| *p == s).unwrap()] += 1;
            if counts.iter().sum::<usize>() % 10_000 == 0 {
                assert!((log_likelihood(&data, &d.params) - base).abs() < 1e-12);
            }
        }
        let p = 1.0 / 6.0;
        let se = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * se + 1.0, "{c}");
        }
    }

    #[test]
    fn forced_symmetry_gives_uniform_occupancy() {
        // With random relabelling every component is the smallest-mean one a
        // third of the time.
        let data =
            Dataset::new("d", vec![-5.0, -4.8, -5.3, 0.1, 0.3, -0.2, 5.0, 5.2, 4.9]).unwrap();
        let prior = PriorSpec::normal_inverse_gamma(2.0, 1.0).unwrap();
        let cfg = GibbsConfig {
            iterations: 31_000,
            burn_in: 1_000,
            random_permutation: true,
            seed: 5,
            ..Default::default()
        };
        let chain = run_gibbs(&data, &prior, 3, &cfg).unwrap();
        let mut occ = [0usize; 3];
        for d in &chain.draws {
            occ[smallest_mean_component(&d.params)] += 1;
        }
        let n = chain.len() as f64;
        let se = (n / 3.0 * (2.0 / 3.0)).sqrt();
        for o in occ {
            assert!((o as f64 - n / 3.0).abs() < 3.0 * se, "{occ:?}");
        }
    }

    #[test]
    fn pivot_is_the_argmax() {
        let data = normal_data(30, 6);
        let prior = PriorSpec::normal_inverse_gamma(2.0, 3.0).unwrap();
        let chain = run_gibbs(
            &data,
            &prior,
            2,
            &GibbsConfig {
                iterations: 400,
                burn_in: 100,
                ..Default::default()
            },
        )
        .unwrap();
        let pivot = select_pivot(&chain, &data, &prior).unwrap();
        for d in &chain.draws {
            assert!(log_posterior_unnormalized(&data, &prior, &d.params) <= pivot.log_posterior);
        }
        let single = select_pivot_from(&chain.draws[3..4], &data, &prior).unwrap();
        assert_eq!(single.draw, chain.draws[3]);
        assert!(select_pivot_from(&[], &data, &prior).is_err());
    }

    #[test]
    fn chain_csv_has_one_row_per_draw() {
        let data = normal_data(20, 7);
        let prior = PriorSpec::richardson_green(&data).unwrap();
        let chain = run_gibbs(
            &data,
            &prior,
            2,
            &GibbsConfig {
                iterations: 30,
                burn_in: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_chain_csv(&chain, &data, &prior, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "draw,lambda_1,lambda_2,mu_1,mu_2,sigma2_1,sigma2_2,beta,z_hash,log_posterior"
        );
        assert_eq!(lines.count(), chain.len());
    }
}

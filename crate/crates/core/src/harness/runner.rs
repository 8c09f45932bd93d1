//! Replicated runs of the estimator comparison.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{
    bridge_sampling, build_dual_proposal, build_plugin_proposal, build_rao_blackwell_proposal,
    chib, importance_sampling, truncated_dual_importance_sampling, BridgeConfig, ChibMode,
    DualProposal, EvidenceEstimate, Method, Target, Truncation,
};
use crate::exec::Exec;
use crate::gibbs::{run_gibbs, select_pivot, GibbsChain, GibbsConfig, Pivot};
use crate::model::{Dataset, MixtureParams, PriorSpec};
use crate::numerics::{RngStream, Role};
use crate::relabel::{relabel_chain, RelabelledChain};

use super::config::ExperimentConfig;
use super::summary::{summarize, SummaryRow};

/// Everything one replicate's estimators share.
pub struct Replicate<'a> {
    pub config: &'a ExperimentConfig,
    pub target: Target<'a>,
    pub index: usize,
    pub stream: RngStream,
    /// Gibbs output without relabelling moves.
    pub chain: GibbsChain,
    /// `chain` with an independent uniform relabelling of every draw.
    pub permuted: GibbsChain,
    pub pivot: Pivot,
    pub relabelled: RelabelledChain,
    dual: OnceLock<DualProposal>,
}

impl<'a> Replicate<'a> {
    pub fn prepare(
        config: &'a ExperimentConfig,
        data: &'a Dataset,
        prior: &'a PriorSpec,
        index: usize,
        exec: Exec,
    ) -> Result<Self> {
        let target = Target::new(data, prior).with_exec(exec);
        let stream = RngStream::new(config.seed).replicate(index);
        let gibbs = GibbsConfig {
            iterations: config.burn_in + config.iterations,
            burn_in: config.burn_in,
            thinning: 1,
            random_permutation: false,
            seed: stream.role(Role::Gibbs).derive_seed(),
        };
        let chain = run_gibbs(data, prior, config.k, &gibbs)?;
        let permuted = chain.randomly_permuted(&stream.role(Role::Permute));
        let pivot = select_pivot(&chain, data, prior)?;
        let relabelled = relabel_chain(&chain, &pivot.draw.params, exec)?;
        Ok(Replicate {
            config,
            target,
            index,
            stream,
            chain,
            permuted,
            pivot,
            relabelled,
            dual: OnceLock::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.stream.derive_seed()
    }

    /// The dual proposal shared by the full and truncated dual estimators.
    pub fn dual_proposal(&self) -> Result<&DualProposal> {
        if let Some(q) = self.dual.get() {
            return Ok(q);
        }
        let q = build_dual_proposal(
            &self.target,
            &self.relabelled,
            self.config.j,
            &self.stream.role(Role::Subsample),
        )?;
        Ok(self.dual.get_or_init(|| q))
    }

    pub fn particle_stream(&self) -> RngStream {
        self.stream.role(Role::Particles)
    }

    pub fn run(&self, method: Method) -> Result<EvidenceEstimate> {
        let cfg = self.config;
        let target = &self.target;
        let pivot = &self.pivot.draw.params;
        match method {
            Method::ChibStar => chib(target, &self.chain.draws, pivot, ChibMode::KFactorial),
            Method::ChibPlain => chib(target, &self.chain.draws, pivot, ChibMode::Plain),
            Method::Chib => chib(
                target,
                &self.permuted.draws,
                pivot,
                ChibMode::PermutationAveraged,
            ),
            Method::Is => {
                let q = build_plugin_proposal(target, &self.pivot.draw)?;
                importance_sampling(target, &q, Method::Is, cfg.t, &self.particle_stream())
            }
            Method::Ds => importance_sampling(
                target,
                self.dual_proposal()?,
                Method::Ds,
                cfg.t,
                &self.particle_stream(),
            ),
            Method::DsApprox => truncated_dual_importance_sampling(
                target,
                self.dual_proposal()?,
                cfg.t,
                Truncation {
                    m: cfg.m,
                    tau: cfg.tau,
                },
                &self.particle_stream(),
            ),
            Method::J1 => {
                let q = build_rao_blackwell_proposal(
                    target,
                    &self.permuted.draws,
                    cfg.j1(),
                    &self.stream.role(Role::Subsample).child(1),
                )?;
                importance_sampling(target, &q, Method::J1, cfg.t, &self.particle_stream())
            }
            Method::Bridge => {
                let q = build_rao_blackwell_proposal(
                    target,
                    &self.permuted.draws,
                    cfg.bridge_j1,
                    &self.stream.role(Role::Subsample).child(2),
                )?;
                let posterior: Vec<MixtureParams> = self.permuted.params();
                let bc = BridgeConfig {
                    m1: cfg.m1,
                    m2: cfg.m2,
                    iterations: cfg.bridge_iterations,
                };
                bridge_sampling(target, &q, &posterior, bc, &self.stream.role(Role::Bridge))
            }
        }
    }
}

/// One estimator on one replicate. Failed estimators keep their error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub k: usize,
    pub log_evidence: Option<f64>,
    pub std_error: Option<f64>,
    pub ess: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub a_size: Option<usize>,
    pub phi_hat: Option<f64>,
    pub delta: Option<f64>,
    pub evaluations: Option<u64>,
    pub elapsed_seconds: f64,
    pub error: Option<String>,
}

impl EstimateRow {
    fn new(
        replicate: usize,
        seed: u64,
        method: Method,
        k: usize,
        result: Result<EvidenceEstimate>,
    ) -> Self {
        match result {
            Ok(e) => {
                let c = e.contributions.as_ref();
                EstimateRow {
                    replicate,
                    seed,
                    method,
                    k,
                    log_evidence: Some(e.log_evidence),
                    std_error: Some(e.std_error),
                    ess: Some(e.ess),
                    r: Some(e.r),
                    a_size: c.map(|c| c.a_size),
                    phi_hat: c.map(|c| c.phi_hat),
                    delta: c.map(|c| c.delta),
                    evaluations: Some(e.evaluations),
                    elapsed_seconds: e.elapsed_seconds,
                    error: None,
                }
            }
            Err(err) => EstimateRow {
                replicate,
                seed,
                method,
                k,
                log_evidence: None,
                std_error: None,
                ess: None,
                r: None,
                a_size: None,
                phi_hat: None,
                delta: None,
                evaluations: None,
                elapsed_seconds: 0.0,
                error: Some(err.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub replicate: usize,
    pub label_switches: usize,
    pub underflow_fallbacks: usize,
    pub pivot_log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub dataset: String,
    pub n: usize,
    pub rows: Vec<EstimateRow>,
    pub chains: Vec<ChainDiagnostics>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every replicate. Replicates that fail before estimation (data, prior
/// or Gibbs errors) abort the run; estimator failures are recorded per row.
pub fn run_experiment(config: &ExperimentConfig, exec: Exec) -> Result<RunRecord> {
    config.validate()?;
    let data = config.load_data()?;
    let prior = config.prior.build(&data)?;
    let per_replicate = exec.map(
        config.replicates,
        |r| -> Result<(Vec<EstimateRow>, ChainDiagnostics)> {
            let rep = Replicate::prepare(config, &data, &prior, r, exec)?;
            let rows = config
                .estimators
                .iter()
                .map(|&m| EstimateRow::new(r, rep.seed(), m, config.k, rep.run(m)))
                .collect();
            let diag = ChainDiagnostics {
                replicate: r,
                label_switches: rep.chain.switch_count(),
                underflow_fallbacks: rep.chain.underflow_fallbacks,
                pivot_log_posterior: rep.pivot.log_posterior,
            };
            Ok((rows, diag))
        },
    );
    let mut rows = Vec::new();
    let mut chains = Vec::new();
    for res in per_replicate {
        let (r, d) = res?;
        rows.extend(r);
        chains.push(d);
    }
    Ok(RunRecord {
        config: config.clone(),
        dataset: data.name().to_string(),
        n: data.len(),
        summary: summarize(&rows),
        rows,
        chains,
    })
}

//! Experiment configuration, read from a flat JSON document.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::model::{Dataset, PriorSpec};
use crate::numerics::factorial;

use super::data::{galaxy, generate_dataset, load_dataset, MixtureSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DatasetSource {
    D1,
    D2,
    Galaxy,
    File(PathBuf),
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "d1" => DatasetSource::D1,
            "d2" => DatasetSource::D2,
            "galaxy" => DatasetSource::Galaxy,
            "" => return Err(Error::Usage("empty dataset name".into())),
            _ => DatasetSource::File(PathBuf::from(s)),
        })
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::D1 => f.write_str("d1"),
            DatasetSource::D2 => f.write_str("d2"),
            DatasetSource::Galaxy => f.write_str("galaxy"),
            DatasetSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl TryFrom<String> for DatasetSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DatasetSource> for String {
    fn from(d: DatasetSource) -> String {
        d.to_string()
    }
}

impl DatasetSource {
    /// Simulated sources use `n` (default 60 for D1, 80 for D2) and `seed`.
    pub fn load(&self, n: Option<usize>, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::D1 => generate_dataset(&MixtureSpec::d1(), n.unwrap_or(60), seed, "d1"),
            DatasetSource::D2 => generate_dataset(&MixtureSpec::d2(), n.unwrap_or(80), seed, "d2"),
            DatasetSource::Galaxy => Ok(galaxy()),
            DatasetSource::File(p) => load_dataset(p),
        }
    }
}

/// `fixed:a,b` (inverse-gamma variance prior) or `rg` (hierarchical).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PriorChoice {
    Fixed { a: f64, b: f64 },
    RichardsonGreen,
}

impl FromStr for PriorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("rg") {
            return Ok(PriorChoice::RichardsonGreen);
        }
        let bad = || Error::Usage(format!("prior `{s}` is neither `rg` nor `fixed:a,b`"));
        let rest = s.strip_prefix("fixed:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        Ok(PriorChoice::Fixed { a, b })
    }
}

impl fmt::Display for PriorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorChoice::Fixed { a, b } => write!(f, "fixed:{a},{b}"),
            PriorChoice::RichardsonGreen => f.write_str("rg"),
        }
    }
}

impl TryFrom<String> for PriorChoice {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PriorChoice> for String {
    fn from(p: PriorChoice) -> String {
        p.to_string()
    }
}

impl PriorChoice {
    pub fn build(&self, data: &Dataset) -> Result<PriorSpec> {
        match *self {
            PriorChoice::Fixed { a, b } => PriorSpec::normal_inverse_gamma(a, b),
            PriorChoice::RichardsonGreen => PriorSpec::richardson_green(data),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Sample size for simulated datasets.
    pub n: Option<usize>,
    /// Seed for simulated datasets; defaults to `seed`.
    pub data_seed: Option<u64>,
    pub k: usize,
    pub prior: PriorChoice,
    pub estimators: Vec<Method>,
    /// Importance-sampling particles.
    #[serde(rename = "T")]
    pub t: usize,
    /// Conditioning draws in the dual proposal.
    #[serde(rename = "J")]
    pub j: usize,
    /// Conditioning draws in the Rao–Blackwell proposal; `None` means
    /// `min(100·k!, 5000)`.
    #[serde(rename = "J1")]
    pub j1: Option<usize>,
    /// Conditioning draws in the bridge-sampling proposal.
    pub bridge_j1: usize,
    /// Calibration particles for the truncated dual estimator.
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    pub tau: f64,
    pub burn_in: usize,
    /// Gibbs sweeps kept after burn-in.
    pub iterations: usize,
    pub bridge_iterations: usize,
    pub replicates: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::D1,
            n: None,
            data_seed: None,
            k: 2,
            prior: PriorChoice::Fixed { a: 2.0, b: 3.0 },
            estimators: Method::COMPARED.to_vec(),
            t: 10_000,
            j: 100,
            j1: None,
            bridge_j1: 4_000,
            m: 1_000,
            m1: 6_000,
            m2: 6_000,
            tau: f64::MIN_POSITIVE,
            burn_in: 5_000,
            iterations: 10_000,
            bridge_iterations: 10,
            replicates: 50,
            seed: 1,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn j1(&self) -> usize {
        self.j1.unwrap_or_else(|| {
            let kf = factorial(self.k).min(u128::from(u32::MAX)) as usize;
            (100 * kf).min(5_000)
        })
    }

    pub fn data_seed(&self) -> u64 {
        self.data_seed.unwrap_or(self.seed)
    }

    pub fn load_data(&self) -> Result<Dataset> {
        self.dataset.load(self.n, self.data_seed())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("k", self.k),
            ("T", self.t),
            ("J", self.j),
            ("J1", self.j1()),
            ("bridge_j1", self.bridge_j1),
            ("M", self.m),
            ("M1", self.m1),
            ("M2", self.m2),
            ("iterations", self.iterations),
            ("bridge_iterations", self.bridge_iterations),
            ("replicates", self.replicates),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Usage(format!("{name} must be positive")));
        }
        if self.n == Some(0) {
            return Err(Error::Usage("n must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Usage(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.m > self.t {
            return Err(Error::Usage(format!(
                "M ({}) cannot exceed T ({})",
                self.m, self.t
            )));
        }
        if let PriorChoice::Fixed { a, b } = self.prior {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Usage(format!(
                    "fixed prior needs a, b > 0, got {a}, {b}"
                )));
            }
        }
        if self.estimators.is_empty() {
            return Err(Error::Usage("no estimators requested".into()));
        }
        if let Some(m) = self
            .estimators
            .iter()
            .find(|m| !Method::COMPARED.contains(m))
        {
            return Err(Error::Usage(format!(
                "`{m}` is not one of the compared estimators"
            )));
        }
        let uses = |ms: &[Method]| self.estimators.iter().any(|m| ms.contains(m));
        let sampled = [
            ("J", self.j, uses(&[Method::Ds, Method::DsApprox])),
            ("J1", self.j1(), uses(&[Method::J1])),
            ("bridge_j1", self.bridge_j1, uses(&[Method::Bridge])),
        ];
        if let Some((name, j, _)) = sampled
            .iter()
            .find(|(_, j, used)| *used && *j > self.iterations)
        {
            return Err(Error::Usage(format!(
                "{name} = {j} exceeds the {} kept Gibbs draws",
                self.iterations
            )));
        }
        Ok(())
    }
}

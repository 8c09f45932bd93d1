//! Simulated and file-based datasets.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::numerics::dist::{sample_categorical, sample_normal};
use crate::numerics::{RngStream, Role};

const GALAXY: &str = include_str!("../../data/galaxy.txt");

/// A finite Gaussian mixture to simulate from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl MixtureSpec {
    /// `0.3 N(−1, 1) + 0.7 N(5, 2²)`.
    pub fn d1() -> Self {
        MixtureSpec {
            weights: vec![0.3, 0.7],
            means: vec![-1.0, 5.0],
            sds: vec![1.0, 2.0],
        }
    }

    /// `0.15 N(−5, 1) + 0.65 N(1, 2²) + 0.2 N(6, 1)`.
    pub fn d2() -> Self {
        MixtureSpec {
            weights: vec![0.15, 0.65, 0.2],
            means: vec![-5.0, 1.0, 6.0],
            sds: vec![1.0, 2.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.sds.len() != k {
            return Err(Error::InvalidParameter(
                "mixture spec vectors must be non-empty and of equal length".into(),
            ));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0))
            || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidParameter(format!(
                "mixture weights {:?} are not a probability vector",
                self.weights
            )));
        }
        if self.sds.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::InvalidParameter(
                "mixture means must be finite and sds positive".into(),
            ));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, m), s)| w * (s * s + m * m))
            .sum::<f64>()
            - mu * mu
    }
}

/// `n` i.i.d. draws, deterministic in `seed`.
pub fn generate_dataset(spec: &MixtureSpec, n: usize, seed: u64, name: &str) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    let mut rng = RngStream::new(seed).role(Role::Data).rng();
    let values = (0..n)
        .map(|_| {
            let c = sample_categorical(&mut rng, &spec.weights);
            sample_normal(&mut rng, spec.means[c], spec.sds[c] * spec.sds[c])
        })
        .collect();
    Dataset::new(name, values)
}

/// One value per line; blank lines and text after `#` are ignored.
pub fn parse_dataset(text: &str, name: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body.parse().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("`{body}`: {e}"),
        })?;
        values.push(v);
    }
    Dataset::new(name, values)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("data")
        .to_string();
    parse_dataset(&fs::read_to_string(path)?, &name)
}

/// The 82 galaxy velocities shipped with the crate, in 1000 km/s.
pub fn galaxy() -> Dataset {
    parse_dataset(GALAXY, "galaxy").expect("bundled galaxy data parses")
}

/// Writes one value per line with full round-trip precision.
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut text = format!("# {} ({} values)\n", data.name(), data.len());
    for v in data.values() {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

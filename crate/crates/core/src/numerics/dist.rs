//! Normalised log-densities and samplers for the handful of families the
//! mixture model needs.
//!
//! Parameterisations: `Normal(mean, variance)`, `Gamma(shape, rate)`,
//! `InverseGamma(shape, scale)` with density `∝ x^{-shape-1} e^{-scale/x}`,
//! `Dirichlet(α)` and `Categorical(p)`. Points outside the support have log
//! density `-∞`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn inv_gamma_ln_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// `ln Γ(Σα) − Σ ln Γ(αᵢ)`.
pub fn dirichlet_ln_norm(alpha: &[f64]) -> f64 {
    let total: f64 = alpha.iter().sum();
    ln_gamma(total) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>()
}

pub fn dirichlet_ln_pdf(x: &[f64], alpha: &[f64]) -> f64 {
    if x.len() != alpha.len() || x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return f64::NEG_INFINITY;
    }
    if (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return f64::NEG_INFINITY;
    }
    let mut acc = dirichlet_ln_norm(alpha);
    for (&v, &a) in x.iter().zip(alpha) {
        acc += xlogy(a - 1.0, v);
    }
    acc
}

/// `a · ln(y)` with the convention `0 · ln 0 = 0`.
pub fn xlogy(a: f64, y: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * y.ln()
    }
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, var: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + var.sqrt() * z
}

pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters validated by caller")
        .sample(rng)
}

pub fn sample_inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    1.0 / sample_gamma(rng, shape, scale)
}

pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = alpha.iter().map(|&a| sample_gamma(rng, a, 1.0)).collect();
    let total: f64 = g.iter().sum();
    if total > 0.0 {
        g.iter_mut().for_each(|v| *v /= total);
    } else {
        // every gamma draw underflowed; only possible for tiny concentrations
        let i = rng.random_range(0..g.len());
        g.iter_mut()
            .enumerate()
            .for_each(|(j, v)| *v = if j == i { 1.0 } else { 0.0 });
    }
    g
}

pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver above the cumulative sum; return the last positive cell
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// A point in the support of some [`DistSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Variate {
    Real(f64),
    Index(usize),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistSpec {
    Normal { mean: f64, variance: f64 },
    InverseGamma { shape: f64, scale: f64 },
    Gamma { shape: f64, rate: f64 },
    Dirichlet { concentration: Vec<f64> },
    Categorical { probs: Vec<f64> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::Normal { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidParameter(format!("normal mean {mean}")));
                }
                positive("variance", *variance)
            }
            DistSpec::InverseGamma { shape, scale } => {
                positive("shape", *shape)?;
                positive("scale", *scale)
            }
            DistSpec::Gamma { shape, rate } => {
                positive("shape", *shape)?;
                positive("rate", *rate)
            }
            DistSpec::Dirichlet { concentration } => {
                if concentration.is_empty() {
                    return Err(Error::EmptyInput("dirichlet concentration"));
                }
                concentration
                    .iter()
                    .try_for_each(|&a| positive("concentration", a))
            }
            DistSpec::Categorical { probs } => {
                if probs.is_empty() {
                    return Err(Error::EmptyInput("categorical probabilities"));
                }
                if probs.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "negative categorical probability".into(),
                    ));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "categorical probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Normalised log-density (log-mass for `Categorical`). Mismatched point
    /// kinds are an error; points outside the support give `-∞`.
    pub fn log_pdf(&self, point: &Variate) -> Result<f64> {
        let v = match (self, point) {
            (DistSpec::Normal { mean, variance }, Variate::Real(x)) => {
                normal_ln_pdf(*x, *mean, *variance)
            }
            (DistSpec::InverseGamma { shape, scale }, Variate::Real(x)) => {
                inv_gamma_ln_pdf(*x, *shape, *scale)
            }
            (DistSpec::Gamma { shape, rate }, Variate::Real(x)) => gamma_ln_pdf(*x, *shape, *rate),
            (DistSpec::Dirichlet { concentration }, Variate::Vector(x)) => {
                dirichlet_ln_pdf(x, concentration)
            }
            (DistSpec::Categorical { probs }, Variate::Index(i)) => {
                probs.get(*i).map_or(f64::NEG_INFINITY, |p| p.ln())
            }
            (spec, point) => {
                return Err(Error::InvalidParameter(format!(
                    "point {point:?} does not belong to the sample space of {spec:?}"
                )))
            }
        };
        Ok(v)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Variate {
        match self {
            DistSpec::Normal { mean, variance } => {
                Variate::Real(sample_normal(rng, *mean, *variance))
            }
            DistSpec::InverseGamma { shape, scale } => {
                Variate::Real(sample_inv_gamma(rng, *shape, *scale))
            }
            DistSpec::Gamma { shape, rate } => Variate::Real(sample_gamma(rng, *shape, *rate)),
            DistSpec::Dirichlet { concentration } => {
                Variate::Vector(sample_dirichlet(rng, concentration))
            }
            DistSpec::Categorical { probs } => Variate::Index(sample_categorical(rng, probs)),
        }
    }

    /// Convenience for scalar families.
    pub fn sample_real<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.sample(rng) {
            Variate::Real(x) => x,
            other => panic!("sample_real on a non-scalar family: {other:?}"),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            DistSpec::Normal { mean, .. } => Some(*mean),
            DistSpec::Gamma { shape, rate } => Some(shape / rate),
            DistSpec::InverseGamma { shape, scale } if *shape > 1.0 => Some(scale / (shape - 1.0)),
            _ => None,
        }
    }
}

/// `ln √(2π)`, occasionally handy for callers assembling Gaussian terms.
pub fn ln_sqrt_2pi() -> f64 {
    0.5 * (2.0 * PI).ln()
}

//! Log-domain sums. Weights in this crate span hundreds of orders of magnitude,
//! so nothing is exponentiated before the maximum has been factored out.

use crate::error::{Error, Result};

/// `ln Σ exp(xᵢ)` with max-shift. Returns `-∞` for an empty slice or when every
/// entry is `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Same as [`log_sum_exp`] but rejects empty input.
pub fn try_log_sum_exp(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("log_sum_exp of an empty slice"));
    }
    Ok(log_sum_exp(xs))
}

/// `ln((1/n) Σ exp(xᵢ))`.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_case() {
        let v = log_sum_exp(&[0.0, 0.0]);
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn absorbs_negative_infinity() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn survives_large_negative_values() {
        let v = log_sum_exp(&[-1000.0, -1000.0, -1000.0]);
        assert!((v - (-1000.0 + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn empty_is_a_usage_error() {
        assert!(matches!(try_log_sum_exp(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn add_exp_matches_sum() {
        let a = -3.2;
        let b = 7.5;
        assert!((log_add_exp(a, b) - log_sum_exp(&[a, b])).abs() < 1e-14);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, b), b);
    }

    proptest! {
        #[test]
        fn shift_invariance(xs in prop::collection::vec(-700.0f64..700.0, 1..40), c in -500.0f64..500.0) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let lhs = log_sum_exp(&shifted);
            let rhs = log_sum_exp(&xs) + c;
            prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
        }
    }
}

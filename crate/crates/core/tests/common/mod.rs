//! Deterministic oracles shared by the integration suites.

#![allow(dead_code)]

use mixture_evidence::harness::{generate_dataset, MixtureSpec};
use mixture_evidence::model::{Dataset, MixtureParams, PriorSpec};
use mixture_evidence::numerics::dist::normal_ln_pdf;

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod on `[a, b]` by recursive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        whole: (f64, f64),
        depth: usize,
    ) -> f64 {
        if whole.1 <= tol || depth == 0 {
            return whole.0;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth - 1) + rec(f, m, b, 0.5 * tol, right, depth - 1)
    }
    rec(f, a, b, abs_tol, gk15(f, a, b), 40)
}

/// `ln ∫∫ exp(g(x, y)) dy dx` over a rectangle, rescaled by the grid maximum of `g`.
pub fn log_integrate_2d<G: Fn(f64, f64) -> f64>(g: &G, x: (f64, f64), y: (f64, f64)) -> f64 {
    let n = 400;
    let mut peak = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let xi = x.0 + (x.1 - x.0) * i as f64 / n as f64;
            let yj = y.0 + (y.1 - y.0) * j as f64 / n as f64;
            peak = peak.max(g(xi, yj));
        }
    }
    let inner = |xi: f64| integrate(&|yj: f64| (g(xi, yj) - peak).exp(), y.0, y.1, 1e-13);
    integrate(&inner, x.0, x.1, 1e-12).ln() + peak
}

/// `ln ∫ exp(g(x)) dx` over an interval.
pub fn log_integrate_1d<G: Fn(f64) -> f64>(g: &G, x: (f64, f64)) -> f64 {
    let n = 4000;
    let peak = (0..=n)
        .map(|i| g(x.0 + (x.1 - x.0) * i as f64 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    integrate(&|t: f64| (g(t) - peak).exp(), x.0, x.1, 1e-13).ln() + peak
}

/// Single-component evidence by 2-D quadrature over `(μ, ln σ²)`.
pub fn k1_log_evidence(data: &Dataset, prior: &PriorSpec) -> f64 {
    let xs = data.values();
    let mean = data.mean();
    let sd = data.variance().sqrt();
    let log_joint = |mu: f64, s: f64| {
        let v = s.exp();
        let p = MixtureParams::new(vec![1.0], vec![mu], vec![v]).unwrap();
        let ll: f64 = xs.iter().map(|&x| normal_ln_pdf(x, mu, v)).sum();
        prior.log_prior(&p) + ll + s
    };
    let half = 12.0 * sd / (xs.len() as f64).sqrt() + 1e-3;
    let s0 = data.variance().ln();
    log_integrate_2d(&log_joint, (mean - half, mean + half), (s0 - 4.0, s0 + 4.0))
}

/// Single-component evidence with `μ` integrated analytically given `σ²`, then 1-D quadrature.
pub fn k1_log_evidence_semi(data: &Dataset, prior: &PriorSpec) -> f64 {
    let (m0, v0) = prior.mean_prior();
    let xs = data.values();
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    let sumsq: f64 = xs.iter().map(|x| x * x).sum();
    let g = |s: f64| {
        let v = s.exp();
        let prec = 1.0 / v0 + n / v;
        let post_mean = (m0 / v0 + sum / v) / prec;
        let log_marg = -0.5 * n * (2.0 * std::f64::consts::PI * v).ln()
            - 0.5 * (v0 * prec).ln()
            - 0.5 * (sumsq / v + m0 * m0 / v0 - prec * post_mean * post_mean);
        let p = MixtureParams::new(vec![1.0], vec![m0], vec![v]).unwrap();
        // strip the μ term from the prior at μ = m0
        let log_var_prior = prior.log_prior(&p) - normal_ln_pdf(m0, m0, v0);
        log_marg + log_var_prior + s
    };
    let s0 = data.variance().ln();
    log_integrate_1d(&g, (s0 - 6.0, s0 + 6.0))
}

/// The standard-normal dataset of the single-component concordance check.
pub fn normal60(seed: u64) -> Dataset {
    let spec = MixtureSpec {
        weights: vec![1.0],
        means: vec![0.0],
        sds: vec![1.0],
    };
    generate_dataset(&spec, 60, seed, "normal60").unwrap()
}

//! Distance distributions of i.i.d. and Gaussian data.
//!
//! Norms of `N(0, σ² I_d)` samples follow the chi scale family `χ(d, σ)`;
//! distances between two samples of `N(μ, σ² I_d)` follow `χ(d, √2 σ)`. For
//! any i.i.d. coordinates the norm tends to a normal whose variance does not
//! depend on `d`, so the expected nearest-to-farthest spread stays constant
//! while the ratio of the two tends to 1. This module provides the laws plus
//! seeded Monte Carlo samplers and Kolmogorov-Smirnov statistics to check
//! them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_p, ln_gamma};

/// Chi scale family `χ(d, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiParams {
    pub d: u32,
    pub sigma: f64,
}

impl ChiParams {
    pub fn new(d: u32, sigma: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter("chi needs d >= 1".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("chi scale {sigma}")));
        }
        Ok(Self { d, sigma })
    }
}

/// `x^(d-1) e^(-x²/2σ²) / (Γ(d/2) 2^(d/2-1) σ^d)`, 0 for `x < 0`.
pub fn chi_pdf(x: f64, p: ChiParams) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let d = p.d as f64;
    if x == 0.0 {
        return if p.d == 1 { (2.0 / std::f64::consts::PI).sqrt() / p.sigma } else { 0.0 };
    }
    let log_pdf = (d - 1.0) * x.ln()
        - x * x / (2.0 * p.sigma * p.sigma)
        - ln_gamma(d / 2.0)
        - (d / 2.0 - 1.0) * std::f64::consts::LN_2
        - d * p.sigma.ln();
    log_pdf.exp()
}

/// `P(d/2, x²/2σ²)`, the regularized lower incomplete gamma.
pub fn chi_cdf(x: f64, p: ChiParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = x / p.sigma;
    gamma_p(p.d as f64 / 2.0, z * z / 2.0)
}

/// Law of the distance between two independent `N(μ, σ² I_d)` samples.
pub fn interpoint_chi_params(d: u32, sigma: f64) -> Result<ChiParams> {
    ChiParams::new(d, std::f64::consts::SQRT_2 * sigma)
}

/// Moments of the squared coordinate `Y_i²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalLimitParams {
    pub mu_y2: f64,
    pub var_y2: f64,
    pub d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalLimit {
    pub mean: f64,
    pub variance: f64,
}

/// Limiting normal of `‖Y‖`: mean `√(d μ)`, variance `σ²_{Y²} / 4μ`.
pub fn normal_limit(p: NormalLimitParams) -> Result<NormalLimit> {
    if !(p.mu_y2 > 0.0) {
        return Err(Error::InvalidParameter(format!("mu_y2 must be positive, got {}", p.mu_y2)));
    }
    if !(p.var_y2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("var_y2 must be >= 0, got {}", p.var_y2)));
    }
    Ok(NormalLimit {
        mean: (p.d as f64 * p.mu_y2).sqrt(),
        variance: p.var_y2 / (4.0 * p.mu_y2),
    })
}

/// Distribution of each i.i.d. coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    /// Standard normal.
    Gaussian,
    /// Uniform on `[-1, 1]`.
    Uniform,
}

impl Component {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Component::Gaussian => rng.sample(StandardNormal),
            Component::Uniform => rng.gen_range(-1.0..=1.0),
        }
    }

    /// `E[Y²]` and `Var[Y²]`.
    pub fn square_moments(&self) -> (f64, f64) {
        match self {
            Component::Gaussian => (1.0, 2.0),
            // E[Y^2] = 1/3, E[Y^4] = 1/5
            Component::Uniform => (1.0 / 3.0, 1.0 / 5.0 - 1.0 / 9.0),
        }
    }

    pub fn limit_params(&self, d: u32) -> NormalLimitParams {
        let (mu_y2, var_y2) = self.square_moments();
        NormalLimitParams { mu_y2, var_y2, d }
    }
}

fn norm_of_sample<R: Rng + ?Sized>(c: Component, d: u32, rng: &mut R) -> f64 {
    (0..d).map(|_| c.sample(rng).powi(2)).sum::<f64>().sqrt()
}

/// `count` norms of `d`-dimensional vectors with i.i.d. `c` coordinates
/// scaled by `sigma`.
pub fn sample_norms(c: Component, d: u32, sigma: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sigma * norm_of_sample(c, d, &mut rng)).collect()
}

/// Distances between `count` independent pairs drawn from
/// `N(center, σ² I_d)`.
pub fn sample_interpoint_distances(
    d: u32,
    sigma: f64,
    center: f64,
    count: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let y = center + sigma * rng.sample::<f64, _>(StandardNormal);
                    let q = center + sigma * rng.sample::<f64, _>(StandardNormal);
                    (y - q).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous cdf.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Monte Carlo estimates of the nearest and farthest of `n` norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    /// Mean of `X_(1)`.
    pub nearest: f64,
    /// Mean of `X_(n)`.
    pub farthest: f64,
    /// Mean of `X_(n) - X_(1)`.
    pub range: f64,
}

impl RangeEstimate {
    pub fn ratio(&self) -> f64 {
        self.nearest / self.farthest
    }
}

/// Expected farthest-minus-nearest distance from the origin among `n`
/// i.i.d. `d`-dimensional samples. Each trial uses its own ChaCha stream
/// of the master seed, so the estimate does not depend on scheduling.
pub fn expected_range_mc(
    c: Component,
    n: usize,
    d: u32,
    trials: usize,
    seed: u64,
) -> Result<RangeEstimate> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    if n < 2 || d < 1 {
        return Err(Error::InvalidParameter(format!("need n >= 2 and d >= 1 (n={n}, d={d})")));
    }
    let per_trial: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for _ in 0..n {
                let x = norm_of_sample(c, d, &mut rng);
                lo = lo.min(x);
                hi = hi.max(x);
            }
            (lo, hi)
        })
        .collect();
    let t = trials as f64;
    let nearest = per_trial.iter().map(|p| p.0).sum::<f64>() / t;
    let farthest = per_trial.iter().map(|p| p.1).sum::<f64>() / t;
    let range = per_trial.iter().map(|p| p.1 - p.0).sum::<f64>() / t;
    Ok(RangeEstimate { nearest, farthest, range })
}

//! Local cluster cardinality estimation from sorted distance rows.
//!
//! For a point, the sorted distances to all other points are scanned with
//! the statistic `gamma(k) = s_k^2 / (mean_k - y_k)^2`, where `mean_k` and
//! `s_k^2` are the population mean and variance of the `k` smallest
//! distances. Its minimum between `min_boundary` and `max_boundary` marks
//! the density gap between the point's own cluster and the rest. The scan
//! is repeated over a range extended past `max_boundary`; if the minimum
//! moves, the estimate was held in place by the boundary and is flagged bad.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{sorted_row, SortedDistanceRow};

pub const DEFAULT_MIN_BOUNDARY: usize = 5;
pub const DEFAULT_MAX_FRACTION: f64 = 0.5;
pub const DEFAULT_EXTENSION: f64 = 1.1;

/// A boundary given either as an absolute count or as a fraction of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Boundary {
    Count(usize),
    Fraction(f64),
}

impl Boundary {
    /// Floors fractions against `n`.
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Boundary::Count(c) => c,
            Boundary::Fraction(f) => (f * n as f64 + 1e-9).floor().max(0.0) as usize,
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    /// Accepts `"12"` or `"0.5n"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidBoundary(format!("cannot parse boundary {s:?}"));
        if let Some(frac) = s.strip_suffix('n') {
            let f: f64 = frac.trim().parse().map_err(|_| bad())?;
            if !(f > 0.0 && f.is_finite()) {
                return Err(bad());
            }
            Ok(Boundary::Fraction(f))
        } else {
            s.parse().map(Boundary::Count).map_err(|_| bad())
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Count(c) => write!(f, "{c}"),
            Boundary::Fraction(x) => write!(f, "{x}n"),
        }
    }
}

impl TryFrom<String> for Boundary {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Boundary> for String {
    fn from(b: Boundary) -> String {
        b.to_string()
    }
}

/// Resolved scan boundaries for a dataset of known size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub min_boundary: usize,
    pub max_boundary: usize,
    pub extension_factor: f64,
    extended_max: usize,
}

impl BoundaryParams {
    /// Resolves boundaries against `n` points. Rows hold `n - 1` distances,
    /// so both the maximum and its extension are clamped to `n - 1`.
    pub fn new(min: Boundary, max: Boundary, extension_factor: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidBoundary(format!("need at least 3 points, got {n}")));
        }
        if !(extension_factor > 1.0 && extension_factor.is_finite()) {
            return Err(Error::InvalidBoundary(format!(
                "extension factor must exceed 1, got {extension_factor}"
            )));
        }
        let min_boundary = min.resolve(n);
        let max_boundary = max.resolve(n).min(n - 1);
        if min_boundary < 2 || min_boundary >= max_boundary {
            return Err(Error::InvalidBoundary(format!(
                "need 2 <= min ({min_boundary}) < max ({max_boundary}) <= n - 1 ({})",
                n - 1
            )));
        }
        let extended_max =
            ((extension_factor * max_boundary as f64 + 1e-9).floor() as usize).min(n - 1);
        Ok(Self { min_boundary, max_boundary, extension_factor, extended_max })
    }

    /// `min = 5`, `max = floor(n / 2)`, extension 1.1.
    pub fn defaults(n: usize) -> Result<Self> {
        Self::new(
            Boundary::Count(DEFAULT_MIN_BOUNDARY),
            Boundary::Fraction(DEFAULT_MAX_FRACTION),
            DEFAULT_EXTENSION,
            n,
        )
    }

    /// Upper end of the extended scan, `floor(extension * max)` clamped.
    pub fn extended_max(&self) -> usize {
        self.extended_max
    }
}

/// Evaluates `s^2 / (mean - y_k)^2` on an ascending prefix, with
/// population (divide by `k`) mean and variance. Values are taken relative to
/// `y_1`, which leaves gamma unchanged and avoids cancellation.
pub fn gamma(prefix: &[f64]) -> Result<f64> {
    let k = prefix.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!("gamma needs k >= 2, got {k}")));
    }
    let kf = k as f64;
    let base = prefix[0];
    let mean = prefix.iter().map(|y| y - base).sum::<f64>() / kf;
    let s2 = prefix.iter().map(|y| (y - base - mean).powi(2)).sum::<f64>() / kf;
    let gap = (mean - (prefix[k - 1] - base)).powi(2);
    if gap == 0.0 {
        return Err(Error::GammaUndefined);
    }
    Ok(s2 / gap)
}

/// Gamma values for prefix lengths `k_offset ..= k_offset + values.len() - 1`.
/// Entries are `None` where the prefix mean equals `y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaProfile {
    pub k_offset: usize,
    pub values: Vec<Option<f64>>,
}

impl GammaProfile {
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_offset)
            .and_then(|i| self.values.get(i).copied().flatten())
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<usize> {
        self.k_offset..=self.k_offset + self.values.len() - 1
    }

    /// Smallest-`k` argmin over `lo ..= hi`, skipping undefined entries.
    pub fn argmin(&self, lo: usize, hi: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for k in lo..=hi {
            if let Some(g) = self.get(k) {
                if best.map_or(true, |(_, b)| g < b) {
                    best = Some((k, g));
                }
            }
        }
        best.map(|(k, _)| k)
    }
}

/// Gamma over `min_boundary ..= extended_max`, using a running mean and sum
/// of squared deviations (Welford) so the whole scan is O(extended_max).
/// Distances are shifted by `y_1` as in [`gamma`].
pub fn gamma_profile(row: &SortedDistanceRow, bp: &BoundaryParams) -> Result<GammaProfile> {
    let hi = bp.extended_max();
    if row.len() < hi {
        return Err(Error::RowTooShort { required: hi, available: row.len() });
    }
    let lo = bp.min_boundary;
    let mut values = Vec::with_capacity(hi + 1 - lo);
    let base = row.distances.first().copied().unwrap_or(0.0);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &y) in row.distances[..hi].iter().enumerate() {
        let y = y - base;
        let k = i + 1;
        let delta = y - mean;
        mean += delta / k as f64;
        m2 += delta * (y - mean);
        if k >= lo {
            let gap = (mean - y).powi(2);
            values.push((gap > 0.0).then(|| (m2 / k as f64) / gap));
        }
    }
    Ok(GammaProfile { k_offset: lo, values })
}

/// Per-point outcome of the cardinality scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardinalityEstimate {
    /// Argmin of gamma over `[min_boundary, max_boundary]`.
    pub n_hat: usize,
    /// Argmin over the extended range; equals `n_hat` iff the estimate is good.
    pub n_hat_extended: usize,
    pub good: bool,
    /// Population standard deviation of the `n_hat` nearest distances.
    pub h: f64,
    /// The `n_hat`-th smallest distance.
    pub omega: f64,
    pub mean_dist: f64,
    /// Mean squared distance over the prefix divided by the dimension.
    pub msd: f64,
}

/// Mean, population standard deviation and mean square of a prefix.
pub(crate) fn prefix_stats(prefix: &[f64]) -> (f64, f64, f64) {
    let k = prefix.len() as f64;
    let mean = prefix.iter().sum::<f64>() / k;
    let var = prefix.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / k;
    let mean_sq = prefix.iter().map(|y| y * y).sum::<f64>() / k;
    (mean, var.sqrt(), mean_sq)
}

/// Mean square distance of a prefix divided by the dimension.
pub fn msd(prefix: &[f64], dim: usize) -> f64 {
    prefix_stats(prefix).2 / dim.max(1) as f64
}

/// Runs the two argmin scans on one row and computes the prefix statistics.
/// `dim` is the data dimension, used only for the MSD.
pub fn estimate_cardinality(
    row: &SortedDistanceRow,
    bp: &BoundaryParams,
    dim: usize,
) -> Result<CardinalityEstimate> {
    let profile = gamma_profile(row, bp)?;
    let base = profile.argmin(bp.min_boundary, bp.max_boundary);
    let extended = profile.argmin(bp.min_boundary, bp.extended_max());
    let (n_hat, n_hat_extended, good) = match (base, extended) {
        (Some(a), Some(b)) => (a, b, a == b),
        // every gamma undefined (heavy duplication): nothing to locate
        _ => (bp.min_boundary, bp.min_boundary, false),
    };
    let prefix = &row.distances[..n_hat];
    let (mean_dist, h, mean_sq) = prefix_stats(prefix);
    Ok(CardinalityEstimate {
        n_hat,
        n_hat_extended,
        good,
        h,
        omega: prefix[n_hat - 1],
        mean_dist,
        msd: mean_sq / dim.max(1) as f64,
    })
}

/// Estimates for every point of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub per_point: Vec<CardinalityEstimate>,
    /// Indices of points with a good estimate, ascending.
    pub good: Vec<usize>,
    /// Indices of points with a bad estimate, ascending.
    pub bad: Vec<usize>,
}

impl Estimates {
    pub fn good_fraction(&self) -> f64 {
        self.good.len() as f64 / self.per_point.len() as f64
    }
}

/// Estimates cardinality for every point (in parallel) and splits the
/// points into good and bad sets.
pub fn estimate_all(ds: &Dataset, bp: &BoundaryParams) -> Result<Estimates> {
    let n = ds.n();
    if n <= bp.min_boundary + 1 {
        return Err(Error::InvalidBoundary(format!(
            "need more than min_boundary + 1 = {} points, got {n}",
            bp.min_boundary + 1
        )));
    }
    let dim = ds.dim();
    let per_point = (0..n)
        .into_par_iter()
        .map(|i| estimate_cardinality(&sorted_row(ds, i)?, bp, dim))
        .collect::<Result<Vec<_>>>()?;
    let (good, bad): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| per_point[i].good);
    if good.is_empty() {
        return Err(Error::NoGoodEstimates);
    }
    Ok(Estimates { per_point, good, bad })
}

/// Result of the normal-reference bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilvermanBandwidth {
    pub bandwidth: f64,
    /// Set when the spread estimate is zero (e.g. a constant sample).
    pub degenerate: bool,
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)` with the sample standard deviation
/// and linearly interpolated quartiles.
pub fn silverman_bandwidth(values: &[f64]) -> Result<SilvermanBandwidth> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 values, got {n}")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let a = sd.min(iqr / 1.34);
    let bandwidth = 0.9 * a * nf.powf(-0.2);
    let degenerate = !(bandwidth > 0.0);
    if degenerate {
        log::warn!("silverman bandwidth is zero: sample has no spread");
    }
    Ok(SilvermanBandwidth { bandwidth: bandwidth.max(0.0), degenerate })
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

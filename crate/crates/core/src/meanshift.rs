//! Cardinality-driven adaptive mean shift.
//!
//! Points with a good cardinality estimate are shifted toward the kernel
//! weighted mean of the whole dataset. At every iteration each shifted point
//! looks up the median cardinality of its five nearest good points, grows
//! that count gradually over the first 100 iterations, and derives its
//! bandwidth and cut-off radius from that many nearest distances. Points
//! with a bad estimate are attached to the closest mode afterwards.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cardinality::{estimate_all, Boundary, BoundaryParams, Estimates};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{euclidean, knn_in, sorted_row_from, squared_euclidean};

/// Number of good points consulted by [`local_n_parameter`].
pub const LOCAL_NEIGHBOURS: usize = 5;
/// Iterations over which the kernel grows to its full point count.
pub const RAMP_ITERATIONS: usize = 100;
pub const DEFAULT_MAX_ITER: usize = 250;
pub const DEFAULT_OFFSET_MULTIPLIER: f64 = 4.0;
/// Merge tolerance as a fraction of the median good-point radius.
pub const MERGE_TOL_FRACTION: f64 = 1e-3;
/// Convergence tolerance as a fraction of the median good-point radius.
pub const CONV_TOL_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    HighDim,
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "highdim" | "high-dim" => Ok(Self::HighDim),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::HighDim => "highdim",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Offset multiplier, used by the high-dimension kernel only.
    pub a: f64,
}

impl KernelSpec {
    pub fn gaussian() -> Self {
        Self { kind: KernelKind::Gaussian, a: DEFAULT_OFFSET_MULTIPLIER }
    }

    pub fn high_dim(a: f64) -> Self {
        Self { kind: KernelKind::HighDim, a }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel offset a = {}", self.a)));
        }
        Ok(())
    }

    /// Weight of a point at distance `x` under the given local parameters.
    pub fn weight(&self, x: f64, p: &LocalParams) -> Result<f64> {
        match self.kind {
            KernelKind::Gaussian => kernel_gaussian(x, p.h, p.omega),
            KernelKind::HighDim => kernel_highdim(x, p.h, p.omega, self.a, p.s, p.mean_dist),
        }
    }
}

/// `exp(-x^2 / 2h^2)` for `x <= omega`, else 0.
pub fn kernel_gaussian(x: f64, h: f64, omega: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::DegenerateBandwidth);
    }
    if x > omega {
        return Ok(0.0);
    }
    Ok((-(x * x) / (2.0 * h * h)).exp())
}

/// Gaussian kernel on the offset distance `max(x - max(mean_dist - a*s, 0), 0)`,
/// cut off beyond `omega`. A non-positive offset leaves distances untouched.
pub fn kernel_highdim(x: f64, h: f64, omega: f64, a: f64, s: f64, mean_dist: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::DegenerateBandwidth);
    }
    if x > omega {
        return Ok(0.0);
    }
    let offset = (mean_dist - a * s).max(0.0);
    let shifted = (x - offset).max(0.0);
    Ok((-(shifted * shifted) / (2.0 * h * h)).exp())
}

/// Kernel point count at iteration `j`: grows linearly from `min_boundary`
/// to `n_hat` over 100 iterations, then stays at `n_hat`.
pub fn gradual_count(n_hat: usize, j: usize, min_boundary: usize) -> usize {
    let n = n_hat as f64;
    let m = min_boundary as f64;
    let ramp = m + 0.01 * j as f64 * (n - m);
    ramp.min(n).round() as usize
}

fn lower_median(values: &mut [usize]) -> usize {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

/// Median cardinality estimate of the (up to) five good points nearest to
/// `p`. Even counts take the lower middle value.
pub fn local_n_parameter(
    p: ArrayView1<'_, f64>,
    good_points: ArrayView2<'_, f64>,
    n_hats: &[usize],
) -> Result<usize> {
    if good_points.nrows() != n_hats.len() {
        return Err(Error::LengthMismatch { left: good_points.nrows(), right: n_hats.len() });
    }
    let k = LOCAL_NEIGHBOURS.min(good_points.nrows());
    let mut near: Vec<usize> = knn_in(good_points, p, k)?.into_iter().map(|i| n_hats[i]).collect();
    Ok(lower_median(&mut near))
}

/// Kernel parameters resolved for one shifted point at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalParams {
    /// Regularised cardinality from the neighbouring good points.
    pub n_k: usize,
    /// Point count after the gradual ramp.
    pub n_star: usize,
    pub h: f64,
    pub omega: f64,
    pub mean_dist: f64,
    /// Standard deviation of the prefix with divisor `n_star - 1`.
    pub s: f64,
}

/// Shifted points at the start of iteration `iteration`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftState {
    pub positions: Array2<f64>,
    pub iteration: usize,
    /// Parameters used to produce `positions` (empty for the initial state).
    pub params: Vec<LocalParams>,
}

impl ShiftState {
    pub fn initial(positions: Array2<f64>) -> Self {
        Self { positions, iteration: 1, params: Vec::new() }
    }
}

/// Read-only inputs shared by every shift.
#[derive(Debug, Clone)]
pub struct ShiftContext<'a> {
    pub ds: &'a Dataset,
    /// Original coordinates of the good points.
    pub good_points: Array2<f64>,
    /// Cardinality estimates of the good points, same order.
    pub n_hats: Vec<usize>,
    pub kernel: KernelSpec,
    pub bp: BoundaryParams,
}

impl<'a> ShiftContext<'a> {
    pub fn new(
        ds: &'a Dataset,
        estimates: &Estimates,
        kernel: KernelSpec,
        bp: BoundaryParams,
    ) -> Result<Self> {
        kernel.validate()?;
        if estimates.per_point.len() != ds.n() {
            return Err(Error::LengthMismatch { left: estimates.per_point.len(), right: ds.n() });
        }
        if estimates.good.is_empty() {
            return Err(Error::NoGoodEstimates);
        }
        Ok(Self {
            ds,
            good_points: ds.points().select(Axis(0), &estimates.good),
            n_hats: estimates.good.iter().map(|&i| estimates.per_point[i].n_hat).collect(),
            kernel,
            bp,
        })
    }
}

/// One weighted-mean step for a single point.
fn shift_point(
    p: ArrayView1<'_, f64>,
    j: usize,
    ctx: &ShiftContext<'_>,
) -> Result<(Array1<f64>, LocalParams)> {
    let row = sorted_row_from(p, ctx.ds)?;
    let n_k = local_n_parameter(p, ctx.good_points.view(), &ctx.n_hats)?;
    let n_star = gradual_count(n_k, j, ctx.bp.min_boundary).clamp(1, row.len());
    let prefix = &row.distances[..n_star];
    let omega = prefix[n_star - 1];
    let k = n_star as f64;
    let mean_dist = prefix.iter().sum::<f64>() / k;
    let ss = prefix.iter().map(|y| (y - mean_dist).powi(2)).sum::<f64>();
    let mut h = (ss / k).sqrt();
    let s = if n_star > 1 { (ss / (k - 1.0)).sqrt() } else { 0.0 };
    if n_star < 2 || h == 0.0 {
        h = omega / 2.0;
    }
    let params = LocalParams { n_k, n_star, h, omega, mean_dist, s };
    if h == 0.0 {
        // every candidate coincides with p
        return Ok((p.to_owned(), params));
    }

    let mut acc = Array1::<f64>::zeros(p.len());
    let mut total = 0.0;
    for (&x, &idx) in row.distances.iter().zip(&row.order) {
        if x > omega {
            break;
        }
        let w = ctx.kernel.weight(x, &params)?;
        if w > 0.0 {
            acc.scaled_add(w, &ctx.ds.point(idx));
            total += w;
        }
    }
    if total > 0.0 {
        acc /= total;
        Ok((acc, params))
    } else {
        Ok((p.to_owned(), params))
    }
}

/// Moves every point of `state` to its kernel-weighted mean over the full
/// dataset. Points are shifted in parallel against the frozen state.
pub fn shift_once(state: &ShiftState, ctx: &ShiftContext<'_>) -> Result<ShiftState> {
    let j = state.iteration;
    let shifted = (0..state.positions.nrows())
        .into_par_iter()
        .map(|i| {
            let (pos, params) = shift_point(state.positions.row(i), j, ctx)?;
            if pos.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { index: i, iteration: j });
            }
            Ok((pos, params))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = state.positions.ncols();
    let mut positions = Array2::zeros((shifted.len(), d));
    let mut params = Vec::with_capacity(shifted.len());
    for (i, (pos, p)) in shifted.into_iter().enumerate() {
        positions.row_mut(i).assign(&pos);
        params.push(p);
    }
    Ok(ShiftState { positions, iteration: j + 1, params })
}

/// Stopping and merging tolerances for [`run_mean_shift`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub max_iter: usize,
    /// Stop once the largest displacement falls below this (after 100 iterations).
    pub conv_tol: f64,
    /// Points this close are treated as the same mode.
    pub merge_tol: f64,
}

/// Final positions of the good points and the iteration count.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome {
    /// One row per good point, in the order of `Estimates::good`.
    pub positions: Array2<f64>,
    pub iterations: usize,
    /// Distinct shifted points left after the last compaction.
    pub distinct: usize,
}

/// Iterates [`shift_once`] from the good points. After each iteration the
/// shifted points are compacted: points within `merge_tol` of an earlier one
/// are snapped onto it and followed as a single point from then on.
pub fn run_mean_shift(ctx: &ShiftContext<'_>, cfg: &ShiftConfig) -> Result<ShiftOutcome> {
    if cfg.max_iter <= RAMP_ITERATIONS {
        return Err(Error::InvalidParameter(format!(
            "max_iter must exceed {RAMP_ITERATIONS}, got {}",
            cfg.max_iter
        )));
    }
    if !(cfg.conv_tol > 0.0) || cfg.merge_tol.is_nan() || cfg.merge_tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerances conv {} merge {}",
            cfg.conv_tol, cfg.merge_tol
        )));
    }
    let mut state = ShiftState::initial(ctx.good_points.clone());
    let mut assignment: Vec<usize> = (0..ctx.good_points.nrows()).collect();
    let mut iterations = 0;
    for j in 1..=cfg.max_iter {
        let next = shift_once(&state, ctx)?;
        let displacement = state
            .positions
            .outer_iter()
            .zip(next.positions.outer_iter())
            .map(|(a, b)| euclidean(a, b))
            .fold(0.0, f64::max);

        let merged = merge_modes(next.positions.view(), cfg.merge_tol);
        for a in assignment.iter_mut() {
            *a = merged.labels[*a];
        }
        state = ShiftState { positions: merged.modes, iteration: next.iteration, params: vec![] };
        iterations = j;
        log::debug!(
            "iteration {j}: {} distinct points, max displacement {displacement:.3e}",
            state.positions.nrows()
        );
        if j > RAMP_ITERATIONS && displacement < cfg.conv_tol {
            break;
        }
    }
    let positions = state.positions.select(Axis(0), &assignment);
    Ok(ShiftOutcome { positions, iterations, distinct: state.positions.nrows() })
}

/// Modes, labels and per-cluster distance variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub modes: Array2<f64>,
    pub labels: Vec<usize>,
    /// Filled by [`cluster_variances`]; empty straight out of [`merge_modes`].
    pub cluster_s2: Vec<f64>,
}

impl ClusterResult {
    pub fn mode_count(&self) -> usize {
        self.modes.nrows()
    }
}

/// Greedy first-fit grouping: each point joins the first existing mode
/// within `merge_tol`, otherwise it founds a new mode at its own position.
pub fn merge_modes(positions: ArrayView2<'_, f64>, merge_tol: f64) -> ClusterResult {
    let tol2 = merge_tol * merge_tol;
    let mut modes: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(positions.nrows());
    for (i, p) in positions.outer_iter().enumerate() {
        let found = modes
            .iter()
            .position(|&m| squared_euclidean(p, positions.row(m)) <= tol2);
        match found {
            Some(label) => labels.push(label),
            None => {
                labels.push(modes.len());
                modes.push(i);
            }
        }
    }
    ClusterResult {
        modes: positions.select(Axis(0), &modes),
        labels,
        cluster_s2: Vec::new(),
    }
}

/// Population variance of member-to-mode distances for each cluster, using
/// the members' original coordinates. Clusters with fewer than two members,
/// or zero spread, get `floor` instead.
pub fn cluster_variances(
    members: ArrayView2<'_, f64>,
    result: &ClusterResult,
    floor: f64,
) -> Vec<f64> {
    let c = result.mode_count();
    let mut dists: Vec<Vec<f64>> = vec![Vec::new(); c];
    for (p, &label) in members.outer_iter().zip(&result.labels) {
        dists[label].push(euclidean(p, result.modes.row(label)));
    }
    dists
        .into_iter()
        .map(|d| {
            if d.len() < 2 {
                return floor;
            }
            let k = d.len() as f64;
            let mean = d.iter().sum::<f64>() / k;
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
            var.max(floor)
        })
        .collect()
}

/// Assigns each point to the mode minimising `dist^2 / s^2`.
pub fn classify_bad_points(points: ArrayView2<'_, f64>, result: &ClusterResult) -> Result<Vec<usize>> {
    if result.mode_count() == 0 {
        return Err(Error::InvalidParameter("no modes to classify against".into()));
    }
    if result.cluster_s2.len() != result.mode_count() {
        return Err(Error::LengthMismatch {
            left: result.cluster_s2.len(),
            right: result.mode_count(),
        });
    }
    Ok(points
        .outer_iter()
        .map(|f| {
            let mut best = (0, f64::INFINITY);
            for (j, m) in result.modes.outer_iter().enumerate() {
                let score = squared_euclidean(f, m) / result.cluster_s2[j];
                if score < best.1 {
                    best = (j, score);
                }
            }
            best.0
        })
        .collect())
}

/// End-to-end configuration of the clustering pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMeanShift {
    pub min_boundary: Boundary,
    pub max_boundary: Boundary,
    pub extension_factor: f64,
    pub kernel: KernelSpec,
    pub max_iter: usize,
    /// Absolute tolerances; `None` derives them from the median radius.
    pub conv_tol: Option<f64>,
    pub merge_tol: Option<f64>,
}

impl Default for AdaptiveMeanShift {
    fn default() -> Self {
        Self {
            min_boundary: Boundary::Count(crate::cardinality::DEFAULT_MIN_BOUNDARY),
            max_boundary: Boundary::Fraction(crate::cardinality::DEFAULT_MAX_FRACTION),
            extension_factor: crate::cardinality::DEFAULT_EXTENSION,
            kernel: KernelSpec::gaussian(),
            max_iter: DEFAULT_MAX_ITER,
            conv_tol: None,
            merge_tol: None,
        }
    }
}

/// Everything produced by [`AdaptiveMeanShift::fit`].
#[derive(Debug, Clone)]
pub struct Clustering {
    /// Mode index for every point of the dataset.
    pub labels: Vec<usize>,
    pub result: ClusterResult,
    pub estimates: Estimates,
    pub bp: BoundaryParams,
    pub iterations: usize,
    pub merge_tol: f64,
    pub conv_tol: f64,
    pub timings: StageTimings,
}

impl Clustering {
    pub fn mode_count(&self) -> usize {
        self.result.mode_count()
    }

    /// Labels with every bad point given its own singleton cluster instead
    /// of a classified label.
    pub fn labels_without_classification(&self) -> Vec<usize> {
        let mut labels = self.labels.clone();
        let mut next = self.mode_count();
        for &i in &self.estimates.bad {
            labels[i] = next;
            next += 1;
        }
        labels
    }
}

/// Wall time per pipeline stage, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub estimate: f64,
    pub mean_shift: f64,
    pub classify: f64,
}

fn median_f64(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl AdaptiveMeanShift {
    pub fn boundaries(&self, n: usize) -> Result<BoundaryParams> {
        BoundaryParams::new(self.min_boundary, self.max_boundary, self.extension_factor, n)
    }

    /// Cardinality estimation, mean shift, mode merging and classification
    /// of the bad points.
    pub fn fit(&self, ds: &Dataset) -> Result<Clustering> {
        let bp = self.boundaries(ds.n())?;
        let t0 = std::time::Instant::now();
        let estimates = estimate_all(ds, &bp)?;
        let t_est = t0.elapsed().as_secs_f64();
        self.fit_with_estimates(ds, estimates, bp, t_est)
    }

    /// [`fit`](Self::fit) from precomputed estimates.
    pub fn fit_with_estimates(
        &self,
        ds: &Dataset,
        estimates: Estimates,
        bp: BoundaryParams,
        estimate_secs: f64,
    ) -> Result<Clustering> {
        let mut omegas: Vec<f64> =
            estimates.good.iter().map(|&i| estimates.per_point[i].omega).collect();
        let med_omega = median_f64(&mut omegas);
        let merge_tol = self.merge_tol.unwrap_or(MERGE_TOL_FRACTION * med_omega);
        let mut conv_tol = self.conv_tol.unwrap_or(CONV_TOL_FRACTION * med_omega);
        if !(conv_tol > 0.0) {
            conv_tol = f64::MIN_POSITIVE;
        }

        let t1 = std::time::Instant::now();
        let ctx = ShiftContext::new(ds, &estimates, self.kernel, bp)?;
        let cfg = ShiftConfig { max_iter: self.max_iter, conv_tol, merge_tol };
        let outcome = run_mean_shift(&ctx, &cfg)?;
        let mut result = merge_modes(outcome.positions.view(), merge_tol);
        let t_shift = t1.elapsed().as_secs_f64();

        let t2 = std::time::Instant::now();
        result.cluster_s2 = cluster_variances(ctx.good_points.view(), &result, merge_tol * merge_tol);
        let bad_points = ds.points().select(Axis(0), &estimates.bad);
        let bad_labels = classify_bad_points(bad_points.view(), &result)?;
        let mut labels = vec![0; ds.n()];
        for (&i, &l) in estimates.good.iter().zip(&result.labels) {
            labels[i] = l;
        }
        for (&i, &l) in estimates.bad.iter().zip(&bad_labels) {
            labels[i] = l;
        }
        let t_classify = t2.elapsed().as_secs_f64();

        Ok(Clustering {
            labels,
            result,
            estimates,
            bp,
            iterations: outcome.iterations,
            merge_tol,
            conv_tol,
            timings: StageTimings { estimate: estimate_secs, mean_shift: t_shift, classify: t_classify },
        })
    }
}

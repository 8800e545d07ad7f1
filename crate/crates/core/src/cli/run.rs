use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::cardinality::estimate_all;
use crate::dataset::Dataset;
use crate::error::Error;
use crate::evalmetrics::rand_index;
use crate::meanshift::Clustering;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Load,
    Preprocess,
    Estimate,
    MeanShift,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Preprocess => "preprocess",
            Stage::Estimate => "estimate",
            Stage::MeanShift => "mean_shift",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for crate::error::Result<T> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub(crate) fn io_at<T>(r: std::io::Result<T>, path: &Path, stage: Stage) -> Result<T, StageError> {
    r.map_err(|source| StageError {
        stage,
        source: Error::Io { path: path.to_path_buf(), source },
    })
}

/// Wall time per stage, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: f64,
    pub preprocess: f64,
    pub estimate: f64,
    pub mean_shift: f64,
    pub classify: f64,
    pub total: f64,
}

/// Resolved parameters, echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEcho {
    pub input: String,
    pub preprocess: String,
    pub kernel: String,
    pub a: f64,
    pub min_boundary: usize,
    pub max_boundary: usize,
    pub extended_max: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub merge_tol: f64,
    pub conv_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub classes: Option<usize>,
    pub rand_index: Option<f64>,
    pub modes: usize,
    pub iterations: usize,
    pub good_points: usize,
    pub bad_points: usize,
    pub timings: Timings,
    pub params: ParamEcho,
}

/// Outcome of [`run`]: the clustering plus the report describing it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dataset: Dataset,
    pub clustering: Clustering,
    pub report: RunReport,
}

/// load -> preprocess -> estimate -> mean shift -> classify -> evaluate.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, StageError> {
    let start = Instant::now();
    let raw = cfg.load().at(Stage::Load)?;
    let t_load = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let ds = cfg.preprocess(&raw).at(Stage::Preprocess)?;
    let t_pre = t.elapsed().as_secs_f64();

    let algo = cfg.algorithm();
    let bp = algo.boundaries(ds.n()).at(Stage::Config)?;
    let t = Instant::now();
    let estimates = estimate_all(&ds, &bp).at(Stage::Estimate)?;
    let t_est = t.elapsed().as_secs_f64();

    let clustering = algo
        .fit_with_estimates(&ds, estimates, bp, t_est)
        .at(Stage::MeanShift)?;

    let ri = match ds.labels() {
        Some(truth) => Some(rand_index(truth, &clustering.labels).at(Stage::Evaluate)?),
        None => None,
    };
    let report = RunReport {
        dataset: cfg.display_name(&ds),
        n: ds.n(),
        d: ds.dim(),
        classes: ds.class_count(),
        rand_index: ri,
        modes: clustering.mode_count(),
        iterations: clustering.iterations,
        good_points: clustering.estimates.good.len(),
        bad_points: clustering.estimates.bad.len(),
        timings: Timings {
            load: t_load,
            preprocess: t_pre,
            estimate: clustering.timings.estimate,
            mean_shift: clustering.timings.mean_shift,
            classify: clustering.timings.classify,
            total: start.elapsed().as_secs_f64(),
        },
        params: ParamEcho {
            input: cfg.input.clone(),
            preprocess: cfg.preprocess.to_string(),
            kernel: cfg.kernel.to_string(),
            a: cfg.a,
            min_boundary: bp.min_boundary,
            max_boundary: bp.max_boundary,
            extended_max: bp.extended_max(),
            max_iter: cfg.max_iter,
            seed: cfg.seed,
            merge_tol: clustering.merge_tol,
            conv_tol: clustering.conv_tol,
        },
    };
    Ok(RunOutput { dataset: ds, clustering, report })
}

/// Writes `index,label,good` rows.
pub fn write_labels<W: Write>(clustering: &Clustering, writer: W) -> crate::error::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "label", "good"])?;
    for (i, label) in clustering.labels.iter().enumerate() {
        let good = clustering.estimates.per_point[i].good;
        w.write_record([i.to_string(), label.to_string(), u8::from(good).to_string()])?;
    }
    w.flush().map_err(|e| Error::Io { path: "<labels>".into(), source: e })?;
    Ok(())
}

/// Reads the label column back from a labels file.
pub fn read_labels(path: &Path) -> crate::error::Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut labels = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(1).unwrap_or_default();
        labels.push(cell.parse().map_err(|_| Error::Parse {
            row: row + 1,
            column: 1,
            value: cell.to_string(),
        })?);
    }
    Ok(labels)
}

/// Runs one configuration and writes `labels.csv` and `report.json` into
/// `out_dir`.
pub fn cmd_cluster(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, StageError> {
    let output = run(cfg)?;
    io_at(fs::create_dir_all(out_dir), out_dir, Stage::Write)?;
    let labels_path = out_dir.join("labels.csv");
    let file = io_at(fs::File::create(&labels_path), &labels_path, Stage::Write)?;
    write_labels(&output.clustering, file).at(Stage::Write)?;
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&output.report).expect("report serializes");
    io_at(fs::write(&report_path, json + "\n"), &report_path, Stage::Write)?;
    Ok(output.report)
}

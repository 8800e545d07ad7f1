use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::{io_at, AtStage, Stage, StageError};
use crate::cardinality::{estimate_cardinality, gamma_profile};
use crate::error::Error;
use crate::geometry::sorted_row;

/// Summary written next to a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub index: usize,
    pub n_hat: usize,
    pub n_hat_extended: usize,
    pub good: bool,
    pub omega: f64,
    pub h: f64,
    pub msd: f64,
    pub min_boundary: usize,
    pub max_boundary: usize,
    pub extended_max: usize,
}

/// Writes `trace_<index>.csv` with `k,distance,gamma` over the scanned
/// range (gamma blank where undefined) and `trace_<index>.json` with the
/// chosen estimate. Returns both paths.
pub fn cmd_trace(
    cfg: &RunConfig,
    index: usize,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf, TraceSummary), StageError> {
    let raw = cfg.load().at(Stage::Load)?;
    let ds = cfg.preprocess(&raw).at(Stage::Preprocess)?;
    if index >= ds.n() {
        return Err(StageError {
            stage: Stage::Config,
            source: Error::IndexOutOfRange { index, len: ds.n() },
        });
    }
    let bp = cfg.algorithm().boundaries(ds.n()).at(Stage::Config)?;
    let row = sorted_row(&ds, index).at(Stage::Estimate)?;
    let profile = gamma_profile(&row, &bp).at(Stage::Estimate)?;
    let est = estimate_cardinality(&row, &bp, ds.dim()).at(Stage::Estimate)?;

    io_at(fs::create_dir_all(out_dir), out_dir, Stage::Write)?;
    let csv_path = out_dir.join(format!("trace_{index}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(Error::from)
        .at(Stage::Write)?;
    w.write_record(["k", "distance", "gamma"]).map_err(Error::from).at(Stage::Write)?;
    for k in profile.k_range() {
        let gamma = profile.get(k).map(|g| g.to_string()).unwrap_or_default();
        w.write_record([k.to_string(), row.distances[k - 1].to_string(), gamma])
            .map_err(Error::from)
            .at(Stage::Write)?;
    }
    io_at(w.flush(), &csv_path, Stage::Write)?;

    let summary = TraceSummary {
        index,
        n_hat: est.n_hat,
        n_hat_extended: est.n_hat_extended,
        good: est.good,
        omega: est.omega,
        h: est.h,
        msd: est.msd,
        min_boundary: bp.min_boundary,
        max_boundary: bp.max_boundary,
        extended_max: bp.extended_max(),
    };
    let json_path = out_dir.join(format!("trace_{index}.json"));
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    io_at(fs::write(&json_path, json + "\n"), &json_path, Stage::Write)?;
    Ok((csv_path, json_path, summary))
}

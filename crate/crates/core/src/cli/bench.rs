use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Preprocess, RunConfig};
use super::run::{io_at, run, AtStage, Stage, StageError};
use crate::cardinality::Boundary;
use crate::error::{Error, Result};
use crate::meanshift::KernelKind;

const BASELINES: &str = include_str!("../../data/baselines.toml");

/// table -> dataset -> column -> published Rand Index.
pub type Baselines = BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>;

pub fn baselines() -> Baselines {
    toml::from_str(BASELINES).expect("bundled baselines parse")
}

/// One suite entry: a run configuration, optionally repeated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    #[serde(flatten)]
    pub config: RunConfig,
    /// Overrides `seed`; one row per value.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Key of the published values to show, e.g. `"iris"`.
    #[serde(default)]
    pub reference: Option<String>,
}

impl SuiteEntry {
    pub fn new(config: RunConfig) -> Self {
        Self { config, seeds: None, reference: None }
    }

    fn expand(&self) -> Vec<RunConfig> {
        match &self.seeds {
            Some(seeds) => seeds
                .iter()
                .map(|&seed| RunConfig { seed, ..self.config.clone() })
                .collect(),
            None => vec![self.config.clone()],
        }
    }
}

#[derive(Debug, Deserialize)]
struct SuiteFile {
    #[serde(default)]
    run: Vec<SuiteEntry>,
}

/// Parses a TOML suite. Relative inputs are resolved against the suite's
/// directory.
pub fn load_suite(path: &Path) -> Result<Vec<SuiteEntry>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut suite: SuiteFile =
        toml::from_str(&text).map_err(|e| Error::InvalidParameter(format!("suite: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for entry in &mut suite.run {
        let cfg = &mut entry.config;
        if !cfg.is_toy() && Path::new(&cfg.input).is_relative() {
            cfg.input = base.join(&cfg.input).to_string_lossy().into_owned();
        }
    }
    Ok(suite.run)
}

/// One line of the bench table. Reference columns are published values,
/// not recomputed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub seed: String,
    pub preprocess: String,
    pub kernel: String,
    pub max_boundary: String,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub classes: Option<usize>,
    pub rand_index: Option<f64>,
    pub modes: Option<f64>,
    pub iterations: Option<f64>,
    pub seconds: Option<f64>,
    pub status: String,
    pub ref_published: Option<f64>,
    pub ref_wams: Option<f64>,
    pub ref_kmeans: Option<f64>,
    pub ref_em: Option<f64>,
    pub ref_single_linkage: Option<f64>,
    pub ref_gic: Option<f64>,
    pub ref_spectral: Option<f64>,
    pub ref_birch: Option<f64>,
}

fn fill_reference(row: &mut BenchRow, cfg: &RunConfig, key: &str, table: &Baselines) {
    let (table_name, ours) = match cfg.preprocess {
        Preprocess::Gagolewski => (
            "total_variance",
            match cfg.max_boundary {
                Boundary::Fraction(f) if (f - 0.5).abs() < 1e-12 => Some("max_0_5n"),
                Boundary::Fraction(f) if (f - 0.7).abs() < 1e-12 => Some("max_0_7n"),
                _ => None,
            },
        ),
        _ => (
            "standardized",
            Some(match cfg.kernel {
                KernelKind::Gaussian => "gaussian",
                KernelKind::HighDim => "highdim",
            }),
        ),
    };
    let Some(values) = table.get(table_name).and_then(|t| t.get(key)) else {
        return;
    };
    let get = |k: &str| values.get(k).copied();
    row.ref_published = ours.and_then(get);
    row.ref_wams = get("wams");
    row.ref_kmeans = get("kmeans");
    row.ref_em = get("em");
    row.ref_single_linkage = get("single_linkage");
    row.ref_gic = get("gic");
    row.ref_spectral = get("spectral");
    row.ref_birch = get("birch");
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn median_row(rows: &[BenchRow]) -> BenchRow {
    let first = &rows[0];
    let col = |f: fn(&BenchRow) -> Option<f64>| median(rows.iter().filter_map(f).collect());
    BenchRow {
        name: first.name.clone(),
        seed: "median".into(),
        preprocess: first.preprocess.clone(),
        kernel: first.kernel.clone(),
        max_boundary: first.max_boundary.clone(),
        n: None,
        d: first.d,
        classes: None,
        rand_index: col(|r| r.rand_index),
        modes: col(|r| r.modes),
        iterations: col(|r| r.iterations),
        seconds: col(|r| r.seconds),
        status: format!("median of {}", rows.len()),
        ref_published: first.ref_published,
        ref_wams: first.ref_wams,
        ref_kmeans: first.ref_kmeans,
        ref_em: first.ref_em,
        ref_single_linkage: first.ref_single_linkage,
        ref_gic: first.ref_gic,
        ref_spectral: first.ref_spectral,
        ref_birch: first.ref_birch,
    }
}

/// Runs every configuration in order. A failing row is recorded with its
/// stage and the suite carries on. Entries that expand to several seeds
/// get a trailing median row.
pub fn run_suite(entries: &[SuiteEntry]) -> Result<Vec<BenchRow>, StageError> {
    if entries.is_empty() {
        return Err(StageError {
            stage: Stage::Config,
            source: Error::InvalidParameter("empty bench suite".into()),
        });
    }
    let table = baselines();
    let mut rows = Vec::new();
    for entry in entries {
        let mut group = Vec::new();
        for cfg in entry.expand() {
            let mut row = BenchRow {
                name: cfg.name.clone().unwrap_or_else(|| cfg.input.clone()),
                seed: cfg.seed.to_string(),
                preprocess: cfg.preprocess.to_string(),
                kernel: cfg.kernel.to_string(),
                max_boundary: cfg.max_boundary.to_string(),
                ..Default::default()
            };
            if let Some(key) = &entry.reference {
                fill_reference(&mut row, &cfg, key, &table);
            }
            match run(&cfg) {
                Ok(out) => {
                    let r = &out.report;
                    row.name = r.dataset.clone();
                    row.n = Some(r.n);
                    row.d = Some(r.d);
                    row.classes = r.classes;
                    row.rand_index = r.rand_index;
                    row.modes = Some(r.modes as f64);
                    row.iterations = Some(r.iterations as f64);
                    row.seconds = Some(r.timings.total);
                    row.status = "ok".into();
                    log::info!("{}: RI {:?}, {} modes", row.name, r.rand_index, r.modes);
                }
                Err(e) => {
                    log::warn!("{}: {e}", row.name);
                    row.status = format!("error ({}): {}", e.stage, e.source);
                }
            }
            group.push(row);
        }
        let ok: Vec<BenchRow> = group.iter().filter(|r| r.status == "ok").cloned().collect();
        rows.extend(group);
        if entry.seeds.as_ref().is_some_and(|s| s.len() > 1) && !ok.is_empty() {
            rows.push(median_row(&ok));
        }
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

/// Fixed-width text table of the rows.
pub fn summary_table(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>8} {:<12} {:<9} {:>6} {:>8} {:>6} {:>8} {:>10}  status",
        "dataset", "seed", "preprocess", "kernel", "maxB", "RI", "modes", "secs", "published"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:<12} {:<9} {:>6} {:>8} {:>6} {:>8} {:>10}  {}",
            r.name,
            r.seed,
            r.preprocess,
            r.kernel,
            r.max_boundary,
            fmt_opt(r.rand_index),
            r.modes.map_or_else(|| "-".into(), |m| format!("{m}")),
            r.seconds.map_or_else(|| "-".into(), |t| format!("{t:.2}")),
            fmt_opt(r.ref_published),
            r.status
        );
    }
    s
}

/// Runs the suite and writes `bench.csv` and `bench_summary.txt`.
pub fn cmd_bench(entries: &[SuiteEntry], out_dir: &Path) -> Result<Vec<BenchRow>, StageError> {
    let rows = run_suite(entries)?;
    io_at(fs::create_dir_all(out_dir), out_dir, Stage::Write)?;
    let csv_path = out_dir.join("bench.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(Error::from).at(Stage::Write)?;
    for r in &rows {
        w.serialize(r).map_err(Error::from).at(Stage::Write)?;
    }
    io_at(w.flush(), &csv_path, Stage::Write)?;
    let txt = out_dir.join("bench_summary.txt");
    io_at(fs::write(&txt, summary_table(&rows)), &txt, Stage::Write)?;
    Ok(rows)
}

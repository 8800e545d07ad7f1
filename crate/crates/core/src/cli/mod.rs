//! Command-line front end: `cluster`, `trace`, `bench` and `toygen`.

pub mod bench;
pub mod config;
pub mod run;
pub mod trace;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cardinality::Boundary;
use crate::dataset::{generate_toy, LabelColumn, ToySpec};
use crate::error::Error;
use crate::meanshift::KernelKind;
pub use config::{Preprocess, RunConfig, BUILTIN_TOY, TOY_PRESET_MAX_ITER};
pub use run::{Stage, StageError};
use run::{io_at, AtStage};

#[derive(Debug, Parser)]
#[command(name = "cardshift", version, about = "Adaptive mean shift with local cardinality estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one dataset; writes labels.csv and report.json.
    Cluster(RunArgs),
    /// Dump the gamma profile of one point.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Row index of the point.
        #[arg(long)]
        index: usize,
    },
    /// Run every entry of a TOML suite; writes bench.csv and a summary.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Write the four-cluster toy mixture as CSV.
    Toygen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Built-in toy data with a 200 iteration cap.
    #[value(name = "paper-toy")]
    Toy,
}

/// Options shared by `cluster` and `trace`. Flags override the `--config`
/// file, which overrides the preset.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file holding a run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// CSV path or `builtin:toy`.
    #[arg(long)]
    pub input: Option<String>,
    /// Label column: 0-based index or header name.
    #[arg(long = "labels-col")]
    pub labels_col: Option<LabelColumn>,
    /// Keep only these classes (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub keep_classes: Option<Vec<String>>,
    /// none, standardize or gagolewski.
    #[arg(long)]
    pub preprocess: Option<Preprocess>,
    /// gaussian or highdim.
    #[arg(long)]
    pub kernel: Option<KernelKind>,
    /// Count (`5`) or fraction of n (`0.1n`).
    #[arg(long)]
    pub min_boundary: Option<Boundary>,
    #[arg(long)]
    pub max_boundary: Option<Boundary>,
    #[arg(long)]
    pub extension: Option<f64>,
    /// Offset multiplier of the high-dimensional kernel.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, StageError> {
        let mut cfg = RunConfig::default();
        if let Some(Preset::Toy) = self.preset {
            cfg.input = BUILTIN_TOY.into();
            cfg.max_iter = TOY_PRESET_MAX_ITER;
        }
        if let Some(path) = &self.config {
            let text = io_at(fs::read_to_string(path), path, Stage::Config)?;
            let file: RunConfig = toml::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
                .at(Stage::Config)?;
            cfg = file;
        }
        if let Some(v) = &self.input {
            cfg.input = v.clone();
        }
        if let Some(v) = &self.labels_col {
            cfg.label_column = Some(v.clone());
        }
        if let Some(v) = &self.keep_classes {
            cfg.keep_classes = Some(v.clone());
        }
        macro_rules! take {
            ($($field:ident <- $arg:ident),*) => {$(
                if let Some(v) = self.$arg { cfg.$field = v; }
            )*};
        }
        take!(preprocess <- preprocess, kernel <- kernel, min_boundary <- min_boundary,
              max_boundary <- max_boundary, extension_factor <- extension, a <- a,
              max_iter <- max_iter, seed <- seed, noise_sigma <- noise_sigma);
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        Ok(cfg)
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn write_toy(seed: u64, out: Option<&Path>) -> Result<(), StageError> {
    let ds = generate_toy(&ToySpec::four_cluster(seed)).at(Stage::Load)?;
    match out {
        Some(path) => {
            let file = io_at(fs::File::create(path), path, Stage::Write)?;
            ds.write_csv(file).at(Stage::Write)
        }
        None => ds.write_csv(io::stdout().lock()).at(Stage::Write),
    }
}

/// Executes a parsed command line, printing a short summary to stdout.
pub fn execute(cli: Cli) -> Result<(), StageError> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Cluster(args) => {
            let cfg = args.resolve()?;
            let dir = out_dir(&cfg);
            let report = run::cmd_cluster(&cfg, &dir)?;
            let ri = report.rand_index.map_or_else(|| "n/a".into(), |r| format!("{r:.4}"));
            let _ = writeln!(
                stdout,
                "{}: n={} d={} modes={} iterations={} rand_index={} ({:.2}s) -> {}",
                report.dataset,
                report.n,
                report.d,
                report.modes,
                report.iterations,
                ri,
                report.timings.total,
                dir.display()
            );
        }
        Command::Trace { run: args, index } => {
            let cfg = args.resolve()?;
            let (csv, json, s) = trace::cmd_trace(&cfg, index, &out_dir(&cfg))?;
            let _ = writeln!(
                stdout,
                "point {}: n_hat={} extended={} good={} omega={:.6} -> {}, {}",
                s.index,
                s.n_hat,
                s.n_hat_extended,
                s.good,
                s.omega,
                csv.display(),
                json.display()
            );
        }
        Command::Bench { suite, out } => {
            let entries = bench::load_suite(&suite).at(Stage::Config)?;
            let rows = bench::cmd_bench(&entries, &out)?;
            let _ = write!(stdout, "{}", bench::summary_table(&rows));
        }
        Command::Toygen { seed, out } => write_toy(seed, out.as_deref())?,
    }
    Ok(())
}

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cardinality::{Boundary, DEFAULT_EXTENSION, DEFAULT_MAX_FRACTION, DEFAULT_MIN_BOUNDARY};
use crate::dataset::{self, Dataset, LabelColumn, ToySpec, DEFAULT_NOISE_SIGMA};
use crate::error::{Error, Result};
use crate::meanshift::{
    AdaptiveMeanShift, KernelKind, KernelSpec, DEFAULT_MAX_ITER, DEFAULT_OFFSET_MULTIPLIER,
};

/// Input name that selects the built-in four-cluster toy mixture.
pub const BUILTIN_TOY: &str = "builtin:toy";

/// Max iterations used by the toy preset.
pub const TOY_PRESET_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocess {
    #[default]
    None,
    Standardize,
    Gagolewski,
}

impl FromStr for Preprocess {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "standardize" | "zscore" => Ok(Self::Standardize),
            "gagolewski" | "total-variance" => Ok(Self::Gagolewski),
            other => Err(Error::InvalidParameter(format!("unknown preprocessing {other:?}"))),
        }
    }
}

impl fmt::Display for Preprocess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Standardize => "standardize",
            Self::Gagolewski => "gagolewski",
        })
    }
}

/// Everything needed to cluster one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Display name; defaults to the dataset name.
    pub name: Option<String>,
    /// CSV path, or `builtin:toy`.
    pub input: String,
    pub label_column: Option<LabelColumn>,
    /// Keep only rows with these labels.
    pub keep_classes: Option<Vec<String>>,
    pub preprocess: Preprocess,
    pub kernel: KernelKind,
    pub min_boundary: Boundary,
    pub max_boundary: Boundary,
    pub extension_factor: f64,
    pub a: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: None,
            input: BUILTIN_TOY.into(),
            label_column: None,
            keep_classes: None,
            preprocess: Preprocess::None,
            kernel: KernelKind::Gaussian,
            min_boundary: Boundary::Count(DEFAULT_MIN_BOUNDARY),
            max_boundary: Boundary::Fraction(DEFAULT_MAX_FRACTION),
            extension_factor: DEFAULT_EXTENSION,
            a: DEFAULT_OFFSET_MULTIPLIER,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn is_toy(&self) -> bool {
        self.input == BUILTIN_TOY
    }

    /// Loads (or generates) the dataset, applying the class filter.
    pub fn load(&self) -> Result<Dataset> {
        let ds = if self.is_toy() {
            dataset::generate_toy(&ToySpec::four_cluster(self.seed))?
        } else {
            dataset::load_csv(&self.input, self.label_column.as_ref())?
        };
        match &self.keep_classes {
            Some(classes) => ds.select_classes(classes),
            None => Ok(ds),
        }
    }

    pub fn preprocess(&self, ds: &Dataset) -> Result<Dataset> {
        match self.preprocess {
            Preprocess::None => Ok(ds.clone()),
            Preprocess::Standardize => dataset::standardize(ds),
            Preprocess::Gagolewski => dataset::gagolewski_preprocess(ds, self.noise_sigma, self.seed),
        }
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec { kind: self.kernel, a: self.a }
    }

    pub fn algorithm(&self) -> AdaptiveMeanShift {
        AdaptiveMeanShift {
            min_boundary: self.min_boundary,
            max_boundary: self.max_boundary,
            extension_factor: self.extension_factor,
            kernel: self.kernel_spec(),
            max_iter: self.max_iter,
            conv_tol: None,
            merge_tol: None,
        }
    }

    pub fn display_name(&self, ds: &Dataset) -> String {
        self.name.clone().unwrap_or_else(|| ds.name.clone())
    }
}

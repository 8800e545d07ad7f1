//! Dataset loading, preprocessing and synthetic generation.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default noise scale for [`gagolewski_preprocess`].
pub const DEFAULT_NOISE_SIGMA: f64 = 1e-9;

/// An `n x d` matrix of observations with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    points: Array2<f64>,
    labels: Option<Vec<String>>,
    feature_names: Vec<String>,
    label_name: Option<String>,
}

impl Dataset {
    /// Builds a dataset, checking `n >= 2`, `d >= 1`, finite coordinates and
    /// label length.
    pub fn new(
        name: impl Into<String>,
        points: Array2<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, d) = points.dim();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 points, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidDataset("need at least 1 column".into()));
        }
        if let Some(((row, column), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                row,
                column,
                value: points[(row, column)].to_string(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LengthMismatch { left: l.len(), right: n });
            }
        }
        let feature_names = (0..d).map(|j| format!("x{j}")).collect();
        Ok(Self {
            name: name.into(),
            points,
            labels,
            feature_names,
            label_name: None,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Arity { row: i, found: r.len(), expected: d });
            }
            flat.extend_from_slice(r);
        }
        let points = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Self::new(name, points, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::LengthMismatch { left: names.len(), right: self.dim() });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of distinct ground-truth classes, if labels are present.
    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().collect::<BTreeSet<_>>().len())
    }

    /// Same metadata, new coordinates (column count may change).
    fn replace_points(&self, points: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        let mut out = Self::new(self.name.clone(), points, self.labels.clone())?;
        out.feature_names = feature_names;
        out.label_name = self.label_name.clone();
        Ok(out)
    }

    /// Returns a copy with every coordinate mapped through `f`.
    pub fn map_points(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.replace_points(self.points.mapv(f), self.feature_names.clone())
    }

    /// Keeps only the rows whose label is in `classes`, preserving order.
    pub fn select_classes(&self, classes: &[String]) -> Result<Self> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidDataset("class selection needs labels".into()))?;
        let keep: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| classes.contains(l))
            .map(|(i, _)| i)
            .collect();
        let points = self.points.select(Axis(0), &keep);
        let kept_labels = keep.iter().map(|&i| labels[i].clone()).collect();
        let mut out = Self::new(self.name.clone(), points, Some(kept_labels))?;
        out.feature_names = self.feature_names.clone();
        out.label_name = self.label_name.clone();
        Ok(out)
    }

    /// Writes the dataset as CSV: feature columns in their original order,
    /// then the label column if present.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.feature_names.clone();
        if self.labels.is_some() {
            header.push(self.label_name.clone().unwrap_or_else(|| "label".into()));
        }
        w.write_record(&header)?;
        for (i, row) in self.points.outer_iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].clone());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv writer>".into(), source: e })?;
        Ok(())
    }
}

/// Identifies the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.trim().to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(s) => f.write_str(s),
        }
    }
}

/// Loads a CSV file. The header row is detected automatically: the first row
/// is a header when any of its feature cells fails to parse as a number.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, &name, label_column)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(
    reader: R,
    name: &str,
    label_column: Option<&LabelColumn>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    let Some(first) = records.first() else {
        return Err(Error::InvalidDataset("empty csv".into()));
    };
    let width = first.len();

    let mut label_idx = match label_column {
        Some(LabelColumn::Index(i)) => {
            if *i >= width {
                return Err(Error::MissingLabelColumn(i.to_string()));
            }
            Some(*i)
        }
        _ => None,
    };
    let has_header = match label_column {
        Some(LabelColumn::Name(_)) => true,
        _ => first
            .iter()
            .enumerate()
            .any(|(j, cell)| Some(j) != label_idx && cell.parse::<f64>().is_err()),
    };
    if let Some(LabelColumn::Name(wanted)) = label_column {
        label_idx = Some(
            first
                .iter()
                .position(|c| c == wanted)
                .ok_or_else(|| Error::MissingLabelColumn(wanted.clone()))?,
        );
    }

    let header: Vec<String> = if has_header {
        first.iter().map(str::to_string).collect()
    } else {
        (0..width).map(|j| format!("x{j}")).collect()
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let d = feature_names.len();

    let body = if has_header { &records[1..] } else { &records[..] };
    let mut flat = Vec::with_capacity(body.len() * d);
    let mut labels = label_idx.map(|_| Vec::with_capacity(body.len()));
    let row_offset = usize::from(has_header);
    for (r, rec) in body.iter().enumerate() {
        let row = r + row_offset;
        if rec.len() != width {
            return Err(Error::Arity { row, found: rec.len(), expected: width });
        }
        for (column, cell) in rec.iter().enumerate() {
            if Some(column) == label_idx {
                if let Some(l) = labels.as_mut() {
                    l.push(cell.to_string());
                }
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, column, value: cell.to_string() });
            }
            flat.push(v);
        }
    }
    let points = Array2::from_shape_vec((body.len(), d), flat)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let mut ds = Dataset::new(name, points, labels)?;
    ds.feature_names = feature_names;
    ds.label_name = label_idx.map(|i| header[i].clone());
    Ok(ds)
}

fn is_constant(col: ArrayView1<'_, f64>) -> bool {
    let first = col[0];
    col.iter().all(|&v| v == first)
}

/// Population mean and variance of a column.
fn mean_var(col: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Scales every column to zero mean and unit (population) variance.
pub fn standardize(ds: &Dataset) -> Result<Dataset> {
    let mut points = ds.points.clone();
    for (j, mut col) in points.axis_iter_mut(Axis(1)).enumerate() {
        if is_constant(col.view()) {
            return Err(Error::ZeroVariance { index: j, name: ds.feature_names[j].clone() });
        }
        let (mean, var) = mean_var(col.view());
        let sd = var.sqrt();
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    ds.replace_points(points, ds.feature_names.clone())
}

/// Drops constant columns, centres on the centroid, rescales all columns by
/// one common factor so the summed column variance is 1, then adds seeded
/// Gaussian noise of scale `noise_sigma` (skipped when it is 0).
pub fn gagolewski_preprocess(ds: &Dataset, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma {noise_sigma}")));
    }
    let keep: Vec<usize> = (0..ds.dim())
        .filter(|&j| !is_constant(ds.points.column(j)))
        .collect();
    if keep.is_empty() {
        return Err(Error::AllConstant);
    }
    let mut points = ds.points.select(Axis(1), &keep);
    let mut total_var = 0.0;
    for mut col in points.axis_iter_mut(Axis(1)) {
        let (mean, var) = mean_var(col.view());
        col.mapv_inplace(|v| v - mean);
        total_var += var;
    }
    let scale = total_var.sqrt();
    points.mapv_inplace(|v| v / scale);

    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        points.mapv_inplace(|v| v + noise.sample(&mut rng));
    }
    let names = keep.iter().map(|&j| ds.feature_names[j].clone()).collect();
    ds.replace_points(points, names)
}

/// One isotropic Gaussian component of a synthetic mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyCluster {
    pub cardinality: usize,
    pub sigma: f64,
    pub center: Vec<f64>,
}

/// Isotropic Gaussian mixture specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub clusters: Vec<ToyCluster>,
    pub seed: u64,
}

impl ToySpec {
    /// The four-cluster mixture with cardinalities 25/100/75/200 and sigmas
    /// 0.7/1/1.5/2. The 25-point cluster sits next to the 100-point one,
    /// about 4 * (0.7 + 1) apart; the other two are further out.
    pub fn four_cluster(seed: u64) -> Self {
        let c = |cardinality, sigma, x: f64, y: f64| ToyCluster {
            cardinality,
            sigma,
            center: vec![x, y],
        };
        Self {
            clusters: vec![
                c(25, 0.7, 0.0, 0.0),
                c(100, 1.0, 6.8, 0.0),
                c(75, 1.5, -2.0, 14.0),
                c(200, 2.0, 13.0, 14.0),
            ],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .clusters
            .first()
            .ok_or_else(|| Error::InvalidParameter("toy spec has no clusters".into()))?;
        let d = first.center.len();
        if d == 0 {
            return Err(Error::InvalidParameter("toy cluster center is empty".into()));
        }
        for (k, c) in self.clusters.iter().enumerate() {
            if c.cardinality == 0 {
                return Err(Error::InvalidParameter(format!("cluster {k} has cardinality 0")));
            }
            if !(c.sigma > 0.0 && c.sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!("cluster {k} sigma {}", c.sigma)));
            }
            if c.center.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: c.center.len() });
            }
            if c.center.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("cluster {k} center not finite")));
            }
        }
        if self.total() < 2 {
            return Err(Error::InvalidParameter("toy spec yields fewer than 2 points".into()));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.cardinality).sum()
    }
}

/// Samples the mixture cluster by cluster; labels are cluster indices.
pub fn generate_toy(spec: &ToySpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.clusters[0].center.len();
    let n = spec.total();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut flat = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (k, c) in spec.clusters.iter().enumerate() {
        for _ in 0..c.cardinality {
            for &mu in &c.center {
                let z: f64 = StandardNormal.sample(&mut rng);
                flat.push(mu + c.sigma * z);
            }
            labels.push(k.to_string());
        }
    }
    let points = Array2::from_shape_vec((n, d), flat)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let mut ds = Dataset::new(format!("toy-{}", spec.seed), points, Some(labels))?;
    ds.label_name = Some("cluster".into());
    Ok(ds)
}

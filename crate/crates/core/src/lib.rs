//! Adaptive mean shift clustering driven by local cluster cardinality
//! estimates.
//!
//! Each point's sorted distance row is scanned for the density gap between
//! its own cluster and the rest ([`cardinality`]). The resulting cardinality
//! sets the bandwidth and cut-off radius of an adaptive mean shift
//! ([`meanshift`]). [`evalmetrics`] scores partitions and [`disttheory`]
//! holds the distance-distribution laws used to validate the geometry.

pub mod cardinality;
pub mod cli;
pub mod dataset;
pub mod disttheory;
pub mod error;
pub mod evalmetrics;
pub mod geometry;
pub mod meanshift;
pub mod special;

pub use cardinality::{Boundary, BoundaryParams, CardinalityEstimate, Estimates};
pub use dataset::{Dataset, LabelColumn, ToySpec};
pub use error::{Error, Result};
pub use meanshift::{AdaptiveMeanShift, Clustering, KernelKind, KernelSpec};

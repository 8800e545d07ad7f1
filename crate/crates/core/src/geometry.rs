//! Euclidean distances, sorted distance rows and nearest-neighbour queries.
//!
//! Everything is dense O(n^2); datasets here are at most a few thousand
//! points. Ties in distance are broken by ascending point index.

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Distances from one point to the others, in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedDistanceRow {
    /// Point the distances are measured from. `None` for an external query.
    pub source_index: Option<usize>,
    pub distances: Vec<f64>,
    /// `order[r]` is the dataset index of the point at rank `r`.
    pub order: Vec<usize>,
}

impl SortedDistanceRow {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Copy with every distance multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            source_index: self.source_index,
            distances: self.distances.iter().map(|v| v * c).collect(),
            order: self.order.clone(),
        }
    }
}

#[inline]
pub fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    squared_euclidean(a, b).sqrt()
}

#[inline]
pub fn squared_euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sort_pairs(mut pairs: Vec<(f64, usize)>) -> (Vec<f64>, Vec<usize>) {
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs.into_iter().unzip()
}

/// Distances from point `i` to every other point, ascending.
pub fn sorted_row(ds: &Dataset, i: usize) -> Result<SortedDistanceRow> {
    let n = ds.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let x = ds.point(i);
    let pairs = (0..n)
        .filter(|&j| j != i)
        .map(|j| (euclidean(x, ds.point(j)), j))
        .collect();
    let (distances, order) = sort_pairs(pairs);
    Ok(SortedDistanceRow { source_index: Some(i), distances, order })
}

/// Sorted rows for every point, computed in parallel.
pub fn all_sorted_rows(ds: &Dataset) -> Vec<SortedDistanceRow> {
    (0..ds.n())
        .into_par_iter()
        .map(|i| sorted_row(ds, i).expect("index in range"))
        .collect()
}

/// Distances from an arbitrary query to all `n` points (no self-exclusion).
pub fn sorted_row_from(query: ArrayView1<'_, f64>, ds: &Dataset) -> Result<SortedDistanceRow> {
    sorted_row_in(query, ds.points().view())
}

/// [`sorted_row_from`] against a bare point matrix.
pub fn sorted_row_in(
    query: ArrayView1<'_, f64>,
    points: ArrayView2<'_, f64>,
) -> Result<SortedDistanceRow> {
    check_dim(query, points)?;
    let pairs = points
        .outer_iter()
        .enumerate()
        .map(|(j, p)| (euclidean(query, p), j))
        .collect();
    let (distances, order) = sort_pairs(pairs);
    Ok(SortedDistanceRow { source_index: None, distances, order })
}

fn check_dim(query: ArrayView1<'_, f64>, points: ArrayView2<'_, f64>) -> Result<()> {
    if query.len() != points.ncols() {
        return Err(Error::DimensionMismatch { expected: points.ncols(), found: query.len() });
    }
    Ok(())
}

/// Indices of the `k` points nearest to `query`, nearest first.
pub fn knn_indices(ds: &Dataset, query: ArrayView1<'_, f64>, k: usize) -> Result<Vec<usize>> {
    knn_in(ds.points().view(), query, k)
}

/// [`knn_indices`] against a bare point matrix.
pub fn knn_in(
    points: ArrayView2<'_, f64>,
    query: ArrayView1<'_, f64>,
    k: usize,
) -> Result<Vec<usize>> {
    check_dim(query, points)?;
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut pairs: Vec<(f64, usize)> = points
        .outer_iter()
        .enumerate()
        .map(|(j, p)| (squared_euclidean(query, p), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < n {
        pairs.select_nth_unstable_by(k - 1, cmp);
        pairs.truncate(k);
    }
    pairs.sort_unstable_by(cmp);
    Ok(pairs.into_iter().map(|(_, j)| j).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ds(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        Dataset::from_rows("r", &rows, None).unwrap()
    }

    /// Full pairwise matrix, written out longhand.
    fn brute_matrix(ds: &Dataset) -> Vec<Vec<f64>> {
        let n = ds.n();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..ds.dim() {
                    let diff = ds.point(i)[k] - ds.point(j)[k];
                    s += diff * diff;
                }
                m[i][j] = s.sqrt();
            }
        }
        m
    }

    #[test]
    fn three_four_five() {
        let ds = Dataset::from_rows("t", &[vec![0.0, 0.0], vec![3.0, 4.0], vec![6.0, 8.0]], None)
            .unwrap();
        let row = sorted_row(&ds, 0).unwrap();
        assert_eq!(row.distances, vec![5.0, 10.0]);
        assert_eq!(row.order, vec![1, 2]);
        assert!(matches!(sorted_row(&ds, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn duplicates_sort_first_with_zero_distance() {
        let ds = Dataset::from_rows(
            "t",
            &[vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0]],
            None,
        )
        .unwrap();
        let row = sorted_row(&ds, 0).unwrap();
        assert_eq!(&row.distances[..2], &[0.0, 0.0]);
        assert_eq!(&row.order[..2], &[2, 3]);
    }

    #[test]
    fn rows_match_brute_force() {
        let ds = random_ds(50, 3, 1);
        let m = brute_matrix(&ds);
        let rows = all_sorted_rows(&ds);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), 49);
            let mut expected: Vec<(f64, usize)> =
                (0..50).filter(|&j| j != i).map(|j| (m[i][j], j)).collect();
            expected.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            assert_eq!(row.distances, expected.iter().map(|p| p.0).collect::<Vec<_>>());
            assert_eq!(row.order, expected.iter().map(|p| p.1).collect::<Vec<_>>());
            for (r, &j) in row.order.iter().enumerate() {
                assert_eq!(row.distances[r], euclidean(ds.point(i), ds.point(j)));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            for (r, &j) in row.order.iter().enumerate() {
                let back = rows[j].order.iter().position(|&x| x == i).unwrap();
                assert_eq!(row.distances[r], rows[j].distances[back]);
            }
        }
        let serial: Vec<_> = (0..50).map(|i| sorted_row(&ds, i).unwrap()).collect();
        assert_eq!(rows, serial);
    }

    #[test]
    fn query_rows() {
        let ds = Dataset::from_rows("t", &[vec![0.0, 0.0], vec![2.0, 0.0]], None).unwrap();
        let mid = ndarray::arr1(&[1.0, 0.0]);
        assert_eq!(sorted_row_from(mid.view(), &ds).unwrap().distances, vec![1.0, 1.0]);
        let on = sorted_row_from(ds.point(1), &ds).unwrap();
        assert_eq!(on.distances[0], 0.0);
        assert_eq!(on.order[0], 1);
        let bad = ndarray::arr1(&[1.0]);
        assert!(matches!(
            sorted_row_from(bad.view(), &ds),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));

        let ds = random_ds(40, 4, 2);
        let q = ndarray::arr1(&[0.3, -1.0, 2.0, 0.5]);
        let row = sorted_row_from(q.view(), &ds).unwrap();
        let mut expected: Vec<f64> = (0..40)
            .map(|j| {
                (0..4).map(|k| (q[k] - ds.point(j)[k]).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(row.distances, expected);
    }

    #[test]
    fn knn_agrees_with_sorting() {
        let ds = random_ds(60, 2, 3);
        let q = ndarray::arr1(&[0.1, 0.2]);
        let full = sorted_row_from(q.view(), &ds).unwrap();
        assert_eq!(knn_indices(&ds, q.view(), 5).unwrap(), full.order[..5].to_vec());
        assert_eq!(knn_indices(&ds, q.view(), 60).unwrap(), full.order);
        assert_eq!(knn_indices(&ds, ds.point(17), 1).unwrap(), vec![17]);
        assert!(matches!(knn_indices(&ds, q.view(), 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(knn_indices(&ds, q.view(), 61), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn knn_ties_go_to_lower_index() {
        let ds = Dataset::from_rows(
            "t",
            &[vec![1.0], vec![-1.0], vec![1.0], vec![5.0]],
            None,
        )
        .unwrap();
        let q = ndarray::arr1(&[0.0]);
        assert_eq!(knn_indices(&ds, q.view(), 2).unwrap(), vec![0, 1]);
    }
}

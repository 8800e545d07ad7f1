#![allow(dead_code)]

use std::collections::HashMap;
use std::hash::Hash;

use cardshift::dataset::{generate_toy, ToyCluster, ToySpec};
use cardshift::Dataset;

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// True when the two labelings induce the same partition.
pub fn same_partition<A: Hash + Eq, B: Hash + Eq>(a: &[A], b: &[B]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: HashMap<&A, &B> = HashMap::new();
    let mut back: HashMap<&B, &A> = HashMap::new();
    a.iter().zip(b).all(|(x, y)| {
        *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
    })
}

/// O(n²) pair enumeration.
pub fn rand_index_pairs<A: Eq, B: Eq>(a: &[A], b: &[B]) -> f64 {
    let n = a.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
            total += 1;
        }
    }
    agree as f64 / total as f64
}

pub fn two_cluster_spec(seed: u64, n1: usize, n2: usize, sigma: f64, sep: f64) -> ToySpec {
    ToySpec {
        clusters: vec![
            ToyCluster { cardinality: n1, sigma, center: vec![0.0, 0.0] },
            ToyCluster { cardinality: n2, sigma, center: vec![sep, 0.0] },
        ],
        seed,
    }
}

/// Three separated 2-d blobs, 30 points each.
pub fn blobs(seed: u64) -> Dataset {
    let spec = ToySpec {
        clusters: vec![
            ToyCluster { cardinality: 30, sigma: 1.0, center: vec![0.0, 0.0] },
            ToyCluster { cardinality: 30, sigma: 1.0, center: vec![15.0, 0.0] },
            ToyCluster { cardinality: 30, sigma: 1.0, center: vec![0.0, 15.0] },
        ],
        seed,
    };
    generate_toy(&spec).expect("valid spec")
}

pub fn median_usize(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

pub fn median_f64(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

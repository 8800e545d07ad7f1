//! Partition comparison.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

fn pairs(c: u64) -> u64 {
    c * c.saturating_sub(1) / 2
}

/// Fraction of point pairs on which two partitions agree (together in both
/// or apart in both), computed from the contingency table.
pub fn rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Hash + Eq,
    B: Hash + Eq,
{
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len() as u64;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("rand index needs n >= 2, got {n}")));
    }
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    let mut cells: HashMap<(&A, &B), u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
        *cells.entry((x, y)).or_default() += 1;
    }
    let together_both: u64 = cells.values().map(|&c| pairs(c)).sum();
    let together_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let together_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    // apart in both = total - together_a - together_b + together_both
    let agree = total + 2 * together_both - together_a - together_b;
    Ok(agree as f64 / total as f64)
}

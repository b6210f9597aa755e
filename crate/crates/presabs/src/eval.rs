//! Scoring partitions against ground truth with the Adjusted Rand Index.

use crate::error::{Error, Result};

/// Cross-tabulation of two label vectors over the same observations.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// counts[r][c] = number of observations with label `r` in the first
    /// partition and label `c` in the second (after compacting labels).
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn from_labels(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "label vectors have different lengths ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if a.len() < 2 {
            return Err(Error::InvalidInput("need at least two observations".into()));
        }
        let ra = compact(a);
        let rb = compact(b);
        let (ka, kb) = (ra.iter().max().unwrap() + 1, rb.iter().max().unwrap() + 1);
        let mut counts = vec![vec![0u64; kb]; ka];
        for (&i, &j) in ra.iter().zip(&rb) {
            counts[i][j] += 1;
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..kb).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { counts, row_sums, col_sums, n: a.len() as u64 })
    }

    /// True when the two partitions are identical up to relabeling, i.e. the
    /// table has exactly one non-zero entry in every row and every column.
    fn is_relabeling(&self) -> bool {
        let rows_ok = self.counts.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
        let cols_ok = (0..self.col_sums.len())
            .all(|j| self.counts.iter().filter(|r| r[j] > 0).count() == 1);
        rows_ok && cols_ok
    }
}

/// Maps arbitrary labels to 0-based dense indices in order of first appearance.
fn compact(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|&&(orig, _)| orig == l) {
            Some(&(_, idx)) => idx,
            None => {
                let idx = map.len();
                map.push((l, idx));
                idx
            }
        })
        .collect()
}

fn choose2(k: u64) -> u128 {
    let k = k as u128;
    k * k.saturating_sub(1) / 2
}

/// Hubert-Arabie Adjusted Rand Index between two partitions.
///
/// Computed from the contingency table as (Index - Expected) / (Max -
/// Expected) using exact integer arithmetic for all pair-counting sums, so
/// there is no cancellation before the final division. Conventions: 1.0 when
/// the partitions are identical up to relabeling, and 0.0 when Max equals
/// Expected (degenerate denominator).
///
/// # Errors
///
/// Length mismatch or fewer than two observations.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = ContingencyTable::from_labels(a, b)?;
    if t.is_relabeling() {
        return Ok(1.0);
    }
    let sum_cells: u128 = t.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: u128 = t.row_sums.iter().map(|&c| choose2(c)).sum();
    let sum_b: u128 = t.col_sums.iter().map(|&c| choose2(c)).sum();
    let total = choose2(t.n);

    // ARI = (total*sum_cells - sum_a*sum_b) / (total*(sum_a+sum_b)/2 - sum_a*sum_b),
    // scaled by 2 to stay integral.
    let num = 2 * (total * sum_cells) as i128 - 2 * (sum_a * sum_b) as i128;
    let den = (total * (sum_a + sum_b)) as i128 - 2 * (sum_a * sum_b) as i128;
    if den == 0 {
        return Ok(0.0);
    }
    Ok(num as f64 / den as f64)
}

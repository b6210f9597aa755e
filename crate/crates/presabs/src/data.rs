//! Shared data containers.

use crate::error::{Error, Result};

/// Cluster assignment vector. Entry `i` is the 1-based cluster label of
/// observation `i`; a partition into `K` clusters uses exactly the labels
/// `1..=K`.
pub type ClusterLabels = Vec<usize>;

/// Number of clusters in a 1-based label vector (its maximum label).
pub fn label_count(labels: &[usize]) -> usize {
    labels.iter().copied().max().unwrap_or(0)
}

/// Checks that `labels` is a proper partition into `1..=K` with every cluster
/// non-empty.
pub fn validate_labels(labels: &[usize]) -> Result<()> {
    let k = label_count(labels);
    if k == 0 {
        return Err(Error::InvalidInput("empty label vector".into()));
    }
    let mut seen = vec![false; k + 1];
    for &l in labels {
        if l == 0 || l > k {
            return Err(Error::InvalidInput(format!("label {l} out of range 1..={k}")));
        }
        seen[l] = true;
    }
    if let Some(missing) = (1..=k).find(|&l| !seen[l]) {
        return Err(Error::InvalidInput(format!("cluster {missing} is empty")));
    }
    Ok(())
}

/// Row-major n x m presence-absence matrix. Rows are species, columns are
/// cells; entries are 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<u8>,
}

impl BinaryMatrix {
    /// Builds a matrix from equal-length binary rows.
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::InvalidInput("matrix needs at least one column".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {} but expected {n_cols}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidInput(format!("row {i} has non-binary entry {bad}")));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { n_rows: rows.len(), n_cols, values })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Row sum, i.e. the range of species `i`.
    pub fn row_sum(&self, i: usize) -> usize {
        self.row(i).iter().map(|&v| v as usize).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.values.chunks_exact(self.n_cols)
    }
}

//! Pairwise dissimilarities on binary data.
//!
//! Two measures are supported. The Jaccard distance ignores joint absences:
//! `1 - |x AND y| / |x OR y|`. The simple matching distance is the fraction
//! of coordinates where the vectors disagree. Both are bounded in [0, 1] and
//! invariant under column permutations applied to all rows.

use serde::{Deserialize, Serialize};

use crate::data::BinaryMatrix;
use crate::error::{Error, Result};

/// Symmetric non-negative dissimilarity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// All-zero n x n matrix.
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    /// Fills a symmetric matrix by evaluating `f(i, j)` for every pair i < j.
    pub fn try_from_fn<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j)?;
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Dissimilarity measure selector for [`distance_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Jaccard,
    SimpleMatching,
}

fn check_lengths(x: &[u8], y: &[u8]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "vectors have different lengths ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("vectors must be non-empty".into()));
    }
    Ok(())
}

/// Jaccard distance between two binary vectors.
///
/// # Errors
///
/// Length mismatch, or both vectors all-zero (the union is empty and the
/// distance is undefined; generated species always have at least one
/// presence, so this cannot occur on simulated data).
pub fn jaccard_distance(x: &[u8], y: &[u8]) -> Result<f64> {
    check_lengths(x, y)?;
    let mut intersection = 0u32;
    let mut union = 0u32;
    for (&a, &b) in x.iter().zip(y) {
        intersection += (a & b) as u32;
        union += (a | b) as u32;
    }
    if union == 0 {
        return Err(Error::EmptyUnion);
    }
    Ok(1.0 - intersection as f64 / union as f64)
}

/// Simple matching distance: mismatching coordinates divided by length.
pub fn simple_matching_distance(x: &[u8], y: &[u8]) -> Result<f64> {
    check_lengths(x, y)?;
    Ok(hamming(x, y) as f64 / x.len() as f64)
}

/// Hamming distance (mismatch count) between two binary vectors of equal
/// length. Callers guarantee the length check.
pub(crate) fn hamming(x: &[u8], y: &[u8]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

/// Packs one binary row into u64 words for popcount-based pair counting.
fn pack_row(row: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; row.len().div_ceil(64)];
    for (j, &v) in row.iter().enumerate() {
        if v != 0 {
            words[j / 64] |= 1 << (j % 64);
        }
    }
    words
}

/// Full pairwise dissimilarity matrix of the rows of `data`.
pub fn distance_matrix(data: &BinaryMatrix, measure: Measure) -> Result<DistanceMatrix> {
    let n = data.n_rows();
    let m = data.n_cols() as f64;
    let packed: Vec<Vec<u64>> = data.rows().map(pack_row).collect();
    let mut out = DistanceMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (pi, pj) = (&packed[i], &packed[j]);
            let v = match measure {
                Measure::Jaccard => {
                    let mut inter = 0u32;
                    let mut union = 0u32;
                    for (a, b) in pi.iter().zip(pj) {
                        inter += (a & b).count_ones();
                        union += (a | b).count_ones();
                    }
                    if union == 0 {
                        return Err(Error::EmptyUnion);
                    }
                    1.0 - inter as f64 / union as f64
                }
                Measure::SimpleMatching => {
                    let mism: u32 = pi.iter().zip(pj).map(|(a, b)| (a ^ b).count_ones()).sum();
                    mism as f64 / m
                }
            };
            out.set(i, j, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_distance(&[1, 0, 1], &[1, 0, 1]).unwrap(), 0.0);
        assert_eq!(jaccard_distance(&[1, 0, 0], &[0, 1, 1]).unwrap(), 1.0);
        let d = jaccard_distance(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15, "one joint presence over union 3, got {d}");
        assert!(matches!(jaccard_distance(&[0, 0], &[0, 0]), Err(Error::EmptyUnion)));
        assert!(jaccard_distance(&[1, 0], &[1]).is_err());
    }

    #[test]
    fn simple_matching_examples() {
        assert_eq!(simple_matching_distance(&[1, 0, 1], &[1, 0, 1]).unwrap(), 0.0);
        assert_eq!(simple_matching_distance(&[1, 0], &[0, 1]).unwrap(), 1.0);
        assert_eq!(simple_matching_distance(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn matrix_matches_pairwise_calls_and_handles_duplicates() {
        let data = BinaryMatrix::from_rows(vec![
            vec![1, 0, 1, 0, 1],
            vec![1, 0, 1, 0, 1],
            vec![0, 1, 0, 1, 0],
            vec![1, 1, 1, 0, 0],
        ])
        .unwrap();
        for &measure in &[Measure::Jaccard, Measure::SimpleMatching] {
            let m = distance_matrix(&data, measure).unwrap();
            assert_eq!(m.n(), 4);
            for i in 0..4 {
                assert_eq!(m.get(i, i), 0.0);
                for j in 0..4 {
                    assert_eq!(m.get(i, j), m.get(j, i));
                    if i != j {
                        let expect = match measure {
                            Measure::Jaccard => {
                                jaccard_distance(data.row(i), data.row(j)).unwrap()
                            }
                            Measure::SimpleMatching => {
                                simple_matching_distance(data.row(i), data.row(j)).unwrap()
                            }
                        };
                        assert_eq!(m.get(i, j), expect);
                    }
                }
            }
        }
        // duplicated rows sit at distance zero
        let m = distance_matrix(&data, Measure::Jaccard).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn single_row_matrix_is_zero() {
        let data = BinaryMatrix::from_rows(vec![vec![1, 0, 1]]).unwrap();
        let m = distance_matrix(&data, Measure::Jaccard).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    fn random_presence_row(bits: &[bool]) -> Vec<u8> {
        bits.iter().map(|&b| b as u8).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn jaccard_triangle_inequality(
            xs in proptest::collection::vec(any::<bool>(), 20),
            ys in proptest::collection::vec(any::<bool>(), 20),
            zs in proptest::collection::vec(any::<bool>(), 20),
        ) {
            let (mut x, mut y, mut z) =
                (random_presence_row(&xs), random_presence_row(&ys), random_presence_row(&zs));
            // guarantee non-empty unions
            x[0] = 1;
            y[0] = 1;
            z[0] = 1;
            let dxy = jaccard_distance(&x, &y).unwrap();
            let dyz = jaccard_distance(&y, &z).unwrap();
            let dxz = jaccard_distance(&x, &z).unwrap();
            prop_assert!(dxz <= dxy + dyz + 1e-15);
        }

        #[test]
        fn column_permutation_invariance(
            xs in proptest::collection::vec(any::<bool>(), 12),
            ys in proptest::collection::vec(any::<bool>(), 12),
            rot in 1usize..11,
        ) {
            let (mut x, mut y) = (random_presence_row(&xs), random_presence_row(&ys));
            x[0] = 1;
            y[0] = 1;
            let mut xr = x.clone();
            let mut yr = y.clone();
            xr.rotate_left(rot);
            yr.rotate_left(rot);
            prop_assert_eq!(
                jaccard_distance(&x, &y).unwrap(),
                jaccard_distance(&xr, &yr).unwrap()
            );
            prop_assert_eq!(
                simple_matching_distance(&x, &y).unwrap(),
                simple_matching_distance(&xr, &yr).unwrap()
            );
        }
    }
}

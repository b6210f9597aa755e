//! Multidimensional scaling: classical (Torgerson) scaling and ratio MDS by
//! stress majorization (SMACOF).
//!
//! Classical scaling double-centers the squared dissimilarities and reads the
//! configuration off the top eigenpairs. Ratio MDS fits embedded distances to
//! `b * delta` by alternating a closed-form update of the ratio `b` with the
//! Guttman majorization update of the configuration, which makes the
//! normalized stress non-increasing at every iteration.

use crate::dist::DistanceMatrix;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Default stress-decrease stopping threshold for [`ratio_smacof`].
pub const DEFAULT_SMACOF_EPS: f64 = 1e-6;
/// Default iteration cap for [`ratio_smacof`].
pub const DEFAULT_SMACOF_MAX_ITER: usize = 500;

/// An n-point configuration in p-dimensional Euclidean space. Column means
/// are zero for every embedding produced by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    p: usize,
    coords: Vec<f64>,
    /// Final normalized stress; `None` for classical scaling.
    pub stress: Option<f64>,
}

impl Embedding {
    /// Wraps row-major coordinates (`coords[i * p + d]`).
    pub fn new(n: usize, p: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "coordinate buffer has length {} but expected {n} x {p}",
                coords.len()
            )));
        }
        if p == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("coordinates must be finite".into()));
        }
        Ok(Self { n, p, coords, stress: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, d: usize) -> f64 {
        self.coords[i * self.p + d]
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean distance between embedded points i and j.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// Matrix of pairwise embedded distances.
    pub fn pairwise_distances(&self) -> DistanceMatrix {
        let mut m = DistanceMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m.set(i, j, self.distance(i, j));
            }
        }
        m
    }

    /// Keeps the first `p` coordinates of every point. For classical scaling
    /// output this equals recomputing the embedding at the lower dimension,
    /// because axes are ordered by descending eigenvalue.
    pub fn truncated(&self, p: usize) -> Result<Self> {
        if p == 0 || p > self.p {
            return Err(Error::InvalidInput(format!("cannot truncate p={} to {p}", self.p)));
        }
        let mut coords = Vec::with_capacity(self.n * p);
        for i in 0..self.n {
            coords.extend_from_slice(&self.coords[i * self.p..i * self.p + p]);
        }
        Ok(Self { n: self.n, p, coords, stress: None })
    }

    fn center_columns(&mut self) {
        for d in 0..self.p {
            let mean: f64 =
                (0..self.n).map(|i| self.coords[i * self.p + d]).sum::<f64>() / self.n as f64;
            for i in 0..self.n {
                self.coords[i * self.p + d] -= mean;
            }
        }
    }
}

/// Classical (Torgerson) scaling of a dissimilarity matrix into p dimensions.
///
/// Double-centers the entrywise squared matrix, `B = -1/2 J D^2 J`, takes the
/// top-p eigenpairs of B, and scales eigenvectors by the square roots of their
/// eigenvalues. Axes whose eigenvalue is not positive are filled with zeros;
/// dissimilarities that are not Euclidean-realizable (Jaccard matrices in
/// general) lose only the mass of those truncated axes.
///
/// # Errors
///
/// Fewer than two points, or `p` outside `1..=n-1`.
pub fn classical_mds(d: &DistanceMatrix, p: usize) -> Result<Embedding> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidInput("classical scaling needs at least two points".into()));
    }
    if p < 1 || p > n - 1 {
        return Err(Error::InvalidInput(format!("dimension {p} outside 1..={}", n - 1)));
    }

    // B = -1/2 J D^2 J via row, column, and grand means of squared entries.
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            sq[i * n + j] = v * v;
        }
    }
    let row_means: Vec<f64> =
        (0..n).map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_means[i] - row_means[j] + grand);
        }
    }

    let (values, vectors) = symmetric_eigen(&b, n);
    let mut coords = vec![0.0; n * p];
    for (k, &lambda) in values.iter().take(p).enumerate() {
        if lambda > 0.0 {
            let scale = lambda.sqrt();
            for i in 0..n {
                coords[i * p + k] = vectors[i * n + k] * scale;
            }
        }
    }
    let mut emb = Embedding::new(n, p, coords)?;
    emb.center_columns();
    Ok(emb)
}

/// Normalized ratio-MDS stress of configuration `x` against dissimilarities
/// `d`, evaluated at the optimal ratio:
/// `sigma(X, b) = sum_{i<j} (b d_ij - dist_ij(X))^2 / sum_{i<j} (b d_ij)^2`.
pub fn normalized_stress(d: &DistanceMatrix, x: &Embedding) -> Result<f64> {
    let (delta, dist) = condensed_pair(d, x)?;
    let b = optimal_ratio(&delta, &dist)?;
    Ok(stress_at(&delta, &dist, b))
}

fn condensed_pair(d: &DistanceMatrix, x: &Embedding) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.n();
    if x.n() != n {
        return Err(Error::InvalidInput(format!(
            "configuration has {} points but the matrix has {n}",
            x.n()
        )));
    }
    let mut delta = Vec::with_capacity(n * (n - 1) / 2);
    let mut dist = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            delta.push(d.get(i, j));
            dist.push(x.distance(i, j));
        }
    }
    Ok((delta, dist))
}

/// Ratio minimizing the normalized stress for a fixed configuration:
/// b = sum(dist^2) / sum(delta * dist).
fn optimal_ratio(delta: &[f64], dist: &[f64]) -> Result<f64> {
    let e: f64 = dist.iter().map(|v| v * v).sum();
    let c: f64 = delta.iter().zip(dist).map(|(a, b)| a * b).sum();
    if e <= 0.0 || c <= 0.0 {
        return Err(Error::Numerical("configuration collapsed to a point".into()));
    }
    Ok(e / c)
}

fn stress_at(delta: &[f64], dist: &[f64], b: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&dl, &dx) in delta.iter().zip(dist) {
        let scaled = b * dl;
        num += (scaled - dx) * (scaled - dx);
        den += scaled * scaled;
    }
    num / den
}

/// Ratio MDS by SMACOF majorization, returning the final configuration.
/// See [`ratio_smacof_trace`] for the per-iteration stress sequence.
pub fn ratio_smacof(
    d: &DistanceMatrix,
    p: usize,
    max_iter: usize,
    eps: f64,
    init: &Embedding,
) -> Result<Embedding> {
    ratio_smacof_trace(d, p, max_iter, eps, init).map(|(emb, _)| emb)
}

/// Ratio MDS by SMACOF majorization.
///
/// Alternates the closed-form ratio update with the Guttman transform of the
/// configuration. Each full iteration cannot increase the normalized stress:
/// the ratio update is the exact minimizer over `b`, and the Guttman step
/// decreases the numerator while the denominator is fixed by `b`. Stops when
/// the stress decrease falls below `eps` or after `max_iter` iterations.
///
/// Returns the centered final configuration (stress recorded in the embedding)
/// and the stress value at every evaluation, starting from the initial
/// configuration.
///
/// # Errors
///
/// All-zero dissimilarities, mismatched `init` shape, or a configuration that
/// collapses to a single point.
pub fn ratio_smacof_trace(
    d: &DistanceMatrix,
    p: usize,
    max_iter: usize,
    eps: f64,
    init: &Embedding,
) -> Result<(Embedding, Vec<f64>)> {
    let n = d.n();
    if init.n() != n || init.p() != p {
        return Err(Error::InvalidInput(format!(
            "init is {}x{} but expected {n}x{p}",
            init.n(),
            init.p()
        )));
    }
    let (delta, _) = condensed_pair(d, init)?;
    if delta.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput("all dissimilarities are zero".into()));
    }

    let mut x = init.clone();
    x.center_columns();
    let mut dist = condensed_distances(&x);
    let mut b = optimal_ratio(&delta, &dist)?;
    let mut stress = stress_at(&delta, &dist, b);
    let mut trace = vec![stress];

    for _ in 0..max_iter {
        guttman_update(&mut x, &delta, &dist, b);
        dist = condensed_distances(&x);
        b = optimal_ratio(&delta, &dist)?;
        let next = stress_at(&delta, &dist, b);
        // Majorization guarantee, with a whisker of slack for round-off.
        assert!(
            next <= stress + 1e-12 * (1.0 + stress),
            "stress increased from {stress} to {next}"
        );
        trace.push(next);
        let decrease = stress - next;
        stress = next;
        if decrease < eps {
            break;
        }
    }

    x.center_columns();
    x.stress = Some(stress);
    Ok((x, trace))
}

fn condensed_distances(x: &Embedding) -> Vec<f64> {
    let n = x.n();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(x.distance(i, j));
        }
    }
    out
}

/// Guttman transform for target distances `b * delta`: X <- (1/n) B(X) X with
/// B built from the ratios of targets to current distances. Zero current
/// distances contribute nothing, the standard majorization convention.
fn guttman_update(x: &mut Embedding, delta: &[f64], dist: &[f64], b: f64) {
    let n = x.n();
    let p = x.p();
    let old = x.coords.clone();
    let mut new = vec![0.0; n * p];
    let mut idx = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist[idx];
            let w = if dij > 0.0 { b * delta[idx] / dij } else { 0.0 };
            idx += 1;
            if w != 0.0 {
                for d in 0..p {
                    let diff = old[i * p + d] - old[j * p + d];
                    new[i * p + d] += w * diff;
                    new[j * p + d] -= w * diff;
                }
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for v in &mut new {
        *v *= inv_n;
    }
    x.coords = new;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix_from_points(points: &[&[f64]]) -> DistanceMatrix {
        let n = points.len();
        let mut m = DistanceMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d: f64 = points[i]
                    .iter()
                    .zip(points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                m.set(i, j, d);
            }
        }
        m
    }

    #[test]
    fn two_points_split_symmetrically() {
        let mut d = DistanceMatrix::zeros(2);
        d.set(0, 1, 2.0);
        let emb = classical_mds(&d, 1).unwrap();
        assert!((emb.get(0, 0).abs() - 1.0).abs() < 1e-10);
        assert!((emb.get(0, 0) + emb.get(1, 0)).abs() < 1e-10, "coordinates sum to zero");
    }

    #[test]
    fn collinear_points_recovered_in_1d() {
        // points at 0, 1, 3 on a line
        let mut d = DistanceMatrix::zeros(3);
        d.set(0, 1, 1.0);
        d.set(0, 2, 3.0);
        d.set(1, 2, 2.0);
        let emb = classical_mds(&d, 1).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(
                    (emb.distance(i, j) - d.get(i, j)).abs() < 1e-8,
                    "pair ({i},{j}) distance {} vs {}",
                    emb.distance(i, j),
                    d.get(i, j)
                );
            }
        }
    }

    #[test]
    fn planar_points_recovered_in_2d() {
        let pts: Vec<Vec<f64>> = vec![
            vec![0.13, -1.2],
            vec![2.4, 0.33],
            vec![-0.8, 0.92],
            vec![1.7, -0.41],
            vec![0.05, 0.6],
        ];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let d = matrix_from_points(&refs);
        let emb = classical_mds(&d, 2).unwrap();
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert!((emb.distance(i, j) - d.get(i, j)).abs() < 1e-8);
            }
        }
        // column means zero
        for k in 0..2 {
            let mean: f64 = (0..5).map(|i| emb.get(i, k)).sum::<f64>() / 5.0;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn squared_coordinate_mass_matches_positive_eigenvalues() {
        let pts: Vec<Vec<f64>> =
            vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![0.4, 1.3], vec![-0.9, 0.7]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let d = matrix_from_points(&refs);
        let emb = classical_mds(&d, 3).unwrap();
        // Planar input: the third axis carries (numerically) nothing. The
        // bound reflects the eigensolver sweep tolerance, not machine eps.
        let third: f64 = (0..4).map(|i| emb.get(i, 2) * emb.get(i, 2)).sum();
        assert!(third < 1e-12);
        let mass: f64 = emb.coords().iter().map(|v| v * v).sum();
        let pair_mass: f64 = {
            // sum of squared distances / n equals total eigenvalue mass for
            // Euclidean-realizable input
            let mut s = 0.0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    s += d.get(i, j) * d.get(i, j);
                }
            }
            s / 4.0
        };
        assert!((mass - pair_mass).abs() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let d = DistanceMatrix::zeros(1);
        assert!(classical_mds(&d, 1).is_err());
        let d = DistanceMatrix::zeros(3);
        assert!(classical_mds(&d, 3).is_err(), "p must be at most n-1");
        assert!(classical_mds(&d, 0).is_err());
    }

    #[test]
    fn optimal_ratio_closed_form() {
        // fixed distances d=(2,4) against delta=(1,2): b = (4+16)/(2+8) = 2
        let b = optimal_ratio(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert!((b - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smacof_stays_put_at_exact_realization() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.1], vec![1.5, 0.4], vec![0.3, 1.9]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let d = matrix_from_points(&refs);
        let init = classical_mds(&d, 2).unwrap();
        let (emb, trace) = ratio_smacof_trace(&d, 2, 100, 1e-6, &init).unwrap();
        assert!(trace[0] < 1e-15, "exact realization has zero stress");
        assert!(emb.stress.unwrap() < 1e-15);
        for i in 0..3 {
            for k in 0..2 {
                assert!((emb.get(i, k) - init.get(i, k)).abs() < 1e-10, "configuration moved");
            }
        }
    }

    #[test]
    fn smacof_stress_non_increasing_and_below_start() {
        // non-Euclidean-ish random dissimilarities
        let n = 12;
        let mut d = DistanceMatrix::zeros(n);
        let mut xseed = 0.2f64;
        for i in 0..n {
            for j in (i + 1)..n {
                xseed = (xseed * 997.0 + 0.123).fract();
                d.set(i, j, 0.2 + 0.8 * xseed);
            }
        }
        let init = classical_mds(&d, 2).unwrap();
        let start = normalized_stress(&d, &init).unwrap();
        let (emb, trace) = ratio_smacof_trace(&d, 2, 200, 1e-9, &init).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0]));
        }
        assert!(emb.stress.unwrap() <= start);
        // output centered
        for k in 0..2 {
            let mean: f64 = (0..n).map(|i| emb.get(i, k)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn smacof_rejects_zero_matrix_and_shape_mismatch() {
        let d = DistanceMatrix::zeros(4);
        let init = Embedding::new(4, 2, vec![0.0; 8]).unwrap();
        assert!(ratio_smacof(&d, 2, 10, 1e-6, &init).is_err());
        let mut d2 = DistanceMatrix::zeros(4);
        d2.set(0, 1, 1.0);
        let bad = Embedding::new(3, 2, vec![0.0; 6]).unwrap();
        assert!(ratio_smacof(&d2, 2, 10, 1e-6, &bad).is_err());
    }

    #[test]
    fn truncation_matches_lower_dimensional_run() {
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0, 0.3],
            vec![1.0, 0.2, -0.4],
            vec![0.4, 1.3, 0.9],
            vec![-0.9, 0.7, 0.1],
            vec![0.6, -0.8, -0.7],
        ];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let d = matrix_from_points(&refs);
        let full = classical_mds(&d, 3).unwrap();
        let direct = classical_mds(&d, 2).unwrap();
        let cut = full.truncated(2).unwrap();
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert!((direct.distance(i, j) - cut.distance(i, j)).abs() < 1e-9);
            }
        }
    }
}

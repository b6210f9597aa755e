//! Partitioning clusterers: PAM (k-medoids) on a dissimilarity matrix,
//! k-means on an embedding, and k-modes directly on binary rows.
//!
//! PAM is fully deterministic (greedy BUILD then best-improvement SWAP with
//! index-ordered tie-breaking). The k-means and k-modes fits are multi-start
//! and consume the caller's generator, so determinism is inherited from the
//! seeding scheme.

use rand::Rng;

use crate::data::{BinaryMatrix, ClusterLabels};
use crate::dist::{hamming, DistanceMatrix};
use crate::error::{Error, Result};
use crate::mds::Embedding;

/// Result of a PAM fit. `medoids` are point indices in ascending order;
/// cluster c (1-based) is served by `medoids[c - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PamFit {
    pub labels: ClusterLabels,
    pub medoids: Vec<usize>,
    pub cost: f64,
}

/// Total cost of serving every point from its nearest medoid.
pub fn pam_cost(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..d.n() {
        let mut best = f64::INFINITY;
        for &m in medoids {
            let v = d.get(i, m);
            if v < best {
                best = v;
            }
        }
        total += best;
    }
    total
}

/// Greedy BUILD phase: the first medoid minimizes total distance to all
/// points, each later medoid maximizes the total serving-cost reduction.
/// Ties pick the lowest point index. Returns medoids in ascending order.
pub fn pam_build(d: &DistanceMatrix, k: usize) -> Result<Vec<usize>> {
    let n = d.n();
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("medoid count {k} outside 1..={n}")));
    }
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];

    let mut first = 0;
    let mut first_cost = f64::INFINITY;
    for c in 0..n {
        let total: f64 = (0..n).map(|i| d.get(i, c)).sum();
        if total < first_cost {
            first_cost = total;
            first = c;
        }
    }
    medoids.push(first);
    for i in 0..n {
        nearest[i] = d.get(i, first);
    }

    while medoids.len() < k {
        let mut best_c = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for c in 0..n {
            if medoids.contains(&c) {
                continue;
            }
            let gain: f64 = (0..n).map(|i| (nearest[i] - d.get(i, c)).max(0.0)).sum();
            if gain > best_gain {
                best_gain = gain;
                best_c = c;
            }
        }
        medoids.push(best_c);
        for i in 0..n {
            let v = d.get(i, best_c);
            if v < nearest[i] {
                nearest[i] = v;
            }
        }
    }
    medoids.sort_unstable();
    Ok(medoids)
}

/// PAM: BUILD followed by repeated best-improvement SWAP passes.
///
/// Each pass evaluates every (medoid, non-medoid) exchange and applies the
/// one with the largest cost decrease; scanning order (ascending medoid, then
/// ascending candidate) and a strict improvement threshold make the procedure
/// deterministic and cycle-free. Labels follow the ascending medoid order and
/// points join their nearest medoid, ties toward the earlier medoid.
pub fn pam(d: &DistanceMatrix, k: usize) -> Result<PamFit> {
    let n = d.n();
    let mut medoids = pam_build(d, k)?;
    // Strictly-below-noise improvements are treated as zero to rule out
    // swap cycles driven by round-off.
    let tol = 1e-12 * n as f64;

    let mut is_medoid = vec![false; n];
    for &m in &medoids {
        is_medoid[m] = true;
    }

    for _pass in 0..200 {
        // Distance to nearest medoid, its position in `medoids`, and the
        // best distance over the remaining medoids.
        let mut near = vec![f64::INFINITY; n];
        let mut near_pos = vec![usize::MAX; n];
        let mut second = vec![f64::INFINITY; n];
        for i in 0..n {
            for (pos, &m) in medoids.iter().enumerate() {
                let v = d.get(i, m);
                if v < near[i] {
                    near[i] = v;
                    near_pos[i] = pos;
                }
            }
            for (pos, &m) in medoids.iter().enumerate() {
                if pos != near_pos[i] {
                    let v = d.get(i, m);
                    if v < second[i] {
                        second[i] = v;
                    }
                }
            }
        }

        let mut best_delta = 0.0f64;
        let mut best_swap: Option<(usize, usize)> = None;
        for (pos, &_m) in medoids.iter().enumerate() {
            for h in 0..n {
                if is_medoid[h] {
                    continue;
                }
                let mut delta = 0.0;
                for i in 0..n {
                    let dih = d.get(i, h);
                    if near_pos[i] == pos {
                        delta += dih.min(second[i]) - near[i];
                    } else if dih < near[i] {
                        delta += dih - near[i];
                    }
                }
                if delta < best_delta {
                    best_delta = delta;
                    best_swap = Some((pos, h));
                }
            }
        }

        match best_swap {
            Some((pos, h)) if best_delta < -tol => {
                is_medoid[medoids[pos]] = false;
                is_medoid[h] = true;
                medoids[pos] = h;
                medoids.sort_unstable();
            }
            _ => break,
        }
    }

    let mut labels = vec![0usize; n];
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut best_pos = 0;
        for (pos, &m) in medoids.iter().enumerate() {
            let v = d.get(i, m);
            if v < best {
                best = v;
                best_pos = pos;
            }
        }
        labels[i] = best_pos + 1;
    }
    let cost = pam_cost(d, &medoids);
    Ok(PamFit { labels, medoids, cost })
}

/// Result of a k-means fit: `centers` is k x p row-major, `wcss` the total
/// within-cluster sum of squared distances to the cluster means.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: ClusterLabels,
    pub centers: Vec<f64>,
    pub wcss: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Multi-start Lloyd k-means.
///
/// Every start draws k distinct points as initial centers, then alternates
/// nearest-center assignment (ties toward the lower center index) with mean
/// updates until the assignment is stable or `iter_max` is hit. A cluster
/// that empties is repaired by stealing the point currently farthest from
/// its own center, never emptying the donor. The best start by WCSS wins,
/// earliest start on ties.
pub fn kmeans(
    x: &Embedding,
    k: usize,
    rng: &mut impl Rng,
    n_starts: usize,
    iter_max: usize,
) -> Result<KMeansFit> {
    let n = x.n();
    let p = x.p();
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("cluster count {k} outside 1..={n}")));
    }
    if n_starts == 0 || iter_max == 0 {
        return Err(Error::InvalidInput("n_starts and iter_max must be positive".into()));
    }

    let mut best: Option<KMeansFit> = None;
    for _ in 0..n_starts {
        let init = rand::seq::index::sample(rng, n, k);
        let mut centers = vec![0.0f64; k * p];
        for (c, idx) in init.into_iter().enumerate() {
            centers[c * p..(c + 1) * p].copy_from_slice(x.point(idx));
        }

        let mut assign = vec![usize::MAX; n];
        for _ in 0..iter_max {
            let mut next = vec![0usize; n];
            let mut counts = vec![0usize; k];
            for i in 0..n {
                let mut bd = f64::INFINITY;
                let mut bc = 0;
                for c in 0..k {
                    let v = sq_dist(x.point(i), &centers[c * p..(c + 1) * p]);
                    if v < bd {
                        bd = v;
                        bc = c;
                    }
                }
                next[i] = bc;
                counts[bc] += 1;
            }
            for c in 0..k {
                if counts[c] > 0 {
                    continue;
                }
                // farthest point whose cluster can spare it
                let mut bd = f64::NEG_INFINITY;
                let mut bi = usize::MAX;
                for i in 0..n {
                    if counts[next[i]] < 2 {
                        continue;
                    }
                    let v = sq_dist(x.point(i), &centers[next[i] * p..(next[i] + 1) * p]);
                    if v > bd {
                        bd = v;
                        bi = i;
                    }
                }
                counts[next[bi]] -= 1;
                next[bi] = c;
                counts[c] += 1;
            }
            let stable = next == assign;
            assign = next;
            for c in 0..k {
                for v in &mut centers[c * p..(c + 1) * p] {
                    *v = 0.0;
                }
            }
            for i in 0..n {
                for dd in 0..p {
                    centers[assign[i] * p + dd] += x.get(i, dd);
                }
            }
            for c in 0..k {
                for v in &mut centers[c * p..(c + 1) * p] {
                    *v /= counts[c] as f64;
                }
            }
            if stable {
                break;
            }
        }

        let wcss: f64 =
            (0..n).map(|i| sq_dist(x.point(i), &centers[assign[i] * p..(assign[i] + 1) * p])).sum();
        if best.as_ref().is_none_or(|b| wcss < b.wcss) {
            best = Some(KMeansFit {
                labels: assign.iter().map(|&c| c + 1).collect(),
                centers,
                wcss,
            });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Result of a k-modes fit: `modes` holds one binary prototype per cluster,
/// `cost` the total Hamming distance of points to their cluster mode.
#[derive(Debug, Clone, PartialEq)]
pub struct KModesFit {
    pub labels: ClusterLabels,
    pub modes: Vec<Vec<u8>>,
    pub cost: u64,
}

/// Multi-start k-modes on binary rows.
///
/// Initial modes are distinct rows drawn uniformly. Assignment is by Hamming
/// distance (ties toward the lower mode index); the mode update takes the
/// per-column majority, with exact 50/50 ties set to 1. Empty clusters steal
/// the point farthest from its own mode. The best start by total Hamming
/// cost wins, earliest start on ties.
///
/// # Errors
///
/// Fewer than k distinct rows.
pub fn kmodes(
    data: &BinaryMatrix,
    k: usize,
    rng: &mut impl Rng,
    n_starts: usize,
) -> Result<KModesFit> {
    let n = data.n_rows();
    let m = data.n_cols();
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("cluster count {k} outside 1..={n}")));
    }
    if n_starts == 0 {
        return Err(Error::InvalidInput("n_starts must be positive".into()));
    }
    let distinct: std::collections::HashSet<&[u8]> = data.rows().collect();
    if distinct.len() < k {
        return Err(Error::InvalidInput(format!(
            "need at least {k} distinct rows, found {}",
            distinct.len()
        )));
    }
    const ITER_CAP: usize = 300;

    let mut best: Option<KModesFit> = None;
    for _ in 0..n_starts {
        // Draw until k pairwise-distinct rows are collected. The fallback
        // index scan keeps the loop finite without changing the distribution
        // in any realistic case.
        let mut modes: Vec<Vec<u8>> = Vec::with_capacity(k);
        let mut misses = 0usize;
        while modes.len() < k {
            let row = data.row(rng.random_range(0..n));
            if modes.iter().any(|md| md.as_slice() == row) {
                misses += 1;
                if misses > 10_000 {
                    for r in data.rows() {
                        if modes.len() < k && !modes.iter().any(|md| md.as_slice() == r) {
                            modes.push(r.to_vec());
                        }
                    }
                }
            } else {
                modes.push(row.to_vec());
            }
        }

        let mut assign = vec![usize::MAX; n];
        for _ in 0..ITER_CAP {
            let mut next = vec![0usize; n];
            let mut counts = vec![0usize; k];
            for i in 0..n {
                let mut bd = usize::MAX;
                let mut bc = 0;
                for (c, mode) in modes.iter().enumerate() {
                    let v = hamming(data.row(i), mode);
                    if v < bd {
                        bd = v;
                        bc = c;
                    }
                }
                next[i] = bc;
                counts[bc] += 1;
            }
            for c in 0..k {
                if counts[c] > 0 {
                    continue;
                }
                let mut bd = 0usize;
                let mut bi = usize::MAX;
                for i in 0..n {
                    if counts[next[i]] < 2 {
                        continue;
                    }
                    let v = hamming(data.row(i), &modes[next[i]]);
                    if bi == usize::MAX || v > bd {
                        bd = v;
                        bi = i;
                    }
                }
                counts[next[bi]] -= 1;
                next[bi] = c;
                counts[c] += 1;
            }
            let stable = next == assign;
            assign = next;
            update_modes(data, &assign, &counts, &mut modes, m);
            if stable {
                break;
            }
        }

        let cost: u64 = (0..n).map(|i| hamming(data.row(i), &modes[assign[i]]) as u64).sum();
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(KModesFit {
                labels: assign.iter().map(|&c| c + 1).collect(),
                modes,
                cost,
            });
        }
    }
    Ok(best.expect("at least one start"))
}

fn update_modes(
    data: &BinaryMatrix,
    assign: &[usize],
    counts: &[usize],
    modes: &mut [Vec<u8>],
    m: usize,
) {
    let k = modes.len();
    let mut ones = vec![0usize; k * m];
    for (i, &c) in assign.iter().enumerate() {
        for (j, &v) in data.row(i).iter().enumerate() {
            ones[c * m + j] += v as usize;
        }
    }
    for c in 0..k {
        for j in 0..m {
            modes[c][j] = u8::from(2 * ones[c * m + j] >= counts[c]);
        }
    }
}

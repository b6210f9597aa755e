//! Density level-set clustering on an embedding: product-Gaussian kernel
//! density estimation, connected components of level sets under the pairs
//! (midpoint density) adjacency rule, core extraction from the component
//! tree, and kernel-vote classification of the remaining points.
//!
//! The whole module is deterministic: there is no randomness, and the level
//! sweep processes each threshold as one batch so no within-level ordering
//! can influence the result.

use crate::data::ClusterLabels;
use crate::error::{Error, Result};
use crate::mds::Embedding;

/// Kernel density estimate at the data points plus the derived level grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    /// Estimated density at each data point (strictly positive).
    pub densities: Vec<f64>,
    /// Per-dimension kernel bandwidths.
    pub bandwidths: Vec<f64>,
    /// Level grid: the n density quantiles in ascending order.
    pub threshold_grid: Vec<f64>,
}

/// Per-dimension normal-reference bandwidths
/// h_d = sd_d * (4 / ((p + 2) n))^(1 / (p + 4)) * scale.
///
/// # Errors
///
/// Fewer than two points, a non-positive scale, or a zero-variance
/// coordinate.
pub fn normal_reference_bandwidths(x: &Embedding, scale: f64) -> Result<Vec<f64>> {
    let n = x.n();
    let p = x.p();
    if n < 2 {
        return Err(Error::InvalidInput("bandwidth selection needs at least two points".into()));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidInput("bandwidth scale must be positive".into()));
    }
    let factor = (4.0 / ((p as f64 + 2.0) * n as f64)).powf(1.0 / (p as f64 + 4.0));
    let mut out = Vec::with_capacity(p);
    for d in 0..p {
        let mean: f64 = (0..n).map(|i| x.get(i, d)).sum::<f64>() / n as f64;
        let ss: f64 = (0..n).map(|i| (x.get(i, d) - mean).powi(2)).sum();
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if !(sd > 0.0) {
            return Err(Error::Numerical(format!("coordinate {d} has zero variance")));
        }
        out.push(sd * factor * scale);
    }
    Ok(out)
}

/// Coordinates pre-divided by bandwidth, so every kernel evaluation is a
/// squared Euclidean distance in scaled space.
struct KernelSpace {
    n: usize,
    p: usize,
    scaled: Vec<f64>,
    /// 1 / (n (2 pi)^(p/2) prod h_d): turns a kernel sum into a density.
    norm: f64,
}

/// Kernel sums beyond this scaled squared distance are below 4e-18 of the
/// peak and are skipped.
const SSQ_CUTOFF: f64 = 80.0;

impl KernelSpace {
    fn new(x: &Embedding, bandwidths: &[f64]) -> Result<Self> {
        let n = x.n();
        let p = x.p();
        if n < 2 {
            return Err(Error::InvalidInput("density estimation needs at least two points".into()));
        }
        if bandwidths.len() != p || bandwidths.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "need {p} positive bandwidths, got {:?}",
                bandwidths
            )));
        }
        let mut scaled = Vec::with_capacity(n * p);
        for i in 0..n {
            for d in 0..p {
                scaled.push(x.get(i, d) / bandwidths[d]);
            }
        }
        let norm = 1.0
            / (n as f64
                * (2.0 * std::f64::consts::PI).powf(p as f64 / 2.0)
                * bandwidths.iter().product::<f64>());
        Ok(Self { n, p, scaled, norm })
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.scaled[i * self.p..(i + 1) * self.p]
    }

    /// sum_j exp(-||q - x_j||^2 / 2) over the given points (scaled space).
    fn kernel_sum(&self, q: &[f64], members: impl Iterator<Item = usize>) -> f64 {
        let mut total = 0.0;
        'outer: for j in members {
            let xj = self.point(j);
            let mut ssq = 0.0;
            for d in 0..self.p {
                let diff = q[d] - xj[d];
                ssq += diff * diff;
                if ssq > SSQ_CUTOFF {
                    continue 'outer;
                }
            }
            total += (-0.5 * ssq).exp();
        }
        total
    }

    fn density_at(&self, q: &[f64]) -> f64 {
        self.norm * self.kernel_sum(q, 0..self.n)
    }
}

/// Leave-self-in kernel density estimate at every data point.
///
/// # Errors
///
/// Fewer than two points or invalid bandwidths.
pub fn kde(x: &Embedding, bandwidths: &[f64]) -> Result<Vec<f64>> {
    let space = KernelSpace::new(x, bandwidths)?;
    Ok((0..space.n).map(|i| space.density_at(space.point(i))).collect())
}

/// Kernel density estimate at an arbitrary point.
///
/// # Errors
///
/// Fewer than two points, invalid bandwidths, or a query of the wrong
/// dimension.
pub fn kde_at(x: &Embedding, bandwidths: &[f64], point: &[f64]) -> Result<f64> {
    let space = KernelSpace::new(x, bandwidths)?;
    if point.len() != space.p {
        return Err(Error::InvalidInput(format!(
            "query has {} coordinates, expected {}",
            point.len(),
            space.p
        )));
    }
    let q: Vec<f64> = point.iter().zip(bandwidths).map(|(v, h)| v / h).collect();
    Ok(space.density_at(&q))
}

/// Estimates densities with normal-reference bandwidths (times `scale`) and
/// assembles the level grid: the n sorted density values, one level per
/// observation.
pub fn density_profile(x: &Embedding, bandwidth_scale: f64) -> Result<DensityProfile> {
    let bandwidths = normal_reference_bandwidths(x, bandwidth_scale)?;
    let densities = kde(x, &bandwidths)?;
    let mut threshold_grid = densities.clone();
    threshold_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(DensityProfile { densities, bandwidths, threshold_grid })
}

/// Union-find over points with size, core flag, and an O(1)-concatenable
/// member list. Because lists only ever grow by appending, the segment
/// `head[r] ..= tail[r]` captured at any moment keeps denoting exactly the
/// members r had at that moment.
struct Components {
    parent: Vec<usize>,
    size: Vec<usize>,
    has_core: Vec<bool>,
    head: Vec<usize>,
    tail: Vec<usize>,
    next: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl Components {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            has_core: vec![false; n],
            head: (0..n).collect(),
            tail: (0..n).collect(),
            next: vec![NIL; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.has_core[big] |= self.has_core[small];
        self.next[self.tail[big]] = self.head[small];
        self.tail[big] = self.tail[small];
        big
    }

    /// Members of the segment captured as (head, tail).
    fn segment(&self, head: usize, tail: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = head;
        loop {
            out.push(cur);
            if cur == tail {
                return out;
            }
            cur = self.next[cur];
        }
    }
}

/// Level-set clustering under the pairs rule.
///
/// Sweeping the level grid from the top, two alive points (density >= level)
/// are adjacent when their segment midpoint has estimated density >= level,
/// which makes a pair connectable exactly at
/// tau = min(density_i, density_j, density_midpoint). Each level is applied
/// as one batch of unions; a component that merges with another component
/// while both hold >= 2 points is frozen as a cluster core (components that
/// already contain a core just continue). Components still coreless when the
/// sweep ends become cores too; singletons never do. Non-core points then
/// join cores in order of decreasing density, each taking the core whose
/// current members give it the highest mean kernel vote (ties to the lower
/// label), and immediately count as members for later votes.
///
/// Labels are 1..=#cores by ascending smallest core member. If no core
/// exists at all (every component ended as a singleton) all points share
/// label 1.
///
/// # Errors
///
/// Fewer than two points or a profile that does not match the embedding.
pub fn level_set_cluster(x: &Embedding, profile: &DensityProfile) -> Result<ClusterLabels> {
    let n = x.n();
    if n < 2 {
        return Err(Error::InvalidInput("clustering needs at least two points".into()));
    }
    if profile.densities.len() != n || profile.threshold_grid.len() != n {
        return Err(Error::InvalidInput("profile does not match the embedding".into()));
    }
    let space = KernelSpace::new(x, &profile.bandwidths)?;
    let dens = &profile.densities;

    // Connection level for every pair, sorted descending.
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(n * (n - 1) / 2);
    let mut mid = vec![0.0f64; x.p()];
    for i in 0..n {
        for j in (i + 1)..n {
            for d in 0..x.p() {
                mid[d] = 0.5 * (space.point(i)[d] + space.point(j)[d]);
            }
            let tau = dens[i].min(dens[j]).min(space.density_at(&mid));
            edges.push((tau, i as u32, j as u32));
        }
    }
    edges.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut levels: Vec<f64> = profile.threshold_grid.clone();
    levels.reverse();
    levels.dedup();

    let mut comps = Components::new(n);
    // core -> frozen member list
    let mut cores: Vec<Vec<usize>> = Vec::new();
    let mut cursor = 0usize;
    for &level in &levels {
        if cursor >= edges.len() || edges[cursor].0 < level {
            continue;
        }
        // Pre-level snapshot of every component this batch touches.
        let mut snap: std::collections::BTreeMap<usize, (usize, bool, usize, usize)> =
            std::collections::BTreeMap::new();
        let start = cursor;
        while cursor < edges.len() && edges[cursor].0 >= level {
            let (_, i, j) = edges[cursor];
            for e in [i as usize, j as usize] {
                let r = comps.find(e);
                snap.entry(r).or_insert((comps.size[r], comps.has_core[r], comps.head[r], comps.tail[r]));
            }
            cursor += 1;
        }
        for &(_, i, j) in &edges[start..cursor] {
            comps.union(i as usize, j as usize);
        }
        // Group pre-level components by where they ended up; a merge of two
        // or more >=2-point components freezes every coreless one of them.
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for (&r, _) in &snap {
            groups.entry(comps.find(r)).or_default().push(r);
        }
        for (final_root, members) in groups {
            let substantial =
                members.iter().filter(|&&r| snap[&r].0 >= 2).count();
            if substantial < 2 {
                continue;
            }
            for &r in &members {
                let (sz, had_core, head, tail) = snap[&r];
                if sz >= 2 && !had_core {
                    cores.push(comps.segment(head, tail));
                    comps.has_core[final_root] = true;
                }
            }
        }
    }
    // Components that survived the sweep without merging become cores.
    let mut seen_roots = std::collections::BTreeSet::new();
    for i in 0..n {
        let r = comps.find(i);
        if seen_roots.insert(r) && !comps.has_core[r] && comps.size[r] >= 2 {
            cores.push(comps.segment(comps.head[r], comps.tail[r]));
        }
    }

    if cores.is_empty() {
        return Ok(vec![1; n]);
    }
    cores.sort_by_key(|members| *members.iter().min().unwrap());

    let mut labels = vec![0usize; n];
    for (c, members) in cores.iter().enumerate() {
        for &i in members {
            labels[i] = c + 1;
        }
    }

    // Classification of non-core points: highest mean kernel vote from the
    // current cluster pools, densest points first.
    let mut pools: Vec<Vec<usize>> = cores.clone();
    let mut rest: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
    rest.sort_by(|&a, &b| dens[b].partial_cmp(&dens[a]).unwrap().then(a.cmp(&b)));
    for i in rest {
        let mut best = f64::NEG_INFINITY;
        let mut best_c = 0;
        for (c, pool) in pools.iter().enumerate() {
            let vote = space.kernel_sum(space.point(i), pool.iter().copied()) / pool.len() as f64;
            if vote > best {
                best = vote;
                best_c = c;
            }
        }
        labels[i] = best_c + 1;
        pools[best_c].push(i);
    }
    Ok(labels)
}

/// Convenience wrapper: profile plus clustering in one call.
pub fn density_cluster(x: &Embedding, bandwidth_scale: f64) -> Result<ClusterLabels> {
    let profile = density_profile(x, bandwidth_scale)?;
    level_set_cluster(x, &profile)
}

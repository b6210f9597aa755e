//! Agglomerative hierarchical clustering (single, complete, average linkage)
//! with deterministic tie-breaking, plus dendrogram cutting.
//!
//! Clusters are tracked in the slot of their smallest member, and the merge
//! scan resolves equal inter-cluster distances toward the lexicographically
//! lowest slot pair. Equal-distance merges are therefore reproducible across
//! runs and platforms, which the benchmark harness relies on.

use crate::data::ClusterLabels;
use crate::dist::DistanceMatrix;
use crate::error::{Error, Result};
use crate::eval::adjusted_rand_index;

/// Linkage criterion, i.e. how the dissimilarity between two clusters is
/// derived from member pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

/// One agglomeration step. `left` and `right` are node identifiers: leaves
/// are 1..=n, the cluster created at step s (1-based) is node n+s. `left` is
/// the cluster whose smallest member is smaller.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

/// Full agglomeration history over n leaves (n-1 merges).
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
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
        // Root at the smaller index so the representative is the smallest
        // member, matching the slot convention used during agglomeration.
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
        keep
    }
}

/// Builds the dendrogram for `d` under the given linkage.
///
/// Inter-cluster distances evolve by the Lance-Williams recurrences. When
/// several pairs attain the minimum the pair of clusters with the
/// lexicographically smallest (smallest-member, smallest-member) slots is
/// merged.
///
/// # Errors
///
/// Fewer than two points.
pub fn linkage(d: &DistanceMatrix, method: Linkage) -> Result<Dendrogram> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidInput("clustering needs at least two points".into()));
    }

    // Working copy as a dense square for cheap row updates.
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = d.get(i, j);
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node_id: Vec<usize> = (1..=n).collect();

    // Cached per-row minimum over active columns right of the row. The pair
    // (i, nn_idx[i]) owns every active pair with smaller element i.
    let mut nn_dist = vec![f64::INFINITY; n];
    let mut nn_idx = vec![usize::MAX; n];
    let rescan = |dist: &[f64], active: &[bool], i: usize| -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in (i + 1)..n {
            if active[j] && dist[i * n + j] < best {
                best = dist[i * n + j];
                best_j = j;
            }
        }
        (best, best_j)
    };
    for i in 0..n {
        let (bd, bj) = rescan(&dist, &active, i);
        nn_dist[i] = bd;
        nn_idx[i] = bj;
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 1..n {
        // Lowest row with the global minimum; within a row the cache already
        // holds the lowest column attaining the row minimum.
        let mut i = usize::MAX;
        let mut best = f64::INFINITY;
        for r in 0..n {
            if active[r] && nn_idx[r] != usize::MAX && nn_dist[r] < best {
                best = nn_dist[r];
                i = r;
            }
        }
        let j = nn_idx[i];
        merges.push(Merge { left: node_id[i], right: node_id[j], height: best });

        // Lance-Williams update of distances from the merged cluster (kept in
        // slot i) to every other active cluster.
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if k == i || k == j || !active[k] {
                continue;
            }
            let dik = dist[i * n + k];
            let djk = dist[j * n + k];
            let v = match method {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => (si * dik + sj * djk) / (si + sj),
            };
            dist[i * n + k] = v;
            dist[k * n + i] = v;
        }
        active[j] = false;
        size[i] += size[j];
        node_id[i] = n + step;

        // Repair caches: row i changed wholesale; a row pointing at i or the
        // retired column j must rescan; other rows left of i only gain the
        // updated column i as a candidate.
        let (bd, bj) = rescan(&dist, &active, i);
        nn_dist[i] = bd;
        nn_idx[i] = bj;
        for k in 0..j {
            if !active[k] || k == i {
                continue;
            }
            if nn_idx[k] == i || nn_idx[k] == j {
                let (bd, bj) = rescan(&dist, &active, k);
                nn_dist[k] = bd;
                nn_idx[k] = bj;
            } else if k < i {
                let dki = dist[k * n + i];
                if dki < nn_dist[k] || (dki == nn_dist[k] && i < nn_idx[k]) {
                    nn_dist[k] = dki;
                    nn_idx[k] = i;
                }
            }
        }
    }

    Ok(Dendrogram { n, merges })
}

/// Cuts a dendrogram into exactly `k` clusters by undoing the last k-1
/// merges. Clusters are numbered 1..=k in order of their smallest member.
///
/// # Errors
///
/// `k` outside 1..=n.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<ClusterLabels> {
    let n = dend.n;
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("cut size {k} outside 1..={n}")));
    }
    let mut uf = DisjointSet::new(n);
    // root_of_node[v]: a point inside the cluster that node v denotes.
    let mut root_of_node = vec![usize::MAX; n + dend.merges.len() + 1];
    for v in 1..=n {
        root_of_node[v] = v - 1;
    }
    for (s, m) in dend.merges.iter().take(n - k).enumerate() {
        let r = uf.union(root_of_node[m.left], root_of_node[m.right]);
        root_of_node[n + s + 1] = r;
    }
    Ok(labels_from_uf(&mut uf, n))
}

/// First-appearance labeling: scanning points in index order reaches each
/// cluster first at its smallest member, so labels follow that order.
fn labels_from_uf(uf: &mut DisjointSet, n: usize) -> ClusterLabels {
    let mut label_of_root = vec![0usize; n];
    let mut labels = vec![0usize; n];
    let mut next = 0usize;
    for i in 0..n {
        let r = uf.find(i);
        if label_of_root[r] == 0 {
            next += 1;
            label_of_root[r] = next;
        }
        labels[i] = label_of_root[r];
    }
    labels
}

/// Scans every cut size K = 1..=n and returns the maximum adjusted Rand index
/// against `truth` together with the smallest K attaining it.
///
/// # Errors
///
/// `truth` length differs from the leaf count.
pub fn best_cut_ari(dend: &Dendrogram, truth: &[usize]) -> Result<(f64, usize)> {
    let n = dend.n;
    if truth.len() != n {
        return Err(Error::InvalidInput(format!(
            "truth has {} labels for {n} leaves",
            truth.len()
        )));
    }
    // Build labelings incrementally from K = n down to 1, then pick the best
    // in ascending K so ties go to the smallest K.
    let mut uf = DisjointSet::new(n);
    let mut root_of_node = vec![usize::MAX; n + dend.merges.len() + 1];
    for v in 1..=n {
        root_of_node[v] = v - 1;
    }
    let mut ari_by_k = vec![f64::NAN; n + 1];
    ari_by_k[n] = adjusted_rand_index(&labels_from_uf(&mut uf, n), truth)?;
    for (s, m) in dend.merges.iter().enumerate() {
        let r = uf.union(root_of_node[m.left], root_of_node[m.right]);
        root_of_node[n + s + 1] = r;
        let k = n - s - 1;
        ari_by_k[k] = adjusted_rand_index(&labels_from_uf(&mut uf, n), truth)?;
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_k = 1;
    for k in 1..=n {
        if ari_by_k[k] > best {
            best = ari_by_k[k];
            best_k = k;
        }
    }
    Ok((best, best_k))
}

//! Benchmark orchestration: the method catalog, deterministic seeding of the
//! scenario x replicate x method grid, and grouped result summaries.
//!
//! Determinism contract: every dataset comes from the stream derived from
//! (master seed, 1, scenario, replicate) and every method run from
//! (master seed, 2, scenario, replicate, method index), where the method
//! index is the catalog position regardless of which subset was selected.
//! Records therefore do not depend on the execution schedule, and parallel
//! runs equal serial ones bit for bit.

use serde::{Deserialize, Serialize};

use crate::data::{label_count, ClusterLabels};
use crate::datagen::{generate_dataset, GeneratedDataset, ScenarioConfig};
use crate::dcluster::density_cluster;
use crate::dist::{distance_matrix, DistanceMatrix, Measure};
use crate::error::{Error, Result};
use crate::eval::adjusted_rand_index;
use crate::hcluster::{cut, linkage, Linkage};
use crate::mcluster::{fit_gmm, fit_lca};
use crate::mds::{classical_mds, ratio_smacof, Embedding};
use crate::pcluster::{kmeans, kmodes, pam};
use crate::rng::{derive_rng, DATASET_STREAM, METHOD_STREAM};

/// The eighteen benchmark methods, in catalog order. For the MDS-based ids
/// the prefix picks the clusterer (k-means / Gaussian mixture / density
/// level sets), c/s picks classical or ratio (SMACOF) scaling, and the digit
/// is the embedding dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Single,
    Complete,
    Average,
    Pam,
    Kmodes,
    Lca,
    Kc2,
    Ks2,
    Kc3,
    Ks3,
    Gc2,
    Gs2,
    Gc3,
    Gs3,
    Pdfc2,
    Pdfs2,
    Pdfc3,
    Pdfs3,
}

impl MethodId {
    pub const ALL: [MethodId; 18] = [
        MethodId::Single,
        MethodId::Complete,
        MethodId::Average,
        MethodId::Pam,
        MethodId::Kmodes,
        MethodId::Lca,
        MethodId::Kc2,
        MethodId::Ks2,
        MethodId::Kc3,
        MethodId::Ks3,
        MethodId::Gc2,
        MethodId::Gs2,
        MethodId::Gc3,
        MethodId::Gs3,
        MethodId::Pdfc2,
        MethodId::Pdfs2,
        MethodId::Pdfc3,
        MethodId::Pdfs3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Single => "single",
            MethodId::Complete => "complete",
            MethodId::Average => "average",
            MethodId::Pam => "pam",
            MethodId::Kmodes => "kmodes",
            MethodId::Lca => "lca",
            MethodId::Kc2 => "kc2",
            MethodId::Ks2 => "ks2",
            MethodId::Kc3 => "kc3",
            MethodId::Ks3 => "ks3",
            MethodId::Gc2 => "gc2",
            MethodId::Gs2 => "gs2",
            MethodId::Gc3 => "gc3",
            MethodId::Gs3 => "gs3",
            MethodId::Pdfc2 => "pdfc2",
            MethodId::Pdfs2 => "pdfs2",
            MethodId::Pdfc3 => "pdfc3",
            MethodId::Pdfs3 => "pdfs3",
        }
    }

    /// Position in the catalog; also the seed-path component for the
    /// method's PRNG stream.
    pub fn canonical_index(self) -> usize {
        self as usize
    }

    /// The embedding a method consumes, if any: (classical?, dimension).
    fn embedding_kind(self) -> Option<(bool, usize)> {
        match self {
            MethodId::Kc2 | MethodId::Gc2 | MethodId::Pdfc2 => Some((true, 2)),
            MethodId::Kc3 | MethodId::Gc3 | MethodId::Pdfc3 => Some((true, 3)),
            MethodId::Ks2 | MethodId::Gs2 | MethodId::Pdfs2 => Some((false, 2)),
            MethodId::Ks3 | MethodId::Gs3 | MethodId::Pdfs3 => Some((false, 3)),
            _ => None,
        }
    }

    /// Whether the method needs the Jaccard distance matrix.
    fn needs_distances(self) -> bool {
        !matches!(self, MethodId::Kmodes | MethodId::Lca)
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .iter()
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown method id '{s}'")))
    }
}

/// Tuning knobs for all fitters. Field defaults match the study settings;
/// JSON overrides may set any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub kmeans_n_starts: usize,
    pub kmeans_iter_max: usize,
    pub kmodes_n_starts: usize,
    pub lca_n_starts: usize,
    pub lca_tol: f64,
    pub lca_max_iter: usize,
    pub gmm_n_starts: usize,
    pub gmm_tol: f64,
    pub gmm_max_iter: usize,
    pub gmm_reg: f64,
    pub smacof_eps: f64,
    pub smacof_max_iter: usize,
    pub bandwidth_scale: f64,
    /// Record wall-clock per method run. Off by default so result files are
    /// byte-reproducible.
    pub record_timings: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            kmeans_n_starts: 100,
            kmeans_iter_max: 100,
            kmodes_n_starts: 10,
            lca_n_starts: 10,
            lca_tol: 1e-8,
            lca_max_iter: 1000,
            gmm_n_starts: 5,
            gmm_tol: 1e-8,
            gmm_max_iter: 500,
            gmm_reg: 1e-6,
            smacof_eps: 1e-6,
            smacof_max_iter: 500,
            bandwidth_scale: 1.0,
            record_timings: false,
        }
    }
}

/// One grid cell result. `ari` is NaN and `error` is set when the method
/// failed; `seed` echoes the master seed of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub scenario_id: u32,
    pub replicate: u32,
    pub method: MethodId,
    pub ari: f64,
    pub n_clusters_found: usize,
    pub runtime_ms: f64,
    pub seed: u64,
    pub error: Option<String>,
}

/// Shared per-dataset intermediates. Embeddings are computed once and reused
/// by every method that consumes them; a failed embedding carries its error
/// to each dependent method instead of aborting the grid.
struct Prepared {
    dist: Option<DistanceMatrix>,
    classical: [Option<std::result::Result<Embedding, String>>; 2],
    ratio: [Option<std::result::Result<Embedding, String>>; 2],
}

impl Prepared {
    fn compute(dataset: &GeneratedDataset, methods: &[MethodId], cfg: &HarnessConfig) -> Result<Self> {
        let needs_dist = methods.iter().any(|m| m.needs_distances());
        let mut need_classical = [false; 2];
        let mut need_ratio = [false; 2];
        for m in methods {
            if let Some((classical, dim)) = m.embedding_kind() {
                if classical {
                    need_classical[dim - 2] = true;
                } else {
                    need_ratio[dim - 2] = true;
                }
            }
        }
        let any_embedding =
            need_classical.iter().chain(&need_ratio).any(|&b| b);

        let dist = if needs_dist || any_embedding {
            Some(distance_matrix(&dataset.data, Measure::Jaccard)?)
        } else {
            None
        };

        let mut classical: [Option<std::result::Result<Embedding, String>>; 2] = [None, None];
        let mut ratio: [Option<std::result::Result<Embedding, String>>; 2] = [None, None];
        if any_embedding {
            let d = dist.as_ref().expect("distances computed above");
            // One 3-D solve serves both dimensions: axes are ordered by
            // eigenvalue, so the 2-D configuration is its first two columns.
            let c3 = classical_mds(d, 3).map_err(|e| e.to_string());
            let c2 = c3.as_ref().map_err(Clone::clone).and_then(|e| {
                e.truncated(2).map_err(|err| err.to_string())
            });
            if need_ratio[0] {
                ratio[0] = Some(c2.clone().and_then(|init| {
                    ratio_smacof(d, 2, cfg.smacof_max_iter, cfg.smacof_eps, &init)
                        .map_err(|e| e.to_string())
                }));
            }
            if need_ratio[1] {
                ratio[1] = Some(c3.clone().and_then(|init| {
                    ratio_smacof(d, 3, cfg.smacof_max_iter, cfg.smacof_eps, &init)
                        .map_err(|e| e.to_string())
                }));
            }
            if need_classical[0] {
                classical[0] = Some(c2);
            }
            if need_classical[1] {
                classical[1] = Some(c3);
            }
        }
        Ok(Self { dist, classical, ratio })
    }

    fn embedding(&self, classical: bool, dim: usize) -> Result<&Embedding> {
        let slot = if classical { &self.classical[dim - 2] } else { &self.ratio[dim - 2] };
        match slot.as_ref().expect("embedding prepared for every selected method") {
            Ok(e) => Ok(e),
            Err(msg) => Err(Error::Numerical(msg.clone())),
        }
    }

    fn distances(&self) -> &DistanceMatrix {
        self.dist.as_ref().expect("distances prepared for every selected method")
    }
}

fn dispatch(
    method: MethodId,
    dataset: &GeneratedDataset,
    prepared: &Prepared,
    k: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    cfg: &HarnessConfig,
) -> Result<ClusterLabels> {
    match method {
        MethodId::Single => cut(&linkage(prepared.distances(), Linkage::Single)?, k),
        MethodId::Complete => cut(&linkage(prepared.distances(), Linkage::Complete)?, k),
        MethodId::Average => cut(&linkage(prepared.distances(), Linkage::Average)?, k),
        MethodId::Pam => Ok(pam(prepared.distances(), k)?.labels),
        MethodId::Kmodes => Ok(kmodes(&dataset.data, k, rng, cfg.kmodes_n_starts)?.labels),
        MethodId::Lca => {
            Ok(fit_lca(&dataset.data, k, rng, cfg.lca_n_starts, cfg.lca_tol, cfg.lca_max_iter)?.1)
        }
        MethodId::Kc2 | MethodId::Ks2 | MethodId::Kc3 | MethodId::Ks3 => {
            let (classical, dim) = method.embedding_kind().expect("k-means method");
            let emb = prepared.embedding(classical, dim)?;
            Ok(kmeans(emb, k, rng, cfg.kmeans_n_starts, cfg.kmeans_iter_max)?.labels)
        }
        MethodId::Gc2 | MethodId::Gs2 | MethodId::Gc3 | MethodId::Gs3 => {
            let (classical, dim) = method.embedding_kind().expect("mixture method");
            let emb = prepared.embedding(classical, dim)?;
            Ok(fit_gmm(emb, k, rng, cfg.gmm_n_starts, cfg.gmm_tol, cfg.gmm_max_iter, cfg.gmm_reg)?
                .1)
        }
        MethodId::Pdfc2 | MethodId::Pdfs2 | MethodId::Pdfc3 | MethodId::Pdfs3 => {
            let (classical, dim) = method.embedding_kind().expect("density method");
            let emb = prepared.embedding(classical, dim)?;
            density_cluster(emb, cfg.bandwidth_scale)
        }
    }
}

/// Runs one method on one dataset. `k` is passed to every clusterer except
/// the density family, which determines its own cluster count. Returns the
/// labels and the number of clusters actually found.
pub fn run_method(
    method: MethodId,
    dataset: &GeneratedDataset,
    k: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    cfg: &HarnessConfig,
) -> Result<(ClusterLabels, usize)> {
    let prepared = Prepared::compute(dataset, &[method], cfg)?;
    let labels = dispatch(method, dataset, &prepared, k, rng, cfg)?;
    let found = label_count(&labels);
    Ok((labels, found))
}

/// FNV-1a over the matrix contents. Guards the invariant that every method
/// in a cell scores against the very same dataset.
fn matrix_hash(data: &crate::data::BinaryMatrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for i in 0..data.n_rows() {
        for &bit in data.row(i) {
            h ^= bit as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn scenario_by_id(scenario_set: &[ScenarioConfig], id: u32) -> Result<&ScenarioConfig> {
    scenario_set
        .iter()
        .find(|c| c.scenario_id == id)
        .ok_or_else(|| Error::InvalidInput(format!("unknown scenario id {id}")))
}

/// One (scenario, replicate) cell: generate the dataset from its stream and
/// run every selected method from its own stream.
fn run_cell(
    config: &ScenarioConfig,
    replicate: u32,
    methods: &[MethodId],
    master_seed: u64,
    cfg: &HarnessConfig,
) -> Result<Vec<BenchmarkRecord>> {
    let scenario = config.scenario_id;
    let mut dataset_rng =
        derive_rng(master_seed, &[DATASET_STREAM, scenario as u64, replicate as u64]);
    let dataset = generate_dataset(config, &mut dataset_rng)?;
    let k = config.n_clusters();
    let prepared = Prepared::compute(&dataset, methods, cfg)?;
    let dataset_hash = matrix_hash(&dataset.data);

    let mut records = Vec::with_capacity(methods.len());
    for &method in methods {
        assert_eq!(
            matrix_hash(&dataset.data),
            dataset_hash,
            "dataset must be identical for every method in a cell"
        );
        let mut rng = derive_rng(
            master_seed,
            &[
                METHOD_STREAM,
                scenario as u64,
                replicate as u64,
                method.canonical_index() as u64,
            ],
        );
        let start = std::time::Instant::now();
        let outcome = dispatch(method, &dataset, &prepared, k, &mut rng, cfg);
        let runtime_ms =
            if cfg.record_timings { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let record = match outcome {
            Ok(labels) => BenchmarkRecord {
                scenario_id: scenario,
                replicate,
                method,
                ari: adjusted_rand_index(&labels, &dataset.species_labels)?,
                n_clusters_found: label_count(&labels),
                runtime_ms,
                seed: master_seed,
                error: None,
            },
            Err(e) => BenchmarkRecord {
                scenario_id: scenario,
                replicate,
                method,
                ari: f64::NAN,
                n_clusters_found: 0,
                runtime_ms,
                seed: master_seed,
                error: Some(e.to_string()),
            },
        };
        records.push(record);
    }
    Ok(records)
}

/// Runs the scenario x replicate x method grid and returns records sorted by
/// (scenario, replicate, method). Method failures become NaN rows with an
/// error tag; dataset generation failures abort because they mean the
/// configuration is broken.
///
/// `threads` = 1 runs serially; anything else uses a thread pool of that
/// size over the (scenario, replicate) cells, with identical output.
pub fn run_benchmark(
    scenarios: &[u32],
    replicates: u32,
    methods: &[MethodId],
    master_seed: u64,
    cfg: &HarnessConfig,
    scenario_set: &[ScenarioConfig],
    threads: usize,
) -> Result<Vec<BenchmarkRecord>> {
    if scenarios.is_empty() || methods.is_empty() || replicates == 0 {
        return Err(Error::InvalidInput("empty benchmark selection".into()));
    }
    let mut sorted_methods = methods.to_vec();
    sorted_methods.sort_by_key(|m| m.canonical_index());
    sorted_methods.dedup();

    let mut cells = Vec::new();
    for &scenario in scenarios {
        let config = scenario_by_id(scenario_set, scenario)?;
        for rep in 1..=replicates {
            cells.push((config, rep));
        }
    }

    let cell_results: Vec<Result<Vec<BenchmarkRecord>>> = if threads == 1 {
        cells
            .iter()
            .map(|(config, rep)| run_cell(config, *rep, &sorted_methods, master_seed, cfg))
            .collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| {
            cells
                .par_iter()
                .map(|(config, rep)| run_cell(config, *rep, &sorted_methods, master_seed, cfg))
                .collect()
        })
    };

    let mut records = Vec::with_capacity(cells.len() * sorted_methods.len());
    for result in cell_results {
        records.extend(result?);
    }
    records.sort_by_key(|r| (r.scenario_id, r.replicate, r.method.canonical_index()));
    Ok(records)
}

/// Grouping keys for [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Method,
    Omega,
    UsPresence,
    Sizes,
    Areas,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Method => "method",
            GroupKey::Omega => "omega",
            GroupKey::UsPresence => "us_presence",
            GroupKey::Sizes => "sizes",
            GroupKey::Areas => "areas",
        }
    }
}

impl std::str::FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "method" => Ok(GroupKey::Method),
            "omega" => Ok(GroupKey::Omega),
            "us_presence" => Ok(GroupKey::UsPresence),
            "sizes" => Ok(GroupKey::Sizes),
            "areas" => Ok(GroupKey::Areas),
            _ => Err(Error::InvalidInput(format!("unknown grouping key '{s}'"))),
        }
    }
}

/// One output row of [`summarize`]: the group values (one per requested
/// key, in key order), the ARI mean and standard deviation over non-failed
/// records, their count, and the number of failed records in the group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: Vec<String>,
    pub mean_ari: f64,
    pub sd_ari: f64,
    pub count: usize,
    pub n_failed: usize,
}

fn all_equal(values: &[usize]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Groups records by the requested keys and reports per-group ARI mean,
/// sample standard deviation (n-1 denominator, 0 for singleton groups), and
/// counts. Failed (NaN) records are excluded from the statistics and
/// reported in `n_failed`. Rows come out in deterministic order: method by
/// catalog position, other keys by value.
///
/// # Errors
///
/// Empty input, or a record whose scenario id is missing from the set.
pub fn summarize(
    records: &[BenchmarkRecord],
    group_by: &[GroupKey],
    scenario_set: &[ScenarioConfig],
) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to summarize".into()));
    }
    if group_by.is_empty() {
        return Err(Error::InvalidInput("no grouping keys".into()));
    }

    struct Acc {
        display: Vec<String>,
        values: Vec<f64>,
        n_failed: usize,
    }
    let mut groups: std::collections::BTreeMap<Vec<String>, Acc> = std::collections::BTreeMap::new();
    for record in records {
        let config = scenario_by_id(scenario_set, record.scenario_id)?;
        let mut sort_key = Vec::with_capacity(group_by.len());
        let mut display = Vec::with_capacity(group_by.len());
        for key in group_by {
            let (sortable, shown) = match key {
                GroupKey::Method => (
                    format!("{:02}", record.method.canonical_index()),
                    record.method.name().to_string(),
                ),
                GroupKey::Omega => {
                    let s = format!("{}", config.omega);
                    (s.clone(), s)
                }
                GroupKey::UsPresence => {
                    let s = if config.has_universal_spreaders { "yes" } else { "no" };
                    (s.to_string(), s.to_string())
                }
                GroupKey::Sizes => {
                    let proper = &config.cluster_sizes[..config.n_proper_clusters];
                    let s = if all_equal(proper) { "equal" } else { "unequal" };
                    (s.to_string(), s.to_string())
                }
                GroupKey::Areas => {
                    let s = if all_equal(&config.area_sizes) { "equal" } else { "unequal" };
                    (s.to_string(), s.to_string())
                }
            };
            sort_key.push(sortable);
            display.push(shown);
        }
        let acc = groups.entry(sort_key).or_insert(Acc { display, values: Vec::new(), n_failed: 0 });
        if record.ari.is_nan() {
            acc.n_failed += 1;
        } else {
            acc.values.push(record.ari);
        }
    }

    let rows = groups
        .into_values()
        .map(|acc| {
            let count = acc.values.len();
            let mean = if count > 0 {
                acc.values.iter().sum::<f64>() / count as f64
            } else {
                f64::NAN
            };
            let sd = if count > 1 {
                let ss: f64 = acc.values.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (count as f64 - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow { group: acc.display, mean_ari: mean, sd_ari: sd, count, n_failed: acc.n_failed }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::scenario_table;
    use crate::data::BinaryMatrix;

    fn light_config() -> HarnessConfig {
        HarnessConfig {
            kmeans_n_starts: 5,
            kmeans_iter_max: 30,
            kmodes_n_starts: 3,
            lca_n_starts: 2,
            lca_tol: 1e-6,
            lca_max_iter: 200,
            gmm_n_starts: 2,
            gmm_tol: 1e-6,
            gmm_max_iter: 100,
            ..HarnessConfig::default()
        }
    }

    #[test]
    fn method_ids_roundtrip_and_keep_catalog_order() {
        let names: Vec<&str> = MethodId::ALL.iter().map(|m| m.name()).collect();
        assert_eq!(
            names,
            vec![
                "single", "complete", "average", "pam", "kmodes", "lca", "kc2", "ks2", "kc3",
                "ks3", "gc2", "gs2", "gc3", "gs3", "pdfc2", "pdfs2", "pdfc3", "pdfs3"
            ]
        );
        for (i, m) in MethodId::ALL.iter().enumerate() {
            assert_eq!(m.canonical_index(), i);
            assert_eq!(m.name().parse::<MethodId>().unwrap(), *m);
        }
        assert!("kc4".parse::<MethodId>().is_err());
    }

    fn duplicate_block_dataset() -> GeneratedDataset {
        let a = vec![1u8, 1, 1, 1, 0, 0, 0, 0];
        let b = vec![0u8, 0, 0, 0, 1, 1, 1, 1];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..10 {
            rows.push(a.clone());
            labels.push(1);
        }
        for _ in 0..10 {
            rows.push(b.clone());
            labels.push(2);
        }
        let data = BinaryMatrix::from_rows(rows).unwrap();
        let ranges = (0..20).map(|i| data.row_sum(i)).collect();
        GeneratedDataset {
            data,
            species_labels: labels,
            cell_labels: vec![1, 1, 1, 1, 2, 2, 2, 2],
            ranges,
        }
    }

    #[test]
    fn lca_on_duplicate_blocks_is_perfect() {
        let ds = duplicate_block_dataset();
        let mut rng = derive_rng(1, &[METHOD_STREAM, 0, 0, 0]);
        let cfg = light_config();
        let (labels, found) = run_method(MethodId::Lca, &ds, 2, &mut rng, &cfg).unwrap();
        assert_eq!(found, 2);
        assert_eq!(adjusted_rand_index(&labels, &ds.species_labels).unwrap(), 1.0);
    }

    #[test]
    fn kc3_matches_the_manual_pipeline() {
        let ds = duplicate_block_dataset();
        let cfg = light_config();
        let mut rng_a = derive_rng(7, &[METHOD_STREAM, 1, 1, 8]);
        let (labels, _) = run_method(MethodId::Kc3, &ds, 2, &mut rng_a, &cfg).unwrap();

        let d = distance_matrix(&ds.data, Measure::Jaccard).unwrap();
        let emb = classical_mds(&d, 3).unwrap();
        let mut rng_b = derive_rng(7, &[METHOD_STREAM, 1, 1, 8]);
        let manual =
            kmeans(&emb, 2, &mut rng_b, cfg.kmeans_n_starts, cfg.kmeans_iter_max).unwrap();
        assert_eq!(labels, manual.labels);
    }

    #[test]
    fn density_methods_report_their_own_cluster_count() {
        let ds = duplicate_block_dataset();
        let cfg = light_config();
        let mut rng = derive_rng(3, &[METHOD_STREAM, 1, 1, 14]);
        // K passed as 4 on purpose: the density family must ignore it
        let (labels, found) = run_method(MethodId::Pdfc2, &ds, 4, &mut rng, &cfg).unwrap();
        assert_eq!(found, label_count(&labels));
        assert_eq!(found, 2, "two exact point masses form two cores");
    }

    #[test]
    fn single_scenario_single_method_yields_one_record() {
        let records = run_benchmark(
            &[1],
            1,
            &[MethodId::Lca],
            5,
            &light_config(),
            &scenario_table(),
            1,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.scenario_id, 1);
        assert_eq!(r.replicate, 1);
        assert_eq!(r.method, MethodId::Lca);
        assert_eq!(r.seed, 5);
        assert!(r.error.is_none());
        assert!((-1.0..=1.0).contains(&r.ari));
    }

    #[test]
    fn grid_shape_order_and_determinism() {
        let methods = [MethodId::Single, MethodId::Pam];
        let cfg = light_config();
        let table = scenario_table();
        let a = run_benchmark(&[1, 2], 2, &methods, 11, &cfg, &table, 1).unwrap();
        assert_eq!(a.len(), 2 * 2 * 2);
        let keys: Vec<(u32, u32, usize)> =
            a.iter().map(|r| (r.scenario_id, r.replicate, r.method.canonical_index())).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);

        let b = run_benchmark(&[1, 2], 2, &methods, 11, &cfg, &table, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_equals_serial() {
        let methods = [MethodId::Single, MethodId::Complete];
        let cfg = light_config();
        let table = scenario_table();
        let serial = run_benchmark(&[1, 4], 2, &methods, 3, &cfg, &table, 1).unwrap();
        let parallel = run_benchmark(&[1, 4], 2, &methods, 3, &cfg, &table, 3).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn method_subset_does_not_shift_streams() {
        let cfg = light_config();
        let table = scenario_table();
        let full = run_benchmark(
            &[1],
            1,
            &[MethodId::Pam, MethodId::Kmodes, MethodId::Lca],
            9,
            &cfg,
            &table,
            1,
        )
        .unwrap();
        let only_lca = run_benchmark(&[1], 1, &[MethodId::Lca], 9, &cfg, &table, 1).unwrap();
        let lca_in_full = full.iter().find(|r| r.method == MethodId::Lca).unwrap();
        assert_eq!(lca_in_full, &only_lca[0]);
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let err = run_benchmark(
            &[99],
            1,
            &[MethodId::Single],
            1,
            &light_config(),
            &scenario_table(),
            1,
        );
        assert!(err.is_err());
    }

    fn record(scenario: u32, method: MethodId, ari: f64) -> BenchmarkRecord {
        BenchmarkRecord {
            scenario_id: scenario,
            replicate: 1,
            method,
            ari,
            n_clusters_found: 3,
            runtime_ms: 0.0,
            seed: 0,
            error: if ari.is_nan() { Some("boom".into()) } else { None },
        }
    }

    #[test]
    fn summarize_single_record() {
        let rows = summarize(
            &[record(1, MethodId::Pam, 0.8)],
            &[GroupKey::Method],
            &scenario_table(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].group, vec!["pam".to_string()]);
        assert_eq!(rows[0].mean_ari, 0.8);
        assert_eq!(rows[0].sd_ari, 0.0);
        assert_eq!(rows[0].count, 1);
        assert_eq!(rows[0].n_failed, 0);
    }

    #[test]
    fn summarize_means_failures_and_order() {
        let records = vec![
            record(1, MethodId::Pam, 0.2),
            record(2, MethodId::Pam, 0.4),
            record(1, MethodId::Single, f64::NAN),
            record(1, MethodId::Single, 0.5),
        ];
        let rows = summarize(&records, &[GroupKey::Method], &scenario_table()).unwrap();
        assert_eq!(rows.len(), 2);
        // catalog order: single before pam
        assert_eq!(rows[0].group, vec!["single".to_string()]);
        assert_eq!(rows[0].count, 1);
        assert_eq!(rows[0].n_failed, 1);
        assert_eq!(rows[1].group, vec!["pam".to_string()]);
        assert!((rows[1].mean_ari - 0.3).abs() < 1e-15);
        let expect_sd = (2.0f64 * 0.1 * 0.1).sqrt();
        assert!((rows[1].sd_ari - expect_sd).abs() < 1e-15);
    }

    #[test]
    fn summarize_by_scenario_facets() {
        // scenarios 1 (0.05, no us, =, =) and 24 (0.40, us, unequal, unequal)
        let records = vec![record(1, MethodId::Pam, 0.9), record(24, MethodId::Pam, 0.1)];
        let rows = summarize(
            &records,
            &[GroupKey::Omega, GroupKey::UsPresence, GroupKey::Sizes, GroupKey::Areas],
            &scenario_table(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].group, vec!["0.05", "no", "equal", "equal"]);
        assert_eq!(rows[1].group, vec!["0.4", "yes", "unequal", "unequal"]);
    }

    #[test]
    fn group_keys_parse() {
        for key in ["method", "omega", "us_presence", "sizes", "areas"] {
            key.parse::<GroupKey>().unwrap();
        }
        assert!("scenario".parse::<GroupKey>().is_err());
    }
}

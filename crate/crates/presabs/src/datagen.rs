//! Synthetic presence-absence data with planted cluster structure.
//!
//! Species come in two kinds. A proper species belongs to one cluster: its
//! range r is uniform on 1..=|area| and its presences are drawn cell by cell
//! with inside-area cells favored over outside cells by the odds ratio
//! 1/omega, re-solving the per-cell probabilities after every draw. A
//! universal spreader has no area preference: its range is uniform on
//! {max area, ..., m} and its presences are a uniformly random subset.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{BinaryMatrix, ClusterLabels};
use crate::error::{Error, Result};

/// Everything needed to generate one scenario's datasets.
///
/// `cluster_sizes` lists the proper clusters first and, when
/// `has_universal_spreaders` is set, the spreader group last.
/// `area_sizes` covers proper clusters only; areas are laid out as
/// contiguous cell blocks in cluster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_id: u32,
    pub omega: f64,
    pub n_proper_clusters: usize,
    pub has_universal_spreaders: bool,
    pub cluster_sizes: Vec<usize>,
    pub area_sizes: Vec<usize>,
    pub m: usize,
}

impl ScenarioConfig {
    /// Total species count.
    pub fn n_species(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }

    /// Ground-truth cluster count (spreaders count as a cluster).
    pub fn n_clusters(&self) -> usize {
        self.n_proper_clusters + usize::from(self.has_universal_spreaders)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidInput(format!("omega {} outside (0, 1]", self.omega)));
        }
        if self.m == 0 {
            return Err(Error::InvalidInput("m must be positive".into()));
        }
        if self.n_proper_clusters == 0 {
            return Err(Error::InvalidInput("need at least one proper cluster".into()));
        }
        let expected = self.n_proper_clusters + usize::from(self.has_universal_spreaders);
        if self.cluster_sizes.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} cluster sizes, got {}",
                self.cluster_sizes.len()
            )));
        }
        if self.area_sizes.len() != self.n_proper_clusters {
            return Err(Error::InvalidInput(format!(
                "expected {} area sizes, got {}",
                self.n_proper_clusters,
                self.area_sizes.len()
            )));
        }
        if self.cluster_sizes.iter().any(|&s| s == 0) || self.area_sizes.iter().any(|&a| a == 0) {
            return Err(Error::InvalidInput("cluster and area sizes must be positive".into()));
        }
        if self.area_sizes.iter().sum::<usize>() > self.m {
            return Err(Error::InvalidInput(format!(
                "area sizes sum to {} but only {} cells exist",
                self.area_sizes.iter().sum::<usize>(),
                self.m
            )));
        }
        Ok(())
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub data: BinaryMatrix,
    /// True cluster per species; spreaders carry label n_proper_clusters + 1.
    pub species_labels: ClusterLabels,
    /// Cluster-specific area per cell, 0 for cells outside every area.
    pub cell_labels: Vec<usize>,
    /// Row sums (the drawn ranges).
    pub ranges: Vec<usize>,
}

/// Per-cell presence probabilities for one draw step, given the number of
/// still-undrawn cells inside and outside the species' area:
/// p_in = 1 / (n_in_free + omega * n_out_free) and p_out = omega * p_in, so
/// that n_in_free * p_in + n_out_free * p_out = 1 exactly. The closed form
/// also covers the one-sided cases (the probability for an empty side is
/// never applied to a cell).
///
/// # Errors
///
/// omega outside (0, 1], or no free cells at all.
pub fn solve_step_probabilities(
    omega: f64,
    n_in_free: usize,
    n_out_free: usize,
) -> Result<(f64, f64)> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::InvalidInput(format!("omega {omega} outside (0, 1]")));
    }
    if n_in_free == 0 && n_out_free == 0 {
        return Err(Error::NoCellsRemaining);
    }
    let p_in = 1.0 / (n_in_free as f64 + omega * n_out_free as f64);
    Ok((p_in, omega * p_in))
}

/// Draws an index from a categorical distribution by inverse CDF.
///
/// # Errors
///
/// Negative entries or total mass off 1 by more than 1e-9.
pub fn draw_categorical(p: &[f64], rng: &mut impl Rng) -> Result<usize> {
    let mut sum = 0.0;
    for &v in p {
        if v < 0.0 {
            return Err(Error::InvalidInput(format!("negative probability {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("probabilities sum to {sum}")));
    }
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (j, &v) in p.iter().enumerate() {
        cum += v;
        if u < cum {
            return Ok(j);
        }
    }
    // Round-off pushed the total a hair under u: fall back to the last cell
    // carrying any mass.
    Ok(p.iter().rposition(|&v| v > 0.0).expect("mass sums to 1"))
}

/// Generates one proper species of the given cluster as a binary row over
/// the cells. The range is uniform on 1..=|area|; each presence is drawn
/// from the step-probability vector over undrawn cells, re-solved after
/// every draw.
///
/// # Errors
///
/// Cluster without cells, or omega outside (0, 1].
pub fn generate_proper_species(
    cluster_id: usize,
    cell_labels: &[usize],
    omega: f64,
    rng: &mut impl Rng,
) -> Result<Vec<u8>> {
    let m = cell_labels.len();
    let area_size = cell_labels.iter().filter(|&&c| c == cluster_id).count();
    if area_size == 0 {
        return Err(Error::InvalidInput(format!("cluster {cluster_id} has no cells")));
    }
    let r = rng.random_range(1..=area_size);

    let mut row = vec![0u8; m];
    let mut p = vec![0.0f64; m];
    let mut in_free = area_size;
    let mut out_free = m - area_size;
    for _ in 0..r {
        let (p_in, p_out) = solve_step_probabilities(omega, in_free, out_free)?;
        for j in 0..m {
            p[j] = if row[j] == 1 {
                0.0
            } else if cell_labels[j] == cluster_id {
                p_in
            } else {
                p_out
            };
        }
        let j = draw_categorical(&p, rng)?;
        debug_assert_eq!(row[j], 0, "cell drawn twice");
        row[j] = 1;
        if cell_labels[j] == cluster_id {
            in_free -= 1;
        } else {
            out_free -= 1;
        }
    }
    Ok(row)
}

/// Generates one universal spreader: range uniform on {max_area, ..., m},
/// presences a uniformly random subset of that size (sequential uniform
/// draws without replacement).
///
/// # Errors
///
/// max_area outside 1..=m.
pub fn generate_universal_spreader(
    m: usize,
    max_area: usize,
    rng: &mut impl Rng,
) -> Result<Vec<u8>> {
    if max_area < 1 || max_area > m {
        return Err(Error::InvalidInput(format!("max area {max_area} outside 1..={m}")));
    }
    let r = rng.random_range(max_area..=m);
    let mut idx: Vec<usize> = (0..m).collect();
    let mut row = vec![0u8; m];
    for t in 0..r {
        let pick = rng.random_range(t..m);
        idx.swap(t, pick);
        row[idx[t]] = 1;
    }
    Ok(row)
}

/// Contiguous area layout: the first area_sizes[0] cells belong to cluster
/// 1, the next block to cluster 2, and so on; leftover cells get 0.
fn build_cell_labels(config: &ScenarioConfig) -> Vec<usize> {
    let mut labels = vec![0usize; config.m];
    let mut start = 0;
    for (c, &a) in config.area_sizes.iter().enumerate() {
        for label in labels.iter_mut().skip(start).take(a) {
            *label = c + 1;
        }
        start += a;
    }
    labels
}

/// Generates a full dataset for the scenario: proper clusters in label
/// order, then the spreader group. Pure in (config, rng state).
///
/// # Errors
///
/// Invalid config, or propagated from the per-species generators.
pub fn generate_dataset(config: &ScenarioConfig, rng: &mut impl Rng) -> Result<GeneratedDataset> {
    config.validate()?;
    let cell_labels = build_cell_labels(config);
    let n = config.n_species();
    let mut rows = Vec::with_capacity(n);
    let mut species_labels = Vec::with_capacity(n);

    for (c, &count) in config.cluster_sizes.iter().take(config.n_proper_clusters).enumerate() {
        for _ in 0..count {
            rows.push(generate_proper_species(c + 1, &cell_labels, config.omega, rng)?);
            species_labels.push(c + 1);
        }
    }
    if config.has_universal_spreaders {
        let max_area = *config.area_sizes.iter().max().expect("validated non-empty");
        let count = *config.cluster_sizes.last().expect("validated length");
        for _ in 0..count {
            rows.push(generate_universal_spreader(config.m, max_area, rng)?);
            species_labels.push(config.n_proper_clusters + 1);
        }
    }

    let data = BinaryMatrix::from_rows(rows)?;
    let ranges = (0..n).map(|i| data.row_sum(i)).collect();
    Ok(GeneratedDataset { data, species_labels, cell_labels, ranges })
}

/// The canonical 24-scenario table: eight blocks of three overlap levels.
/// Block order: spreaders (no/yes) innermost, then cluster sizes
/// (equal/unequal), then area sizes (equal/unequal); omega cycles
/// 0.05, 0.20, 0.40 within each block. Unequal sizes pair with unequal
/// areas positionally, ascending with ascending.
pub fn scenario_table() -> Vec<ScenarioConfig> {
    const OMEGAS: [f64; 3] = [0.05, 0.20, 0.40];
    // (has_us, equal_sizes, equal_areas) per block of three
    const BLOCKS: [(bool, bool, bool); 8] = [
        (false, true, true),
        (true, true, true),
        (false, false, true),
        (true, false, true),
        (false, true, false),
        (true, true, false),
        (false, false, false),
        (true, false, false),
    ];
    let mut table = Vec::with_capacity(24);
    for (b, &(has_us, equal_sizes, equal_areas)) in BLOCKS.iter().enumerate() {
        for (t, &omega) in OMEGAS.iter().enumerate() {
            let mut cluster_sizes =
                if equal_sizes { vec![100, 100, 100] } else { vec![50, 100, 150] };
            if has_us {
                cluster_sizes.push(100);
            }
            let area_sizes = if equal_areas { vec![20, 20, 20] } else { vec![10, 20, 30] };
            table.push(ScenarioConfig {
                scenario_id: (3 * b + t + 1) as u32,
                omega,
                n_proper_clusters: 3,
                has_universal_spreaders: has_us,
                cluster_sizes,
                area_sizes,
                m: 60,
            });
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_probabilities_match_hand_solutions() {
        let (p_in, p_out) = solve_step_probabilities(0.05, 20, 40).unwrap();
        assert!((p_in - 1.0 / 22.0).abs() < 1e-15);
        assert!((p_out - 1.0 / 440.0).abs() < 1e-15);

        let (p_in, p_out) = solve_step_probabilities(1.0, 10, 30).unwrap();
        assert!((p_in - 0.025).abs() < 1e-15);
        assert!((p_out - 0.025).abs() < 1e-15);

        let (_, p_out) = solve_step_probabilities(0.4, 0, 5).unwrap();
        assert!((p_out - 0.2).abs() < 1e-15);
    }

    #[test]
    fn step_probabilities_satisfy_the_two_identities() {
        for &omega in &[0.05, 0.2, 0.4, 1.0, 1e-12] {
            for n_in in 0..8usize {
                for n_out in 0..8usize {
                    if n_in + n_out == 0 {
                        continue;
                    }
                    let (p_in, p_out) = solve_step_probabilities(omega, n_in, n_out).unwrap();
                    assert_eq!(p_out, omega * p_in);
                    let total = n_in as f64 * p_in + n_out as f64 * p_out;
                    assert!((total - 1.0).abs() < 1e-12, "mass {total}");
                }
            }
        }
    }

    #[test]
    fn step_probabilities_reject_bad_input() {
        assert!(matches!(
            solve_step_probabilities(0.5, 0, 0),
            Err(Error::NoCellsRemaining)
        ));
        assert!(solve_step_probabilities(0.0, 5, 5).is_err());
        assert!(solve_step_probabilities(1.5, 5, 5).is_err());
    }

    #[test]
    fn categorical_point_mass_and_zero_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(draw_categorical(&[1.0, 0.0, 0.0], &mut rng).unwrap(), 0);
        }
        for _ in 0..10_000 {
            let j = draw_categorical(&[0.5, 0.0, 0.5], &mut rng).unwrap();
            assert_ne!(j, 1, "zero-mass cell drawn");
        }
    }

    #[test]
    fn categorical_frequencies_follow_the_law_of_large_numbers() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hits = 0usize;
        let trials = 100_000;
        for _ in 0..trials {
            if draw_categorical(&[0.5, 0.5], &mut rng).unwrap() == 0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn categorical_rejects_bad_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_categorical(&[0.5, -0.1, 0.6], &mut rng).is_err());
        assert!(draw_categorical(&[0.5, 0.4], &mut rng).is_err());
    }

    #[test]
    fn singleton_area_species_hit_the_closed_form_rate() {
        // area of one cell in m=60 at omega=0.05: the single step puts the
        // presence inside with probability 1/(1 + 59 * 0.05) = 1/3.95
        let mut cell_labels = vec![0usize; 60];
        cell_labels[0] = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut inside = 0usize;
        let trials = 10_000;
        for _ in 0..trials {
            let row = generate_proper_species(1, &cell_labels, 0.05, &mut rng).unwrap();
            assert_eq!(row.iter().map(|&v| v as usize).sum::<usize>(), 1, "range forced to 1");
            inside += row[0] as usize;
        }
        let freq = inside as f64 / trials as f64;
        assert!((freq - 1.0 / 3.95).abs() < 0.013, "freq = {freq}");
    }

    #[test]
    fn vanishing_omega_keeps_presences_inside_the_area() {
        let mut cell_labels = vec![0usize; 60];
        for label in cell_labels.iter_mut().take(20) {
            *label = 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let row = generate_proper_species(1, &cell_labels, 1e-12, &mut rng).unwrap();
            for (j, &v) in row.iter().enumerate() {
                if v == 1 {
                    assert_eq!(cell_labels[j], 1, "presence escaped the area");
                }
            }
            let r = row.iter().map(|&v| v as usize).sum::<usize>();
            assert!((1..=20).contains(&r));
        }
    }

    #[test]
    fn proper_species_needs_a_nonempty_area() {
        let cell_labels = vec![0usize; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_proper_species(1, &cell_labels, 0.2, &mut rng).is_err());
    }

    #[test]
    fn spreader_with_full_area_is_all_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let row = generate_universal_spreader(12, 12, &mut rng).unwrap();
        assert_eq!(row, vec![1u8; 12]);
    }

    #[test]
    fn spreader_range_mean_matches_uniform_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let trials = 10_000;
        let mut total = 0usize;
        for _ in 0..trials {
            let row = generate_universal_spreader(60, 30, &mut rng).unwrap();
            let r = row.iter().map(|&v| v as usize).sum::<usize>();
            assert!(r >= 30);
            total += r;
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 45.0).abs() < 0.27, "mean = {mean}");
    }

    #[test]
    fn spreader_rejects_bad_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_universal_spreader(10, 11, &mut rng).is_err());
        assert!(generate_universal_spreader(10, 0, &mut rng).is_err());
    }

    #[test]
    fn scenario_table_matches_the_design() {
        let table = scenario_table();
        assert_eq!(table.len(), 24);
        assert_eq!(table.iter().filter(|c| c.has_universal_spreaders).count(), 12);
        for (i, c) in table.iter().enumerate() {
            assert_eq!(c.scenario_id as usize, i + 1);
            c.validate().unwrap();
            assert_eq!(c.m, 60);
            assert_eq!(c.n_proper_clusters, 3);
            assert_eq!(c.area_sizes.iter().sum::<usize>(), 60);
            let expected_n = if c.has_universal_spreaders { 400 } else { 300 };
            assert_eq!(c.n_species(), expected_n);
            let omega = [0.05, 0.20, 0.40][i % 3];
            assert!((c.omega - omega).abs() < 1e-15);
        }
        // spot checks against the published table
        assert!(!table[2].has_universal_spreaders);
        assert_eq!(table[2].cluster_sizes, vec![100, 100, 100]);
        assert_eq!(table[2].area_sizes, vec![20, 20, 20]);
        assert!((table[2].omega - 0.40).abs() < 1e-15);

        assert!(table[15].has_universal_spreaders);
        assert_eq!(table[15].cluster_sizes, vec![100, 100, 100, 100]);
        assert_eq!(table[15].area_sizes, vec![10, 20, 30]);
        assert!((table[15].omega - 0.05).abs() < 1e-15);

        assert!(table[21].has_universal_spreaders);
        assert_eq!(table[21].cluster_sizes, vec![50, 100, 150, 100]);
        assert_eq!(table[21].area_sizes, vec![10, 20, 30]);
    }

    #[test]
    fn generated_dataset_respects_all_invariants() {
        let table = scenario_table();
        for &id in &[1usize, 22] {
            let config = &table[id - 1];
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let ds = generate_dataset(config, &mut rng).unwrap();
            assert_eq!(ds.data.n_rows(), config.n_species());
            assert_eq!(ds.data.n_cols(), 60);
            assert_eq!(ds.species_labels.len(), config.n_species());
            assert_eq!(ds.cell_labels.len(), 60);

            // area blocks are contiguous with the configured sizes
            let mut expect = Vec::new();
            for (c, &a) in config.area_sizes.iter().enumerate() {
                expect.extend(std::iter::repeat_n(c + 1, a));
            }
            assert_eq!(ds.cell_labels, expect);

            let max_area = *config.area_sizes.iter().max().unwrap();
            for i in 0..ds.data.n_rows() {
                let r = ds.data.row_sum(i);
                assert_eq!(r, ds.ranges[i]);
                assert!(r >= 1);
                let label = ds.species_labels[i];
                if label <= config.n_proper_clusters {
                    assert!(r <= config.area_sizes[label - 1]);
                } else {
                    assert!(r >= max_area);
                }
            }

            // label block structure: cluster by cluster, spreaders last
            let mut counts = vec![0usize; config.n_clusters()];
            for &l in &ds.species_labels {
                counts[l - 1] += 1;
            }
            assert_eq!(&counts, &config.cluster_sizes);
            let mut sorted = ds.species_labels.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, ds.species_labels, "species grouped by cluster");
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let config = &scenario_table()[9];
        let a = generate_dataset(config, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = generate_dataset(config, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(config, &mut ChaCha8Rng::seed_from_u64(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation_rejects_inconsistency() {
        let mut config = scenario_table()[0].clone();
        config.area_sizes = vec![30, 30, 30];
        assert!(config.validate().is_err(), "areas exceed the cell count");
        let mut config = scenario_table()[0].clone();
        config.omega = 0.0;
        assert!(config.validate().is_err());
        let mut config = scenario_table()[3].clone();
        config.cluster_sizes = vec![100, 100, 100];
        assert!(config.validate().is_err(), "spreader block missing its size entry");
    }
}

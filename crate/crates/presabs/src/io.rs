//! File formats: dataset and results CSVs, intermediate dumps for external
//! plotting, fitted-model JSON, and the run configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkRecord, GroupKey, HarnessConfig, MethodId, SummaryRow};
use crate::datagen::{scenario_table, GeneratedDataset, ScenarioConfig};
use crate::dist::DistanceMatrix;
use crate::error::{Error, Result};
use crate::hcluster::Dendrogram;
use crate::mds::Embedding;

pub const RESULTS_HEADER: [&str; 8] = [
    "scenario",
    "replicate",
    "method",
    "ari",
    "n_clusters_found",
    "runtime_ms",
    "seed",
    "error",
];

/// NaN-safe float formatting; Rust's Display roundtrips all other values.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes `scenario_<id>_data.csv` (species by cells, with truth labels) and
/// the `scenario_<id>_cells.csv` sidecar mapping cells to cluster areas
/// (0 = outside every area). Returns the two paths.
pub fn write_dataset_csv(
    dataset: &GeneratedDataset,
    scenario_id: u32,
    dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let m = dataset.data.n_cols();
    let data_path = dir.join(format!("scenario_{scenario_id}_data.csv"));
    let mut w = csv::Writer::from_path(&data_path)?;
    let mut header = vec!["species_id".to_string(), "true_cluster".to_string()];
    header.extend((1..=m).map(|j| format!("cell_{j}")));
    w.write_record(&header)?;
    for i in 0..dataset.data.n_rows() {
        let mut record = vec![(i + 1).to_string(), dataset.species_labels[i].to_string()];
        record.extend(dataset.data.row(i).iter().map(|b| b.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;

    let cells_path = dir.join(format!("scenario_{scenario_id}_cells.csv"));
    let mut w = csv::Writer::from_path(&cells_path)?;
    w.write_record(["cell_id", "area_cluster"])?;
    for (j, &label) in dataset.cell_labels.iter().enumerate() {
        w.write_record([(j + 1).to_string(), label.to_string()])?;
    }
    w.flush()?;
    Ok((data_path, cells_path))
}

/// Writes benchmark records with the fixed results header. NaN ARIs are
/// written as `NaN`, absent errors as the empty string, so output bytes are
/// a pure function of the records.
pub fn write_results_csv(records: &[BenchmarkRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            r.scenario_id.to_string(),
            r.replicate.to_string(),
            r.method.name().to_string(),
            fmt_f64(r.ari),
            r.n_clusters_found.to_string(),
            fmt_f64(r.runtime_ms),
            r.seed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results CSV written by [`write_results_csv`], validating the
/// header exactly.
pub fn read_results_csv(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "unexpected results header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let field = |record: &csv::StringRecord, idx: usize| -> Result<String> {
        record
            .get(idx)
            .map(str::to_string)
            .ok_or_else(|| Error::InvalidInput("short results row".into()))
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let parse_err =
            |what: &str, v: &str| Error::InvalidInput(format!("bad {what} value '{v}'"));
        let scenario_id =
            field(&row, 0)?.parse().map_err(|_| parse_err("scenario", &field(&row, 0).unwrap()))?;
        let replicate =
            field(&row, 1)?.parse().map_err(|_| parse_err("replicate", &field(&row, 1).unwrap()))?;
        let method: MethodId = field(&row, 2)?.parse()?;
        let ari = field(&row, 3)?.parse().map_err(|_| parse_err("ari", &field(&row, 3).unwrap()))?;
        let n_clusters_found = field(&row, 4)?
            .parse()
            .map_err(|_| parse_err("n_clusters_found", &field(&row, 4).unwrap()))?;
        let runtime_ms = field(&row, 5)?
            .parse()
            .map_err(|_| parse_err("runtime_ms", &field(&row, 5).unwrap()))?;
        let seed = field(&row, 6)?.parse().map_err(|_| parse_err("seed", &field(&row, 6).unwrap()))?;
        let error_field = field(&row, 7)?;
        records.push(BenchmarkRecord {
            scenario_id,
            replicate,
            method,
            ari,
            n_clusters_found,
            runtime_ms,
            seed,
            error: if error_field.is_empty() { None } else { Some(error_field) },
        });
    }
    Ok(records)
}

/// Writes summary rows as CSV: one column per grouping key, then the
/// statistics columns.
pub fn write_summary_csv<W: std::io::Write>(
    rows: &[SummaryRow],
    keys: &[GroupKey],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = keys.iter().map(|k| k.name().to_string()).collect();
    header.extend(["mean_ari", "sd_ari", "count", "n_failed"].map(String::from));
    w.write_record(&header)?;
    for row in rows {
        let mut record = row.group.clone();
        record.push(fmt_f64(row.mean_ari));
        record.push(fmt_f64(row.sd_ari));
        record.push(row.count.to_string());
        record.push(row.n_failed.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Coordinate dump (`point_id,x1..xp`) for external plotting.
pub fn write_embedding_csv(emb: &Embedding, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["point_id".to_string()];
    header.extend((1..=emb.p()).map(|d| format!("x{d}")));
    w.write_record(&header)?;
    for i in 0..emb.n() {
        let mut record = vec![(i + 1).to_string()];
        record.extend(emb.point(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Merge-table dump (`step,left,right,height`) of an agglomeration history.
pub fn write_dendrogram_csv(dend: &Dendrogram, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "left", "right", "height"])?;
    for (s, merge) in dend.merges().iter().enumerate() {
        w.write_record([
            (s + 1).to_string(),
            merge.left.to_string(),
            merge.right.to_string(),
            fmt_f64(merge.height),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Upper-triangle dump (`i,j,distance`, 1-based ids) for debugging.
pub fn write_distance_csv(d: &DistanceMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "distance"])?;
    for i in 0..d.n() {
        for j in (i + 1)..d.n() {
            w.write_record([(i + 1).to_string(), (j + 1).to_string(), fmt_f64(d.get(i, j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON dump of any serializable fitted model.
pub fn write_model_json<T: Serialize>(model: &T, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, model)?;
    use std::io::Write as _;
    writeln!(writer)?;
    Ok(())
}

/// Run configuration file: harness knobs plus an optional replacement
/// scenario set. Absent fields fall back to the built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub harness: HarnessConfig,
    pub scenarios: Option<Vec<ScenarioConfig>>,
}

impl RunConfig {
    /// The scenario set to run against: the file's, or the built-in table.
    pub fn scenario_set(&self) -> Vec<ScenarioConfig> {
        self.scenarios.clone().unwrap_or_else(scenario_table)
    }
}

/// Loads and validates a [`RunConfig`] from a JSON file.
pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let file = std::fs::File::open(path)?;
    let config: RunConfig = serde_json::from_reader(std::io::BufReader::new(file))?;
    if let Some(scenarios) = &config.scenarios {
        for s in scenarios {
            s.validate()?;
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::MethodId;
    use crate::datagen::generate_dataset;
    use crate::dist::{distance_matrix, Measure};
    use crate::hcluster::{linkage, Linkage};
    use crate::mds::classical_mds;
    use crate::rng::derive_rng;

    fn tiny_scenario() -> ScenarioConfig {
        ScenarioConfig {
            scenario_id: 1,
            omega: 0.5,
            n_proper_clusters: 2,
            has_universal_spreaders: false,
            cluster_sizes: vec![3, 4],
            area_sizes: vec![2, 3],
            m: 6,
        }
    }

    fn tiny_dataset() -> GeneratedDataset {
        let mut rng = derive_rng(7, &[1, 1, 1]);
        generate_dataset(&tiny_scenario(), &mut rng).unwrap()
    }

    #[test]
    fn dataset_files_have_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset();
        let (data_path, cells_path) = write_dataset_csv(&ds, 1, dir.path()).unwrap();

        let text = std::fs::read_to_string(&data_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 7);
        assert_eq!(lines[0], "species_id,true_cluster,cell_1,cell_2,cell_3,cell_4,cell_5,cell_6");
        assert!(lines[1].starts_with("1,1,"));
        assert!(lines[7].starts_with("7,2,"));

        let text = std::fs::read_to_string(&cells_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[0], "cell_id,area_cluster");
        assert_eq!(lines[1], "1,1");
        assert_eq!(lines[4], "4,2");
        // the last cell lies outside both areas
        assert_eq!(lines[6], "6,0");
    }

    fn sample_records() -> Vec<BenchmarkRecord> {
        vec![
            BenchmarkRecord {
                scenario_id: 1,
                replicate: 1,
                method: MethodId::Pam,
                ari: 0.875,
                n_clusters_found: 3,
                runtime_ms: 0.0,
                seed: 42,
                error: None,
            },
            BenchmarkRecord {
                scenario_id: 22,
                replicate: 2,
                method: MethodId::Gs3,
                ari: f64::NAN,
                n_clusters_found: 0,
                runtime_ms: 0.0,
                seed: 42,
                error: Some("every mixture start collapsed".into()),
            },
        ]
    }

    #[test]
    fn results_roundtrip_including_failures() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let records = sample_records();
        write_results_csv(&records, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "scenario,replicate,method,ari,n_clusters_found,runtime_ms,seed,error"
        );

        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], records[0]);
        assert_eq!(back[1].method, MethodId::Gs3);
        assert!(back[1].ari.is_nan());
        assert_eq!(back[1].error.as_deref(), Some("every mixture start collapsed"));
    }

    #[test]
    fn results_writes_are_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let records = sample_records();
        write_results_csv(&records, &a).unwrap();
        write_results_csv(&records, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn bad_results_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        std::fs::write(&path, "scenario,method,ari\n1,pam,0.5\n").unwrap();
        assert!(read_results_csv(&path).is_err());
    }

    #[test]
    fn summary_csv_layout() {
        let rows = vec![SummaryRow {
            group: vec!["pam".into(), "0.05".into()],
            mean_ari: 0.75,
            sd_ari: 0.1,
            count: 20,
            n_failed: 0,
        }];
        let mut buf = Vec::new();
        write_summary_csv(&rows, &[GroupKey::Method, GroupKey::Omega], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "method,omega,mean_ari,sd_ari,count,n_failed\npam,0.05,0.75,0.1,20,0\n");
    }

    #[test]
    fn embedding_and_dendrogram_and_distance_dumps() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset();
        let d = distance_matrix(&ds.data, Measure::Jaccard).unwrap();

        let emb = classical_mds(&d, 2).unwrap();
        let path = dir.path().join("emb.csv");
        write_embedding_csv(&emb, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "point_id,x1,x2");
        assert_eq!(text.lines().count(), 1 + 7);

        let dend = linkage(&d, Linkage::Average).unwrap();
        let path = dir.path().join("dend.csv");
        write_dendrogram_csv(&dend, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "step,left,right,height");
        assert_eq!(text.lines().count(), 1 + 6);

        let path = dir.path().join("dist.csv");
        write_distance_csv(&d, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "i,j,distance");
        assert_eq!(text.lines().count(), 1 + 7 * 6 / 2);
    }

    #[test]
    fn model_json_has_mixture_fields() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset();
        let mut rng = derive_rng(3, &[2, 0, 0, 5]);
        let (model, _) = crate::mcluster::fit_lca(&ds.data, 2, &mut rng, 2, 1e-6, 200).unwrap();
        let path = dir.path().join("model.json");
        write_model_json(&model, &path).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(value.get("pi").is_some());
        assert!(value.get("theta").is_some());
        assert!(value.get("loglik").is_some());
    }

    #[test]
    fn run_config_defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");

        std::fs::write(&path, "{}").unwrap();
        let config = read_run_config(&path).unwrap();
        assert_eq!(config.harness, HarnessConfig::default());
        assert_eq!(config.scenario_set().len(), 24);

        let custom = serde_json::json!({
            "harness": {"lca_n_starts": 3, "bandwidth_scale": 0.5},
            "scenarios": [tiny_scenario()],
        });
        std::fs::write(&path, custom.to_string()).unwrap();
        let config = read_run_config(&path).unwrap();
        assert_eq!(config.harness.lca_n_starts, 3);
        assert_eq!(config.harness.bandwidth_scale, 0.5);
        assert_eq!(config.harness.gmm_n_starts, HarnessConfig::default().gmm_n_starts);
        assert_eq!(config.scenario_set().len(), 1);

        let bad = serde_json::json!({
            "scenarios": [{
                "scenario_id": 1, "omega": 0.0, "n_proper_clusters": 1,
                "has_universal_spreaders": false, "cluster_sizes": [5],
                "area_sizes": [3], "m": 6,
            }],
        });
        std::fs::write(&path, bad.to_string()).unwrap();
        assert!(read_run_config(&path).is_err());
    }
}

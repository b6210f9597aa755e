//! Command-line front end for the presence-absence clustering benchmark.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use presabs::bench::{run_benchmark, summarize, GroupKey, MethodId};
use presabs::datagen::generate_dataset;
use presabs::dist::{distance_matrix, Measure};
use presabs::eval::adjusted_rand_index;
use presabs::hcluster::{best_cut_ari, cut, linkage, Linkage};
use presabs::io::{
    read_results_csv, read_run_config, write_dataset_csv, write_results_csv, write_summary_csv,
    RunConfig,
};
use presabs::rng::{derive_rng, DATASET_STREAM};

#[derive(Parser)]
#[command(
    name = "presabs",
    about = "Synthetic presence-absence clustering benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate datasets with ground truth as CSV files.
    Generate {
        /// Scenario id (e.g. 7) or "all".
        #[arg(long)]
        scenario: String,
        /// Master seed; datasets match `run` replicate 1 for the same seed.
        #[arg(long)]
        seed: u64,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON config providing a custom scenario set.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the scenario x replicate x method grid and write results.csv.
    Run {
        /// Scenario selection: comma list and ranges (e.g. "1,5,7-9") or "all".
        #[arg(long)]
        scenarios: String,
        /// Replicates per scenario.
        #[arg(long)]
        reps: u32,
        /// Comma-separated method ids (e.g. "pam,kc3,lca") or "all".
        #[arg(long)]
        methods: String,
        /// Master seed for the whole grid.
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads over (scenario, replicate) cells; 1 = serial.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Optional JSON config with harness knobs and/or a scenario set.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Record wall-clock per method run (makes output non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Aggregate a results CSV into grouped ARI means.
    Summarize {
        /// Path to a results.csv produced by `run`.
        results: PathBuf,
        /// Comma-separated grouping keys:
        /// method, omega, us_presence, sizes, areas.
        #[arg(long, default_value = "method")]
        by: String,
        /// Output CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional JSON config providing a custom scenario set.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare fixed-K dendrogram cuts against the best cut per linkage.
    CutAnalysis {
        /// Scenario id.
        #[arg(long)]
        scenario: u32,
        /// Master seed; the dataset matches `run` replicate 1.
        #[arg(long)]
        seed: u64,
        /// Optional JSON config providing a custom scenario set.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parses "all", single ids, comma lists, and inclusive ranges ("2-5").
fn parse_scenario_selection(arg: &str, available: &[u32]) -> Result<Vec<u32>> {
    if arg == "all" {
        return Ok(available.to_vec());
    }
    let mut ids = Vec::new();
    for part in arg.split(',') {
        let part = part.trim();
        if part.is_empty() {
            bail!("empty scenario selector in '{arg}'");
        }
        if let Some((lo, hi)) = part.split_once('-') {
            let lo: u32 = lo.trim().parse().with_context(|| format!("bad range start '{part}'"))?;
            let hi: u32 = hi.trim().parse().with_context(|| format!("bad range end '{part}'"))?;
            if lo > hi {
                bail!("descending range '{part}'");
            }
            ids.extend(lo..=hi);
        } else {
            ids.push(part.parse().with_context(|| format!("bad scenario id '{part}'"))?);
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

fn parse_methods(arg: &str) -> Result<Vec<MethodId>> {
    if arg == "all" {
        return Ok(MethodId::ALL.to_vec());
    }
    arg.split(',')
        .map(|part| part.trim().parse::<MethodId>().map_err(anyhow::Error::from))
        .collect()
}

fn parse_group_keys(arg: &str) -> Result<Vec<GroupKey>> {
    arg.split(',')
        .map(|part| part.trim().parse::<GroupKey>().map_err(anyhow::Error::from))
        .collect()
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            read_run_config(p).with_context(|| format!("reading config {}", p.display()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { scenario, seed, out, config } => {
            let config = load_config(&config)?;
            let scenario_set = config.scenario_set();
            let available: Vec<u32> = scenario_set.iter().map(|c| c.scenario_id).collect();
            let ids = parse_scenario_selection(&scenario, &available)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            for id in ids {
                let cfg = scenario_set
                    .iter()
                    .find(|c| c.scenario_id == id)
                    .with_context(|| format!("unknown scenario id {id}"))?;
                let mut rng = derive_rng(seed, &[DATASET_STREAM, id as u64, 1]);
                let dataset = generate_dataset(cfg, &mut rng)?;
                let (data_path, cells_path) = write_dataset_csv(&dataset, id, &out)?;
                println!("wrote {} and {}", data_path.display(), cells_path.display());
            }
        }
        Command::Run { scenarios, reps, methods, seed, out, threads, config, timings } => {
            let config = load_config(&config)?;
            let scenario_set = config.scenario_set();
            let available: Vec<u32> = scenario_set.iter().map(|c| c.scenario_id).collect();
            let ids = parse_scenario_selection(&scenarios, &available)?;
            let methods = parse_methods(&methods)?;
            let mut harness = config.harness;
            if timings {
                harness.record_timings = true;
            }
            let records =
                run_benchmark(&ids, reps, &methods, seed, &harness, &scenario_set, threads)?;
            let n_failed = records.iter().filter(|r| r.error.is_some()).count();
            write_results_csv(&records, &out)?;
            println!("wrote {} records to {} ({} failed)", records.len(), out.display(), n_failed);
        }
        Command::Summarize { results, by, out, config } => {
            let config = load_config(&config)?;
            let scenario_set = config.scenario_set();
            let keys = parse_group_keys(&by)?;
            let records = read_results_csv(&results)
                .with_context(|| format!("reading {}", results.display()))?;
            let rows = summarize(&records, &keys, &scenario_set)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_summary_csv(&rows, &keys, file)?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => write_summary_csv(&rows, &keys, std::io::stdout().lock())?,
            }
        }
        Command::CutAnalysis { scenario, seed, config } => {
            let config = load_config(&config)?;
            let scenario_set = config.scenario_set();
            let cfg = scenario_set
                .iter()
                .find(|c| c.scenario_id == scenario)
                .with_context(|| format!("unknown scenario id {scenario}"))?;
            let mut rng = derive_rng(seed, &[DATASET_STREAM, scenario as u64, 1]);
            let dataset = generate_dataset(cfg, &mut rng)?;
            let d = distance_matrix(&dataset.data, Measure::Jaccard)?;
            let k = cfg.n_clusters();
            println!("linkage,ari_at_k{k},best_ari,best_k");
            for method in [Linkage::Single, Linkage::Complete, Linkage::Average] {
                let dend = linkage(&d, method)?;
                let fixed = cut(&dend, k)?;
                let ari_fixed = adjusted_rand_index(&fixed, &dataset.species_labels)?;
                let (best_ari, best_k) = best_cut_ari(&dend, &dataset.species_labels)?;
                println!("{},{},{},{}", method.name(), ari_fixed, best_ari, best_k);
            }
        }
    }
    Ok(())
}

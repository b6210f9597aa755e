//! Clustering methods and synthetic benchmarks for binary presence-absence data.
//!
//! The crate simulates species-by-cell occurrence matrices with known cluster
//! structure and compares how well different clustering approaches recover the
//! planted clusters. It provides:
//!
//! - [`datagen`]: synthetic presence-absence generators with controlled
//!   cluster overlap, cluster-specific areas, and optional universal
//!   spreaders, plus the canonical 24-scenario table.
//! - [`dist`]: Jaccard and simple matching distances on binary rows.
//! - [`mds`]: classical (Torgerson) scaling and ratio MDS by stress
//!   majorization, used to make the data accessible to Euclidean methods.
//! - [`hcluster`]: single, complete, and average linkage with dendrogram
//!   cutting and an optimal-cut search.
//! - [`pcluster`]: PAM on distances, K-modes on raw binary data, K-means on
//!   embeddings.
//! - [`mcluster`]: latent class analysis (Bernoulli mixture EM) and Gaussian
//!   mixture EM with constrained covariance families selected by BIC.
//! - [`dcluster`]: kernel density estimation and level-set clustering on
//!   embeddings.
//! - [`eval`]: Adjusted Rand Index scoring.
//! - [`bench`]: the scenario x replicate x method benchmark harness with
//!   deterministic seeding and CSV summaries.
//!
//! Everything is deterministic given a master seed: random streams are derived
//! per (scenario, replicate, method) with [`rng::derive_rng`], so results are
//! reproducible across machines and thread schedules.

pub mod bench;
pub mod data;
pub mod datagen;
pub mod dcluster;
pub mod dist;
pub mod error;
pub mod eval;
pub mod hcluster;
pub mod io;
pub mod linalg;
pub mod mcluster;
pub mod mds;
pub mod pcluster;
pub mod rng;

pub use bench::{BenchmarkRecord, HarnessConfig, MethodId};
pub use data::{BinaryMatrix, ClusterLabels};
pub use datagen::{GeneratedDataset, ScenarioConfig};
pub use dist::DistanceMatrix;
pub use error::{Error, Result};
pub use eval::adjusted_rand_index;
pub use hcluster::Dendrogram;
pub use mds::Embedding;

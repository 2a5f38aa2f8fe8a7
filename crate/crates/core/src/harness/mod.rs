//! Experiment orchestration: privacy/utility sweeps over SBM simulations or
//! loaded graphs, with deterministic seeding and CSV/JSON output.
//!
//! # Seeding
//!
//! Records are enumerated outer-to-inner over `n`, `d`, `alpha`, `delta`, then
//! replicate. Record `i` (0-based) carries the sub-seed `base_seed + i`
//! (wrapping), which seeds the ChaCha8 stream that draws its noise matrix.
//! Simulated graphs are shared by every record of the same replicate and
//! size: replicate `r` at `n` vertices is drawn from the ChaCha8 generator
//! seeded with `base_seed + r` on stream `2^32 + n`, so graph and noise
//! streams never coincide. Loaded graphs are fixed and only the noise is
//! resampled.

mod config;
mod output;
mod sweep;

pub use config::{
    parse_float_list, parse_usize_list, ConfigFile, DataSource, ExperimentConfig, ExperimentKind, ListSpec,
    OutputFormat,
};
pub use output::{
    emit_results, format_sig9, read_csv, read_embedding_csv, read_json, write_csv, write_embedding_csv, write_json,
    CSV_HEADER,
};
pub use sweep::{
    best_dimensions, classify_embedding, embed_once, graph_rng, noise_rng, run_alpha_tradeoff, run_dim_sweep,
    run_experiment, run_n_sweep, run_privacy_grid, DimensionSummary, RecordStatus, SweepRecord,
};

use thiserror::Error;

use crate::classify::ClassifyError;
use crate::dp::DpError;
use crate::graph::GraphError;
use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Parse(String),
}

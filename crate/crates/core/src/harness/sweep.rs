use std::borrow::Cow;
use std::collections::HashMap;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, ExperimentKind};
use super::HarnessError;
use crate::classify::{loocv_error, ErrorReport, EvalDataset};
use crate::dp::{calibrate_noise, dp_ase, sample_symmetric_noise, PrivacyBudget};
use crate::graph::{load_labeled_graph, sample_sbm, AdjacencyMatrix, LabeledGraph};
use crate::linalg::{ase, procrustes_align, Embedding, LinalgError};

/// Offset separating graph streams from noise streams.
const GRAPH_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    CalibrationError,
    DimensionError,
    EigenError,
    EvalError,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::CalibrationError => "calibration_error",
            RecordStatus::DimensionError => "dimension_error",
            RecordStatus::EigenError => "eigen_error",
            RecordStatus::EvalError => "eval_error",
        }
    }

    fn of_linalg(err: &LinalgError) -> Self {
        match err {
            LinalgError::Dimension { .. } => RecordStatus::DimensionError,
            _ => RecordStatus::EigenError,
        }
    }
}

/// One sweep cell. Metric fields are `None` when the cell failed before producing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub experiment: String,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub delta: f64,
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
    pub error_dp: Option<f64>,
    pub error_ase: Option<f64>,
    pub fnorm: Option<f64>,
    pub fnorm_per_vertex: Option<f64>,
    pub status: RecordStatus,
}

/// Generator for replicate `replicate` of a simulated `n`-vertex graph.
pub fn graph_rng(base_seed: u64, replicate: usize, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(replicate as u64));
    rng.set_stream(GRAPH_STREAM_BASE + n as u64);
    rng
}

/// Generator for the noise matrix of the record with sub-seed `seed`.
pub fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Cell {
    index: usize,
    n: usize,
    d: usize,
    alpha: f64,
    delta: f64,
    replicate: usize,
}

/// Cells sharing a graph and its non-private embedding.
struct Group {
    n: usize,
    d: usize,
    replicate: usize,
    cells: Vec<Cell>,
}

fn plan(config: &ExperimentConfig, fixed_n: Option<usize>) -> Vec<Group> {
    let ns = match fixed_n {
        Some(n) => vec![n],
        None => config.ns.clone(),
    };
    let mut groups: Vec<Group> = Vec::new();
    let mut lookup: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut index = 0;
    for &n in &ns {
        for &d in &config.dims {
            for &alpha in &config.alphas {
                for &delta in &config.deltas {
                    for replicate in 0..config.replicates {
                        // A loaded graph is the same for every replicate.
                        let graph_rep = if fixed_n.is_some() { 0 } else { replicate };
                        let slot = *lookup.entry((n, d, graph_rep)).or_insert_with(|| {
                            groups.push(Group {
                                n,
                                d,
                                replicate: graph_rep,
                                cells: Vec::new(),
                            });
                            groups.len() - 1
                        });
                        groups[slot].cells.push(Cell {
                            index,
                            n,
                            d,
                            alpha,
                            delta,
                            replicate,
                        });
                        index += 1;
                    }
                }
            }
        }
    }
    groups
}

struct Baseline {
    embedding: Embedding<f64>,
    error: Option<f64>,
}

fn evaluate(embedding: Embedding<f64>, labels: &[usize], k: usize) -> Result<ErrorReport, HarnessError> {
    let data = EvalDataset::new(embedding, labels.to_vec())?;
    Ok(loocv_error(&data, k)?)
}

fn run_group(config: &ExperimentConfig, group: &Group, loaded: Option<&LabeledGraph>) -> Vec<(usize, SweepRecord)> {
    let graph: Cow<'_, LabeledGraph> = match (loaded, &config.source) {
        (Some(g), _) => Cow::Borrowed(g),
        (None, DataSource::Simulated(params)) => {
            let mut rng = graph_rng(config.base_seed, group.replicate, group.n);
            Cow::Owned(sample_sbm(params, group.n, &mut rng).expect("vertex counts validated"))
        }
        (None, DataSource::Files { .. }) => unreachable!("loaded graph is passed in"),
    };
    let dense = graph.adjacency().to_matrix::<f64>();
    let labels = graph.labels();

    let baseline = match ase(&dense, group.d) {
        Ok(embedding) => {
            let error = match evaluate(embedding.clone(), labels, config.k) {
                Ok(report) => Some(report.error_rate),
                Err(e) => {
                    log::warn!(
                        "n={} d={} replicate {}: ASE evaluation failed: {e}",
                        group.n,
                        group.d,
                        group.replicate
                    );
                    None
                }
            };
            Ok(Baseline { embedding, error })
        }
        Err(e) => {
            log::warn!(
                "n={} d={} replicate {}: ASE failed: {e}",
                group.n,
                group.d,
                group.replicate
            );
            Err(RecordStatus::of_linalg(&e))
        }
    };

    group
        .cells
        .par_iter()
        .map(|cell| {
            let seed = config.base_seed.wrapping_add(cell.index as u64);
            let mut record = SweepRecord {
                experiment: config.kind.as_str().to_string(),
                n: cell.n,
                d: cell.d,
                alpha: cell.alpha,
                delta: cell.delta,
                k: config.k,
                replicate: cell.replicate,
                seed,
                error_dp: None,
                error_ase: None,
                fnorm: None,
                fnorm_per_vertex: None,
                status: RecordStatus::Ok,
            };
            match &baseline {
                Ok(base) => {
                    record.error_ase = base.error;
                    record.status = private_cell(&dense, base, labels, config.k, cell, seed, &mut record);
                    if record.status == RecordStatus::Ok && base.error.is_none() {
                        record.status = RecordStatus::EvalError;
                    }
                }
                Err(status) => record.status = *status,
            }
            (cell.index, record)
        })
        .collect()
}

/// Fills the private metrics of `record`, returning the cell status.
fn private_cell(
    dense: &Array2<f64>,
    base: &Baseline,
    labels: &[usize],
    k: usize,
    cell: &Cell,
    seed: u64,
    record: &mut SweepRecord,
) -> RecordStatus {
    let context = || {
        format!(
            "n={} d={} alpha={} delta={} seed={seed}",
            cell.n, cell.d, cell.alpha, cell.delta
        )
    };
    let scale = match PrivacyBudget::new(cell.alpha, cell.delta).and_then(|b| calibrate_noise(cell.n, cell.d, &b)) {
        Ok(scale) => scale,
        Err(e) => {
            log::warn!("{}: {e}", context());
            return RecordStatus::CalibrationError;
        }
    };
    let mut rng = noise_rng(seed);
    let noise = match sample_symmetric_noise::<f64, _>(cell.n, &scale, &mut rng) {
        Ok(noise) => noise,
        Err(e) => {
            log::warn!("{}: {e}", context());
            return RecordStatus::CalibrationError;
        }
    };
    let perturbed = dense + noise.entries();
    drop(noise);
    let private = match ase(&perturbed, cell.d) {
        Ok(embedding) => embedding,
        Err(e) => {
            log::warn!("{}: private embedding failed: {e}", context());
            return RecordStatus::of_linalg(&e);
        }
    };
    drop(perturbed);
    match procrustes_align(private.positions(), base.embedding.positions()) {
        Ok(aligned) => {
            let fnorm = aligned.aligned_distance();
            record.fnorm = Some(fnorm);
            record.fnorm_per_vertex = Some(fnorm / (cell.n as f64).sqrt());
        }
        Err(e) => {
            log::warn!("{}: alignment failed: {e}", context());
            return RecordStatus::of_linalg(&e);
        }
    }
    match evaluate(private, labels, k) {
        Ok(report) => {
            record.error_dp = Some(report.error_rate);
            RecordStatus::Ok
        }
        Err(e) => {
            log::warn!("{}: evaluation failed: {e}", context());
            RecordStatus::EvalError
        }
    }
}

fn run(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    config.validate()?;
    let loaded = match &config.source {
        DataSource::Simulated(_) => None,
        DataSource::Files { edge_list, labels } => Some(load_labeled_graph(edge_list, labels)?),
    };
    let groups = plan(config, loaded.as_ref().map(|g| g.adjacency().n()));
    let mut indexed: Vec<(usize, SweepRecord)> = groups
        .par_iter()
        .flat_map_iter(|group| run_group(config, group, loaded.as_ref()))
        .collect();
    indexed.sort_by_key(|(index, _)| *index);
    Ok(indexed.into_iter().map(|(_, r)| r).collect())
}

fn require(ok: bool, msg: &str) -> Result<(), HarnessError> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Config(msg.to_string()))
    }
}

fn with_kind(config: &ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig { kind, ..config.clone() }
}

/// Error and embedding distance as the vertex count grows, on simulated graphs.
pub fn run_n_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    require(
        matches!(config.source, DataSource::Simulated(_)),
        "the n sweep needs SBM parameters",
    )?;
    require(
        config.alphas.len() == 1 && config.deltas.len() == 1,
        "the n sweep takes a single alpha and delta",
    )?;
    run(&with_kind(config, ExperimentKind::NSweep))
}

/// Full alpha x delta grid at one vertex count.
pub fn run_privacy_grid(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    require(
        matches!(config.source, DataSource::Files { .. }) || config.ns.len() == 1,
        "the privacy grid takes a single n",
    )?;
    require(config.dims.len() == 1, "the privacy grid takes a single dimension")?;
    run(&with_kind(config, ExperimentKind::PrivacyGrid))
}

/// Errors of both pipelines per embedding dimension. Dimensions above `n`
/// yield `dimension_error` rows.
pub fn run_dim_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    require(
        matches!(config.source, DataSource::Files { .. }) || config.ns.len() == 1,
        "the dimension sweep takes a single n",
    )?;
    run(&with_kind(config, ExperimentKind::DimSweep))
}

/// Private error across alpha at a fixed delta.
pub fn run_alpha_tradeoff(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    require(config.deltas.len() == 1, "the alpha tradeoff takes a single delta")?;
    require(
        matches!(config.source, DataSource::Files { .. }) || config.ns.len() == 1,
        "the alpha tradeoff takes a single n",
    )?;
    run(&with_kind(config, ExperimentKind::AlphaTradeoff))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    match config.kind {
        ExperimentKind::NSweep => run_n_sweep(config),
        ExperimentKind::PrivacyGrid => run_privacy_grid(config),
        ExperimentKind::DimSweep => run_dim_sweep(config),
        ExperimentKind::AlphaTradeoff => run_alpha_tradeoff(config),
    }
}

/// Mean-error minimisers of a dimension sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionSummary {
    pub best_d_ase: Option<(usize, f64)>,
    pub best_d_dp: Option<(usize, f64)>,
}

/// Dimension with the lowest mean error for each pipeline, averaging over
/// every ok record at that dimension. Ties go to the smaller dimension.
pub fn best_dimensions(records: &[SweepRecord]) -> DimensionSummary {
    let best = |metric: fn(&SweepRecord) -> Option<f64>| {
        let mut sums: Vec<(usize, f64, usize)> = Vec::new();
        for r in records {
            if let Some(v) = metric(r) {
                match sums.iter_mut().find(|(d, _, _)| *d == r.d) {
                    Some(entry) => {
                        entry.1 += v;
                        entry.2 += 1;
                    }
                    None => sums.push((r.d, v, 1)),
                }
            }
        }
        sums.into_iter()
            .map(|(d, s, c)| (d, s / c as f64))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    };
    DimensionSummary {
        best_d_ase: best(|r| r.error_ase),
        best_d_dp: best(|r| r.error_dp),
    }
}

/// One embedding of `adjacency`; private when a budget is given.
pub fn embed_once(
    adjacency: &AdjacencyMatrix,
    d: usize,
    budget: Option<&PrivacyBudget>,
    seed: u64,
) -> Result<Embedding<f64>, HarnessError> {
    match budget {
        Some(budget) => Ok(dp_ase(adjacency, d, budget, &mut noise_rng(seed))?),
        None => Ok(ase(&adjacency.to_matrix::<f64>(), d)?),
    }
}

pub fn classify_embedding(embedding: Embedding<f64>, labels: &[usize], k: usize) -> Result<ErrorReport, HarnessError> {
    evaluate(embedding, labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SbmParams;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(kind);
        cfg.ns = vec![60];
        cfg.dims = vec![2];
        cfg.alphas = vec![0.5];
        cfg.deltas = vec![0.01];
        cfg.replicates = 2;
        cfg.base_seed = 11;
        cfg
    }

    #[test]
    fn ordering_and_seeds() {
        let mut cfg = small(ExperimentKind::PrivacyGrid);
        cfg.alphas = vec![0.5, 1.0];
        cfg.deltas = vec![0.01, 0.1, 0.2];
        let records = run_privacy_grid(&cfg).unwrap();
        assert_eq!(records.len(), 2 * 3 * 2);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.seed, 11 + i as u64);
            assert_eq!(r.replicate, i % 2);
            assert_eq!(r.delta, cfg.deltas[(i / 2) % 3]);
            assert_eq!(r.alpha, cfg.alphas[i / 6]);
            assert_eq!(r.status, RecordStatus::Ok);
        }
    }

    #[test]
    fn baseline_shared_within_replicate() {
        let mut cfg = small(ExperimentKind::PrivacyGrid);
        cfg.alphas = vec![0.5, 5.0];
        let records = run_privacy_grid(&cfg).unwrap();
        for rep in 0..2 {
            let mine: Vec<_> = records.iter().filter(|r| r.replicate == rep).collect();
            assert!(mine.windows(2).all(|w| w[0].error_ase == w[1].error_ase));
        }
    }

    #[test]
    fn invalid_cells_are_isolated() {
        let mut cfg = small(ExperimentKind::PrivacyGrid);
        // d / delta <= 1 at delta = 2; delta = 1.5 is outside (0, 1).
        cfg.deltas = vec![0.01, 2.0, 1.5];
        cfg.replicates = 1;
        let records = run_privacy_grid(&cfg).unwrap();
        assert_eq!(records[0].status, RecordStatus::Ok);
        for r in &records[1..] {
            assert_eq!(r.status, RecordStatus::CalibrationError);
            assert!(r.error_dp.is_none() && r.fnorm.is_none());
            assert_eq!(r.error_ase, records[0].error_ase);
        }
    }

    #[test]
    fn oversized_dimension_rows() {
        let mut cfg = small(ExperimentKind::DimSweep);
        cfg.ns = vec![5];
        cfg.dims = vec![2, 6];
        cfg.k = 1;
        cfg.replicates = 1;
        let records = run_dim_sweep(&cfg).unwrap();
        assert_eq!(records[1].status, RecordStatus::DimensionError);
        assert!(records[1].error_ase.is_none());
    }

    #[test]
    fn too_many_neighbours_is_eval_error() {
        let mut cfg = small(ExperimentKind::NSweep);
        cfg.ns = vec![3];
        cfg.k = 3;
        cfg.replicates = 1;
        let records = run_n_sweep(&cfg).unwrap();
        assert_eq!(records[0].status, RecordStatus::EvalError);
    }

    #[test]
    fn kind_preconditions() {
        let mut cfg = small(ExperimentKind::NSweep);
        cfg.alphas = vec![0.1, 0.2];
        assert!(run_n_sweep(&cfg).is_err());
        let mut cfg = small(ExperimentKind::AlphaTradeoff);
        cfg.deltas = vec![0.1, 0.2];
        assert!(run_alpha_tradeoff(&cfg).is_err());
        let mut cfg = small(ExperimentKind::PrivacyGrid);
        cfg.ns = vec![50, 60];
        assert!(run_privacy_grid(&cfg).is_err());
    }

    #[test]
    fn degenerate_grid_matches_n_sweep() {
        let cfg = small(ExperimentKind::NSweep);
        let a = run_n_sweep(&cfg).unwrap();
        let b = run_privacy_grid(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(y.experiment, "privacy-grid");
            let y = SweepRecord {
                experiment: x.experiment.clone(),
                ..y.clone()
            };
            assert_eq!(*x, y);
        }
    }

    #[test]
    fn best_dimension_summary() {
        let mk = |d, e_ase, e_dp| SweepRecord {
            experiment: "dim-sweep".into(),
            n: 10,
            d,
            alpha: 0.1,
            delta: 0.01,
            k: 3,
            replicate: 0,
            seed: 0,
            error_dp: e_dp,
            error_ase: Some(e_ase),
            fnorm: None,
            fnorm_per_vertex: None,
            status: RecordStatus::Ok,
        };
        let records = vec![
            mk(2, 0.2, Some(0.3)),
            mk(2, 0.4, None),
            mk(5, 0.25, Some(0.1)),
            mk(8, 0.3, Some(0.1)),
        ];
        let s = best_dimensions(&records);
        assert_eq!(s.best_d_ase, Some((5, 0.25)));
        assert_eq!(s.best_d_dp, Some((5, 0.1)));
    }

    #[test]
    fn graph_streams_differ_by_size_and_replicate() {
        let params = SbmParams::two_block_reference();
        let a = sample_sbm(&params, 40, &mut graph_rng(0, 0, 40)).unwrap();
        let b = sample_sbm(&params, 40, &mut graph_rng(0, 1, 40)).unwrap();
        assert_ne!(a, b);
        let again = sample_sbm(&params, 40, &mut graph_rng(0, 0, 40)).unwrap();
        assert_eq!(a, again);
    }
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dpase_core::graph::{load_edge_list, load_labels};
use dpase_core::harness::{
    best_dimensions, classify_embedding, embed_once, emit_results, graph_rng, parse_float_list, parse_usize_list,
    read_embedding_csv, run_experiment, write_embedding_csv, ConfigFile, DataSource, ExperimentConfig, ExperimentKind,
    OutputFormat,
};
use dpase_core::{sample_sbm, PrivacyBudget, SbmParams};

#[derive(Parser)]
#[command(
    name = "dpase",
    version,
    about = "Differentially private spectral embedding experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vary the number of vertices on simulated SBM graphs.
    SimulateSweepN(SweepArgs),
    /// Cartesian alpha x delta grid at a fixed n.
    PrivacyGrid(SweepArgs),
    /// Vary the embedding dimension.
    DimSweep(SweepArgs),
    /// Vary alpha at a fixed delta.
    AlphaTradeoff(SweepArgs),
    /// Embed one graph and write the positions as CSV.
    Embed(EmbedArgs),
    /// Leave-one-out kNN error of an embedding file.
    Classify(ClassifyArgs),
}

#[derive(Args, Default)]
struct GraphArgs {
    /// Edge list of a real graph (requires --labels for sweeps).
    #[arg(long)]
    edge_list: Option<PathBuf>,
    /// One class id per vertex.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Number of SBM blocks.
    #[arg(long)]
    blocks: Option<usize>,
    /// Block probability matrix, row-major comma list.
    #[arg(long = "B", value_name = "B")]
    block_probs: Option<String>,
    /// Block prior, comma list.
    #[arg(long)]
    pi: Option<String>,
}

impl GraphArgs {
    fn sbm(&self) -> Result<Option<SbmParams>> {
        match (self.blocks, &self.block_probs, &self.pi) {
            (None, None, None) => Ok(None),
            (Some(k), Some(b), Some(pi)) => {
                let b = parse_float_list(b)?;
                let pi = parse_float_list(pi)?;
                Ok(Some(SbmParams::from_row_major(k, &b, pi)?))
            }
            _ => bail!("--blocks, --B and --pi must be given together"),
        }
    }

    fn source(&self) -> Result<Option<DataSource>> {
        let sbm = self.sbm()?;
        match (&self.edge_list, &self.labels, sbm) {
            (Some(_), _, Some(_)) => bail!("give either --edge-list or SBM parameters, not both"),
            (Some(edges), Some(labels), None) => Ok(Some(DataSource::Files {
                edge_list: edges.clone(),
                labels: labels.clone(),
            })),
            (Some(_), None, None) | (None, Some(_), _) => bail!("--edge-list and --labels must be given together"),
            (None, None, Some(params)) => Ok(Some(DataSource::Simulated(params))),
            (None, None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Vertex counts: list or start:step:end.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Neighbours used by the kNN classifier.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Plain spectral embedding without noise.
    #[arg(long)]
    no_privacy: bool,
    /// Vertices of the simulated graph.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Where to write the simulated graph's labels.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Embedding CSV, one row per vertex.
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sweep(kind: ExperimentKind, args: SweepArgs) -> Result<()> {
    let mut config = ExperimentConfig::defaults(kind);
    let mut out = None;
    let mut format = OutputFormat::Csv;
    if let Some(path) = &args.config {
        let file = ConfigFile::load(path).with_context(|| format!("reading config {}", path.display()))?;
        config.apply(&file)?;
        out = file.out.clone();
        format = file.format.unwrap_or(format);
    }
    if let Some(source) = args.graph.source()? {
        config.source = source;
    }
    if let Some(v) = &args.n {
        config.ns = parse_usize_list(v)?;
    }
    if let Some(v) = &args.dim {
        config.dims = parse_usize_list(v)?;
    }
    if let Some(v) = &args.alpha {
        config.alphas = parse_float_list(v)?;
    }
    if let Some(v) = &args.delta {
        config.deltas = parse_float_list(v)?;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    out = args.out.or(out);
    format = args.format.unwrap_or(format);

    let records = run_experiment(&config)?;
    let failed = records.iter().filter(|r| r.status.as_str() != "ok").count();
    log::info!("{} records, {failed} failed", records.len());
    if kind == ExperimentKind::DimSweep {
        let best = best_dimensions(&records);
        if let Some((d, e)) = best.best_d_ase {
            log::info!("lowest mean ASE error {e:.4} at d = {d}");
        }
        if let Some((d, e)) = best.best_d_dp {
            log::info!("lowest mean DP-ASE error {e:.4} at d = {d}");
        }
    }
    emit_results(&records, format, out.as_deref())?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn embed(args: EmbedArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(0);
    let adjacency = match &args.graph.edge_list {
        Some(path) => {
            if args.graph.sbm()?.is_some() {
                bail!("give either --edge-list or SBM parameters, not both");
            }
            let n_hint = match &args.graph.labels {
                Some(labels) => Some(
                    std::fs::read_to_string(labels)
                        .with_context(|| format!("reading {}", labels.display()))?
                        .lines()
                        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                        .count(),
                ),
                None => None,
            };
            load_edge_list(path, n_hint)?
        }
        None => {
            let params = args.graph.sbm()?.unwrap_or_else(SbmParams::two_block_reference);
            let graph = sample_sbm(&params, args.n, &mut graph_rng(seed, 0, args.n))?;
            if let Some(path) = &args.labels_out {
                let mut w = create(path)?;
                for l in graph.labels() {
                    writeln!(w, "{l}")?;
                }
                w.flush()?;
            }
            graph.into_parts().0
        }
    };
    let budget = if args.no_privacy {
        None
    } else {
        Some(PrivacyBudget::new(args.alpha, args.delta)?)
    };
    let embedding = embed_once(&adjacency, args.dim, budget.as_ref(), seed)?;
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_embedding_csv(&embedding, &mut w)?;
            w.flush()?;
        }
        None => write_embedding_csv(&embedding, std::io::stdout().lock())?,
    }
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let file = File::open(&args.embedding).with_context(|| format!("opening {}", args.embedding.display()))?;
    let embedding = read_embedding_csv(BufReader::new(file))?;
    let labels = load_labels(&args.labels, embedding.n())?;
    let report = classify_embedding(embedding, &labels, args.k)?;
    let text = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::SimulateSweepN(a) => sweep(ExperimentKind::NSweep, a),
        Command::PrivacyGrid(a) => sweep(ExperimentKind::PrivacyGrid, a),
        Command::DimSweep(a) => sweep(ExperimentKind::DimSweep, a),
        Command::AlphaTradeoff(a) => sweep(ExperimentKind::AlphaTradeoff, a),
        Command::Embed(a) => embed(a),
        Command::Classify(a) => classify(a),
    }
}

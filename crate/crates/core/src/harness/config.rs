use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::graph::SbmParams;

/// Relative slack for deciding that a range end point lies on the lattice.
const RANGE_LATTICE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NSweep,
    PrivacyGrid,
    DimSweep,
    AlphaTradeoff,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::NSweep => "n-sweep",
            ExperimentKind::PrivacyGrid => "privacy-grid",
            ExperimentKind::DimSweep => "dim-sweep",
            ExperimentKind::AlphaTradeoff => "alpha-tradeoff",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n-sweep" => Ok(ExperimentKind::NSweep),
            "privacy-grid" => Ok(ExperimentKind::PrivacyGrid),
            "dim-sweep" => Ok(ExperimentKind::DimSweep),
            "alpha-tradeoff" => Ok(ExperimentKind::AlphaTradeoff),
            other => Err(HarnessError::Parse(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Parse(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// A fresh SBM graph per replicate.
    Simulated(SbmParams),
    /// A fixed graph and its labels, read from disk.
    Files { edge_list: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: DataSource,
    /// Vertex counts; ignored for loaded graphs.
    pub ns: Vec<usize>,
    pub dims: Vec<usize>,
    pub alphas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub k: usize,
    pub replicates: usize,
    pub base_seed: u64,
}

impl ExperimentConfig {
    /// The parameter settings of each experiment family on the two-block
    /// reference model.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let range = |text: &str| parse_float_list(text).expect("built-in range is valid");
        let (ns, dims, alphas, deltas) = match kind {
            ExperimentKind::NSweep => (
                vec![50, 100, 500, 1000, 1500, 3000, 3100, 3500, 4000],
                vec![2],
                vec![0.1],
                vec![0.001],
            ),
            ExperimentKind::PrivacyGrid => (vec![300], vec![2], range("0.001:0.01:0.05"), range("0.0001:0.002:0.6")),
            ExperimentKind::DimSweep => (
                vec![1000],
                parse_usize_list("2:3:100").expect("built-in range is valid"),
                vec![0.1],
                vec![0.01],
            ),
            ExperimentKind::AlphaTradeoff => (vec![1000], vec![2], range("0.001:0.01:10"), vec![0.01]),
        };
        ExperimentConfig {
            kind,
            source: DataSource::Simulated(SbmParams::two_block_reference()),
            ns,
            dims,
            alphas,
            deltas,
            k: 3,
            replicates: 1,
            base_seed: 0,
        }
    }

    /// Overlays the fields present in a config file.
    pub fn apply(&mut self, file: &ConfigFile) -> Result<(), HarnessError> {
        if let Some(source) = &file.source {
            self.source = source.clone();
        }
        if let Some(v) = &file.n {
            self.ns = v.to_usizes()?;
        }
        if let Some(v) = &file.dim {
            self.dims = v.to_usizes()?;
        }
        if let Some(v) = &file.alpha {
            self.alphas = v.to_floats()?;
        }
        if let Some(v) = &file.delta {
            self.deltas = v.to_floats()?;
        }
        if let Some(k) = file.k {
            self.k = k;
        }
        if let Some(r) = file.replicates {
            self.replicates = r;
        }
        if let Some(s) = file.seed {
            self.base_seed = s;
        }
        Ok(())
    }

    /// Checks shape constraints; per-cell parameter problems (for example an
    /// invalid `delta`) are reported as error rows by the sweep instead.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.dims.is_empty() || self.alphas.is_empty() || self.deltas.is_empty() {
            return fail("dimension, alpha and delta lists must be nonempty");
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1");
        }
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        match &self.source {
            DataSource::Simulated(_) => {
                if self.ns.is_empty() {
                    return fail("vertex-count list must be nonempty");
                }
                if self.ns.contains(&0) {
                    return fail("vertex counts must be at least 1");
                }
            }
            DataSource::Files { edge_list, labels } => {
                for path in [edge_list, labels] {
                    if !path.is_file() {
                        return Err(HarnessError::Config(format!("{} does not exist", path.display())));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A list given either explicitly or as a range string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ListSpec {
    Values(Vec<f64>),
    Scalar(f64),
    Range(String),
}

impl ListSpec {
    pub fn to_floats(&self) -> Result<Vec<f64>, HarnessError> {
        match self {
            ListSpec::Values(v) => Ok(v.clone()),
            ListSpec::Scalar(x) => Ok(vec![*x]),
            ListSpec::Range(s) => parse_float_list(s),
        }
    }

    pub fn to_usizes(&self) -> Result<Vec<usize>, HarnessError> {
        match self {
            ListSpec::Range(s) => parse_usize_list(s),
            other => other
                .to_floats()?
                .into_iter()
                .map(|x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(HarnessError::Parse(format!("{x} is not a non-negative integer")))
                    }
                })
                .collect(),
        }
    }
}

/// JSON config file; every field optional. Command-line flags take
/// precedence over it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub source: Option<DataSource>,
    pub n: Option<ListSpec>,
    pub dim: Option<ListSpec>,
    pub alpha: Option<ListSpec>,
    pub delta: Option<ListSpec>,
    pub k: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Values from `start:step:end` (MATLAB-style, inclusive of `end` when it
/// falls on the lattice), a comma-separated list, or a single number.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>, HarnessError> {
    let text = text.trim();
    let parse = |tok: &str| {
        tok.trim()
            .parse::<f64>()
            .map_err(|_| HarnessError::Parse(format!("'{tok}' is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(HarnessError::Parse(format!("range '{text}' must be start:step:end")));
        }
        let (start, step, end) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() || !end.is_finite() {
            return Err(HarnessError::Parse(format!(
                "range '{text}' needs a positive finite step"
            )));
        }
        if end < start {
            return Err(HarnessError::Parse(format!("range '{text}' ends before it starts")));
        }
        let steps = (end - start) / step;
        let nearest = steps.round();
        let on_lattice = (steps - nearest).abs() <= RANGE_LATTICE_TOLERANCE * nearest.max(1.0);
        let count = if on_lattice {
            nearest as usize
        } else {
            steps.floor() as usize
        } + 1;
        Ok((0..count)
            .map(|i| {
                if on_lattice && i + 1 == count {
                    end
                } else {
                    clean(start + i as f64 * step)
                }
            })
            .collect())
    } else {
        let values: Vec<f64> = text.split(',').map(parse).collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(HarnessError::Parse("empty list".into()));
        }
        Ok(values)
    }
}

/// Rounds away accumulated binary error in lattice points (e.g.
/// `0.001 + 0.01` prints as `0.011`).
fn clean(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, HarnessError> {
    let text = text.trim();
    let parse = |tok: &str| {
        tok.trim()
            .parse::<usize>()
            .map_err(|_| HarnessError::Parse(format!("'{tok}' is not a non-negative integer")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(HarnessError::Parse(format!("range '{text}' must be start:step:end")));
        }
        let (start, step, end) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step == 0 || end < start {
            return Err(HarnessError::Parse(format!("range '{text}' is empty or has zero step")));
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        text.split(',').map(parse).collect()
    }
}

//! Edge-list and label-file ingestion.
//!
//! Edge lists are ASCII, one whitespace-separated `u v` pair per line, with
//! `#` comment lines and blank lines skipped. Ids are 0- or 1-based integers;
//! the base is detected from the smallest id in the file. Label files hold one
//! integer class id per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{AdjacencyMatrix, GraphError, LabeledGraph};

/// Counts of input irregularities repaired while loading an edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub edges: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
    pub one_based: bool,
}

fn open(path: &Path) -> Result<BufReader<File>, GraphError> {
    File::open(path).map(BufReader::new).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads an edge list from `path`, logging dropped self-loops.
pub fn load_edge_list(path: impl AsRef<Path>, n_hint: Option<usize>) -> Result<AdjacencyMatrix, GraphError> {
    let path = path.as_ref();
    let (adj, report) = read_edge_list(open(path)?, &path.display().to_string(), n_hint)?;
    if report.self_loops_dropped > 0 {
        log::warn!("{}: dropped {} self-loop(s)", path.display(), report.self_loops_dropped);
    }
    if report.duplicates_collapsed > 0 {
        log::info!(
            "{}: collapsed {} duplicate edge(s)",
            path.display(),
            report.duplicates_collapsed
        );
    }
    Ok(adj)
}

/// Parses an edge list. `source` names the input in error messages.
///
/// Without `n_hint` the vertex count is the largest id after base correction
/// plus one. With it, every id must fit in `n_hint` vertices.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    source: &str,
    n_hint: Option<usize>,
) -> Result<(AdjacencyMatrix, IngestReport), GraphError> {
    let ingest = |line: usize, message: String| GraphError::Ingest {
        path: source.to_string(),
        line,
        message,
    };

    let mut raw: Vec<(usize, u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ingest(lineno, e.to_string()))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(ingest(lineno, format!("expected 2 vertex ids, found {}", tokens.len())));
        }
        let parse = |tok: &str| {
            tok.parse::<u64>()
                .map_err(|_| ingest(lineno, format!("'{tok}' is not a non-negative integer")))
        };
        raw.push((lineno, parse(tokens[0])?, parse(tokens[1])?));
    }

    let min_id = raw.iter().flat_map(|&(_, u, v)| [u, v]).min();
    let one_based = match min_id {
        Some(0) | None => false,
        Some(1) => {
            log::info!("{source}: smallest vertex id is 1 and 0 never appears; reading ids as 1-based");
            true
        }
        Some(_) => true,
    };
    let base = u64::from(one_based);

    let n = match n_hint {
        Some(n) => n,
        None => match raw.iter().flat_map(|&(_, u, v)| [u, v]).max() {
            Some(max) => (max - base + 1) as usize,
            None => return Err(ingest(0, "edge list contains no edges".into())),
        },
    };

    let mut adj = AdjacencyMatrix::empty(n);
    let mut report = IngestReport {
        one_based,
        ..IngestReport::default()
    };
    for (lineno, u, v) in raw {
        let (u, v) = (u - base, v - base);
        if let Some(&bad) = [u, v].iter().find(|&&id| id >= n as u64) {
            return Err(ingest(
                lineno,
                format!("vertex id {} exceeds declared vertex count {n}", bad + base),
            ));
        }
        let (u, v) = (u as usize, v as usize);
        if u == v {
            report.self_loops_dropped += 1;
        } else if adj.has_edge(u, v) {
            report.duplicates_collapsed += 1;
        } else {
            adj.entries[[u, v]] = 1;
            adj.entries[[v, u]] = 1;
            report.edges += 1;
        }
    }
    Ok((adj, report))
}

/// Writes `adj` as a 1-based edge list with a vertex-count comment.
///
/// 1-based ids always decode correctly under base auto-detection, whether or
/// not vertex 1 has any edges; pass the vertex count as `n_hint` when reading
/// back to keep trailing isolated vertices.
pub fn write_edge_list<W: Write>(adj: &AdjacencyMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# vertices: {} (1-based ids)", adj.n())?;
    for (u, v) in adj.edges() {
        writeln!(out, "{} {}", u + 1, v + 1)?;
    }
    Ok(())
}

/// Loads `n` class labels from `path`, remapped to `1..=K` in order of first appearance.
pub fn load_labels(path: impl AsRef<Path>, n: usize) -> Result<Vec<usize>, GraphError> {
    let path = path.as_ref();
    read_labels(open(path)?, &path.display().to_string(), n)
}

pub fn read_labels<R: BufRead>(reader: R, source: &str, n: usize) -> Result<Vec<usize>, GraphError> {
    let labels = parse_labels(reader, source)?;
    if labels.len() != n {
        return Err(GraphError::Ingest {
            path: source.to_string(),
            line: 0,
            message: format!("found {} labels, expected {n}", labels.len()),
        });
    }
    Ok(labels)
}

/// Loads a graph and its labels; the label count fixes the vertex count, so
/// isolated trailing vertices survive.
pub fn load_labeled_graph(edges: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledGraph, GraphError> {
    let labels_path = labels.as_ref();
    let labels = parse_labels(open(labels_path)?, &labels_path.display().to_string())?;
    let adjacency = load_edge_list(edges, Some(labels.len()))?;
    LabeledGraph::new(adjacency, labels)
}

fn parse_labels<R: BufRead>(reader: R, source: &str) -> Result<Vec<usize>, GraphError> {
    let ingest = |line: usize, message: String| GraphError::Ingest {
        path: source.to_string(),
        line,
        message,
    };
    let mut remap: HashMap<i64, usize> = HashMap::new();
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ingest(lineno, e.to_string()))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let raw: i64 = text
            .parse()
            .map_err(|_| ingest(lineno, format!("'{text}' is not an integer class id")))?;
        let next = remap.len() + 1;
        labels.push(*remap.entry(raw).or_insert(next));
    }
    if labels.is_empty() {
        return Err(ingest(0, "label file is empty".into()));
    }
    Ok(labels)
}

use std::fs::File;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Serialize, Serializer};

use super::config::OutputFormat;
use super::sweep::SweepRecord;
use super::HarnessError;
use crate::linalg::Embedding;

pub const CSV_HEADER: [&str; 13] = [
    "experiment",
    "n",
    "d",
    "alpha",
    "delta",
    "k",
    "replicate",
    "seed",
    "error_dp",
    "error_ase",
    "fnorm",
    "fnorm_per_vertex",
    "status",
];

/// `x` with 9 significant digits in the style of C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().unwrap_or(x)
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

/// Writes a header line and one row per record.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record([
            r.experiment.clone(),
            r.n.to_string(),
            r.d.to_string(),
            format_sig9(r.alpha),
            format_sig9(r.delta),
            r.k.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            optional(r.error_dp),
            optional(r.error_ase),
            optional(r.fnorm),
            optional(r.fnorm_per_vertex),
            r.status.as_str().to_string(),
        ])?;
    }
    writer.flush().map_err(|source| HarnessError::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>, HarnessError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(HarnessError::Parse(format!("unexpected CSV header {header:?}")));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(HarnessError::from))
        .collect()
}

/// Same fields as [`SweepRecord`], floats rounded to 9 significant digits.
#[derive(Serialize)]
struct JsonRecord<'a> {
    experiment: &'a str,
    n: usize,
    d: usize,
    #[serde(serialize_with = "sig9")]
    alpha: f64,
    #[serde(serialize_with = "sig9")]
    delta: f64,
    k: usize,
    replicate: usize,
    seed: u64,
    #[serde(serialize_with = "sig9_opt")]
    error_dp: Option<f64>,
    #[serde(serialize_with = "sig9_opt")]
    error_ase: Option<f64>,
    #[serde(serialize_with = "sig9_opt")]
    fnorm: Option<f64>,
    #[serde(serialize_with = "sig9_opt")]
    fnorm_per_vertex: Option<f64>,
    status: &'a str,
}

fn sig9<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig9(*x))
}

fn sig9_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig9(*v)),
        None => s.serialize_none(),
    }
}

pub fn write_json<W: Write>(records: &[SweepRecord], mut out: W) -> Result<(), HarnessError> {
    let rows: Vec<JsonRecord<'_>> = records
        .iter()
        .map(|r| JsonRecord {
            experiment: &r.experiment,
            n: r.n,
            d: r.d,
            alpha: r.alpha,
            delta: r.delta,
            k: r.k,
            replicate: r.replicate,
            seed: r.seed,
            error_dp: r.error_dp,
            error_ase: r.error_ase,
            fnorm: r.fnorm,
            fnorm_per_vertex: r.fnorm_per_vertex,
            status: r.status.as_str(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows)?;
    writeln!(out).map_err(|source| HarnessError::Io {
        path: "<json output>".into(),
        source,
    })?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<SweepRecord>, HarnessError> {
    Ok(serde_json::from_reader(input)?)
}

/// Writes `records` to `path`, or to stdout when `path` is `None`.
pub fn emit_results(records: &[SweepRecord], format: OutputFormat, path: Option<&Path>) -> Result<(), HarnessError> {
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |source| HarnessError::Io { path, source }
    };
    match path {
        Some(p) => {
            let mut out = BufWriter::new(File::create(p).map_err(io_err(p))?);
            match format {
                OutputFormat::Csv => write_csv(records, &mut out)?,
                OutputFormat::Json => write_json(records, &mut out)?,
            }
            out.flush().map_err(io_err(p))
        }
        None => {
            let stdout = std::io::stdout().lock();
            match format {
                OutputFormat::Csv => write_csv(records, stdout),
                OutputFormat::Json => write_json(records, stdout),
            }
        }
    }
}

/// One row per vertex, coordinates comma-separated at full precision.
pub fn write_embedding_csv<W: Write>(embedding: &Embedding<f64>, mut out: W) -> std::io::Result<()> {
    for row in embedding.positions().rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_embedding_csv<R: BufRead>(input: R) -> Result<Embedding<f64>, HarnessError> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: "<embedding>".into(),
            source,
        })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| HarnessError::Parse(format!("embedding line {}: '{t}' is not a number", idx + 1)))
            })
            .collect::<Result<_, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(HarnessError::Parse(format!(
                    "embedding line {}: {} columns, expected {w}",
                    idx + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let width = width.ok_or_else(|| HarnessError::Parse("embedding file is empty".into()))?;
    let positions = Array2::from_shape_vec((rows, width), values).expect("rows have equal width");
    Ok(Embedding::from_positions(positions)?)
}

//! JSON-Lines persistence.
//!
//! A non-empty file starts with a header line
//! `{"format":"sstgcn-samples","version":1}` followed by one record per line:
//! `{label, center, t, n, k, nodes, L, slices, statics}`. An empty set is
//! written as an empty file. Floats use shortest round-trip formatting, so
//! load after save reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use super::sample::Sample;
use super::DataError;
use crate::numcore::Tensor;
use crate::roadgraph::RoadId;

pub const FORMAT_NAME: &str = "sstgcn-samples";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u64,
}

/// Serializes a tensor as a list of row lists without copying.
struct Rows<'a>(&'a Tensor);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows()))?;
        for r in 0..self.0.rows() {
            seq.serialize_element(self.0.row(r))?;
        }
        seq.end()
    }
}

#[derive(Serialize)]
struct RecordRef<'a> {
    label: u8,
    center: RoadId,
    t: usize,
    n: usize,
    k: usize,
    nodes: &'a [RoadId],
    #[serde(rename = "L")]
    laplacian: Rows<'a>,
    slices: Vec<Rows<'a>>,
    statics: Vec<&'a [f64]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    label: u8,
    center: RoadId,
    t: usize,
    n: usize,
    k: usize,
    nodes: Vec<RoadId>,
    #[serde(rename = "L")]
    laplacian: Vec<Vec<f64>>,
    slices: Vec<Vec<Vec<f64>>>,
    statics: Vec<Vec<f64>>,
}

fn record(s: &Sample) -> RecordRef<'_> {
    RecordRef {
        label: s.label,
        center: s.center,
        t: s.t,
        n: s.n,
        k: s.k,
        nodes: &s.nodes,
        laplacian: Rows(&s.laplacian),
        slices: s.slices.iter().map(Rows).collect(),
        statics: s.statics.iter().map(Tensor::data).collect(),
    }
}

fn matrix(rows: &[Vec<f64>], cols_if_empty: usize) -> Result<Tensor, String> {
    if rows.is_empty() {
        return Ok(Tensor::zeros(0, cols_if_empty));
    }
    Tensor::from_rows(rows).map_err(|e| e.to_string())
}

fn into_sample(r: Record) -> Result<Sample, String> {
    let sample = Sample {
        laplacian: matrix(&r.laplacian, 0)?,
        slices: r
            .slices
            .iter()
            .map(|s| matrix(s, 0))
            .collect::<Result<_, _>>()?,
        statics: r.statics.iter().map(|s| Tensor::row_vector(s)).collect(),
        center: r.center,
        t: r.t,
        n: r.n,
        k: r.k,
        label: r.label,
        nodes: r.nodes,
    };
    if sample.nodes.first() != Some(&sample.center) {
        return Err("first node must be the center".into());
    }
    sample.validate()?;
    Ok(sample)
}

/// Writes `samples` as JSON-Lines. Nothing at all is written for an empty set.
pub fn write_samples<W: Write>(mut w: W, samples: &[Sample]) -> Result<(), DataError> {
    if samples.is_empty() {
        return Ok(());
    }
    let header = Header {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in samples {
        serde_json::to_writer(&mut w, &record(s))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_samples(path: &Path, samples: &[Sample]) -> Result<(), DataError> {
    write_samples(BufWriter::new(File::create(path)?), samples)
}

/// Reads a file written by [`save_samples`]. Blank lines are ignored; the
/// first error names its 1-based line number.
pub fn load_samples(path: &Path) -> Result<Vec<Sample>, DataError> {
    read_samples(BufReader::new(File::open(path)?))
}

pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<Sample>, DataError> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| DataError::Parse { line: lineno, msg };
        if !header_seen {
            let h: Header = serde_json::from_str(&line).map_err(|e| parse_err(format!("bad header: {e}")))?;
            if h.format != FORMAT_NAME {
                return Err(parse_err(format!("unknown format '{}'", h.format)));
            }
            if h.version != FORMAT_VERSION {
                return Err(DataError::UnsupportedVersion(h.version));
            }
            header_seen = true;
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        out.push(into_sample(rec).map_err(parse_err)?);
    }
    Ok(out)
}

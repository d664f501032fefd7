//! Operator dumps: a raw matrix file of little-endian `(re, im)` `f64` pairs
//! in row-major order, plus a JSON sidecar describing it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::operator_lab::DiscreteOperator;

pub const DTYPE: &str = "complex128-le";
pub const LAYOUT: &str = "row-major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub version: String,
    pub normalization: String,
    pub dtype: String,
    pub layout: String,
    pub rows: usize,
    pub cols: usize,
    pub source: Grid2,
    pub target: Grid2,
    /// Name of the matrix file, relative to the sidecar.
    pub data: String,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `<path>` (matrix) and `<path>.json`-style sidecar next to it.
pub fn write_operator(op: &DiscreteOperator, path: &Path) -> Result<PathBuf> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in &op.matrix {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    let header = DumpHeader {
        version: crate::VERSION.to_string(),
        normalization: crate::NORMALIZATION.to_string(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
        rows: op.rows(),
        cols: op.cols(),
        source: op.source,
        target: op.target,
        data: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let side = sidecar(path);
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    std::fs::write(&side, text)?;
    Ok(side)
}

/// Reads an operator back from its sidecar.
pub fn read_operator(sidecar_path: &Path) -> Result<DiscreteOperator> {
    let header: DumpHeader = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
    if header.dtype != DTYPE || header.layout != LAYOUT {
        return Err(Error::param("dump", format!("unsupported {} / {}", header.dtype, header.layout)));
    }
    if header.rows != header.target.len() || header.cols != header.source.len() {
        return Err(Error::param("dump", "shape does not match the grids"));
    }
    let data = sidecar_path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let mut bytes = Vec::new();
    BufReader::new(File::open(data)?).read_to_end(&mut bytes)?;
    if bytes.len() != header.rows * header.cols * 16 {
        return Err(Error::param("dump", format!("expected {} bytes, found {}", header.rows * header.cols * 16, bytes.len())));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let matrix = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(DiscreteOperator { source: header.source, target: header.target, matrix })
}

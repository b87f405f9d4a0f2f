//! File formats: residue sets, ensemble descriptions, dense matrices and
//! sweep curves, plus atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addcomb::{AddCombError, ResidueSet};
use crate::chirp::{self, ChirpEnsemble, ChirpError, ChirpIndex};
use crate::exact::to_fraction_string;
use crate::number_theory::{NumberTheoryError, PrimeContext};
use crate::optimizer::SweepPoint;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    AddComb(#[from] AddCombError),
    #[error(transparent)]
    Chirp(#[from] ChirpError),
    #[error(transparent)]
    NumberTheory(#[from] NumberTheoryError),
}

/// Writes to a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| IoError::Io(e.error))?;
    Ok(())
}

/// Modulus on the first line, one element per following line.
pub fn residue_set_to_lines(set: &ResidueSet) -> String {
    let mut out = format!("{}\n", set.modulus());
    for x in set.iter() {
        out.push_str(&format!("{x}\n"));
    }
    out
}

/// Parses the line format, a JSON object `{modulus, elements}`, or a JSON
/// array whose first entry is the modulus.
pub fn parse_residue_set(text: &str) -> Result<ResidueSet, IoError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    let numbers: Vec<u64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed)?
    } else {
        trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<u64>().map_err(|_| IoError::Format(format!("not an integer: {l:?}"))))
            .collect::<Result<_, _>>()?
    };
    let (&modulus, elements) = numbers
        .split_first()
        .ok_or_else(|| IoError::Format("missing modulus".into()))?;
    Ok(ResidueSet::new(modulus, elements.iter().copied())?)
}

/// `{p, A, B}` or `{p, indices: [[a, b], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleSpec {
    Product {
        p: u64,
        #[serde(rename = "A")]
        a: Vec<u64>,
        #[serde(rename = "B")]
        b: Vec<u64>,
    },
    Indices {
        p: u64,
        indices: Vec<(u64, u64)>,
    },
}

impl EnsembleSpec {
    pub fn from_ensemble(ens: &ChirpEnsemble) -> Self {
        EnsembleSpec::Indices {
            p: ens.ctx().p(),
            indices: ens.indices().iter().map(|i| (i.a, i.b)).collect(),
        }
    }

    pub fn to_ensemble(&self) -> Result<ChirpEnsemble, IoError> {
        match self {
            EnsembleSpec::Product { p, a, b } => {
                let ctx = PrimeContext::new(*p)?;
                let a = ResidueSet::reduced(*p, a.iter().copied())?;
                let b = ResidueSet::reduced(*p, b.iter().copied())?;
                Ok(chirp::assemble_ensemble(ctx, &a, &b)?)
            }
            EnsembleSpec::Indices { p, indices } => {
                let ctx = PrimeContext::new(*p)?;
                let idx = indices.iter().map(|&(a, b)| ChirpIndex::new(a, b)).collect();
                Ok(ChirpEnsemble::new(ctx, idx)?)
            }
        }
    }
}

/// Row-major CSV with `re,im` pairs for each column.
pub fn matrix_to_csv(rows: &[Vec<Complex64>]) -> Result<String, IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        let fields: Vec<String> = row.iter().flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)]).collect();
        w.write_record(&fields)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Format(e.to_string()))
}

pub fn matrix_from_csv(text: &str) -> Result<Vec<Vec<Complex64>>, IoError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() % 2 != 0 {
            return Err(IoError::Format(format!("row {line} has an odd number of fields")));
        }
        let values: Vec<f64> = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| IoError::Format(format!("row {line}: bad number {f:?}"))))
            .collect::<Result<_, _>>()?;
        rows.push(values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 3] = ["m", "eps1_sup_decimal", "eps1_sup_rational"];

/// Sweep curve; infeasible points leave both value fields empty.
pub fn sweep_to_csv(points: &[SweepPoint]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for pt in points {
        let (dec, rat) = match &pt.eps1_sup {
            Some(v) => (crate::exact::to_scientific(v, 10), to_fraction_string(v)),
            None => (String::new(), String::new()),
        };
        w.write_record([pt.m.to_string(), dec, rat])?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Format(e.to_string()))
}

//! Deterministic artifact emission: CSV with 17 significant digits and a
//! lossless JSON alternative carrying grid and state metadata.

use std::io::Write;
use std::path::Path;

use ncs_core::{Field, NcsState};
use serde::{Deserialize, Serialize};

use crate::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}', expected csv or json")),
        }
    }
}

/// One value formatted with 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Metadata block attached to JSON artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub spec: ncs_core::DeformationSpec,
    pub alpha: [f64; 2],
    pub order: usize,
    pub sector: usize,
    pub n_max: usize,
    pub library_version: String,
}

impl Metadata {
    pub fn from_state(st: &NcsState) -> Self {
        Metadata {
            spec: st.spec.clone(),
            alpha: [st.alpha.re, st.alpha.im],
            order: st.order,
            sector: st.sector,
            n_max: st.n_max,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldDocument {
    pub grid: ncs_core::GridSpec,
    pub kind: ncs_core::FieldKind,
    pub values: Vec<f64>,
    pub metadata: Option<Metadata>,
}

/// Write a field: CSV columns exactly `q,p,value`, row-major in q then p, or
/// the JSON document with grid metadata.
pub fn emit_field(
    field: &Field,
    metadata: Option<Metadata>,
    path: &Path,
    format: Format,
) -> CliResult<()> {
    match format {
        Format::Csv => {
            let mut out = String::with_capacity(field.values.len() * 60);
            out.push_str("q,p,value\n");
            for i in 0..field.grid.nq {
                let q = field.grid.q_at(i);
                for j in 0..field.grid.np {
                    let p = field.grid.p_at(j);
                    out.push_str(&fmt(q));
                    out.push(',');
                    out.push_str(&fmt(p));
                    out.push(',');
                    out.push_str(&fmt(field.at(i, j)));
                    out.push('\n');
                }
            }
            write_atomic(path, out.as_bytes())
        }
        Format::Json => {
            let doc = FieldDocument {
                grid: field.grid,
                kind: field.kind,
                values: field.values.clone(),
                metadata,
            };
            let text = serde_json::to_string_pretty(&doc).expect("field serialization");
            write_atomic(path, text.as_bytes())
        }
    }
}

/// Parse back a JSON field document (bit-exact round trip).
pub fn parse_field_json(text: &str) -> CliResult<FieldDocument> {
    serde_json::from_str(text)
        .map_err(|e| crate::CliError::InvalidConfig(format!("bad field JSON: {e}")))
}

/// Two-column CSV.
pub fn emit_pairs(header: &str, rows: &[(f64, f64)], path: &Path) -> CliResult<()> {
    let mut out = String::with_capacity(rows.len() * 40);
    out.push_str(header);
    out.push('\n');
    for (a, b) in rows {
        out.push_str(&fmt(*a));
        out.push(',');
        out.push_str(&fmt(*b));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Three-column CSV.
pub fn emit_triples(header: &str, rows: &[(f64, f64, f64)], path: &Path) -> CliResult<()> {
    let mut out = String::with_capacity(rows.len() * 60);
    out.push_str(header);
    out.push('\n');
    for (a, b, c) in rows {
        out.push_str(&fmt(*a));
        out.push(',');
        out.push_str(&fmt(*b));
        out.push(',');
        out.push_str(&fmt(*c));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json serialization");
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

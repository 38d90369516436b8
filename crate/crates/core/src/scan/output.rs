//! CSV form of a scan. Configuration travels in leading `# key: value` lines.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Label, ScanResult};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 9] = [
    "eps",
    "gap",
    "gap_lo",
    "gap_hi",
    "agree",
    "agree_lo",
    "agree_hi",
    "oracle_gap",
    "label",
];

/// One CSV line. Empty numeric fields read back as `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub eps: f64,
    pub gap: Option<f64>,
    pub gap_lo: Option<f64>,
    pub gap_hi: Option<f64>,
    pub agree: Option<f64>,
    pub agree_lo: Option<f64>,
    pub agree_hi: Option<f64>,
    pub oracle_gap: Option<f64>,
    pub label: String,
}

impl CsvRow {
    pub fn label(&self) -> Result<Label> {
        Label::parse(&self.label)
    }
}

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(result: &ScanResult, mut out: W) -> Result<()> {
    let cfg = &result.config;
    let map = serde_json::to_string(&result.map)?;
    writeln!(out, "# map: {map}")?;
    writeln!(out, "# t: {}", cfg.t)?;
    writeln!(out, "# samples: {}", cfg.samples)?;
    writeln!(out, "# seed: {}", cfg.seed)?;
    writeln!(out, "# shortcut: {}", cfg.shortcut)?;
    writeln!(out, "# lazy: {}", cfg.lazy)?;
    writeln!(out, "# cone_cap: {}", cfg.cone_cap)?;
    writeln!(out, "# fallback_level: {}", cfg.fallback_level)?;
    writeln!(out, "# gap_threshold: {}", cfg.gap_threshold)?;
    writeln!(out, "# delta: {}", cfg.delta)?;
    writeln!(out, "# init_second: {}", cfg.init_second)?;
    let w: Vec<String> = cfg.witnesses.iter().map(u64::to_string).collect();
    writeln!(
        out,
        "# witnesses: {}",
        if w.is_empty() {
            "auto".into()
        } else {
            w.join(",")
        }
    )?;
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(CSV_COLUMNS)?;
    for row in &result.rows {
        let g = row.gap;
        let a = row.agree;
        wr.write_record([
            format!("{:.16e}", row.eps),
            num(g.map(|x| x.value)),
            num(g.map(|x| x.lo)),
            num(g.map(|x| x.hi)),
            num(a.map(|x| x.value)),
            num(a.map(|x| x.lo)),
            num(a.map(|x| x.hi)),
            num(row.oracle_gap),
            row.label.as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`], skipping comment lines.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!("unexpected CSV header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: CsvRow = rec?;
        row.label()?;
        rows.push(row);
    }
    Ok(rows)
}

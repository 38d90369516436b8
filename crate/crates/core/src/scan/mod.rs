//! Phase-diagram scan: for each noise level, a bistability gap and a coupling
//! agreement at one or more witness cells, turned into an evidence label.

mod output;
mod svg;
mod witness;

use serde::{Deserialize, Serialize};

use crate::engine::{self, stats, Estimate, InitSpec, Interval95, SimOptions};
use crate::error::{invalid, Error, Result};
use crate::maps::{cone_block, phi, phi_inv, MapDescriptor};
use crate::oracle;
use crate::rational::Rat;

pub use output::{read_csv, write_csv, CsvRow, CSV_COLUMNS};
pub use svg::render_svg;
pub use witness::{
    layered_witness, witness_selection, ClaimCondition, Witness, WITNESS_SAMPLE_CAP,
};

/// Largest number of grid points.
pub const MAX_GRID: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "multiple-evidence")]
    Multiple,
    #[serde(rename = "unique-evidence")]
    Unique,
    #[serde(rename = "inconclusive")]
    Inconclusive,
    #[serde(rename = "error")]
    Error,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Multiple => "multiple-evidence",
            Label::Unique => "unique-evidence",
            Label::Inconclusive => "inconclusive",
            Label::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "multiple-evidence" => Ok(Label::Multiple),
            "unique-evidence" => Ok(Label::Unique),
            "inconclusive" => Ok(Label::Inconclusive),
            "error" => Ok(Label::Error),
            _ => Err(Error::Parse(format!("unknown label {s:?}"))),
        }
    }
}

/// Parses `a:b:step` (inclusive where `b` is hit exactly) or a comma list.
/// Values are exact rationals in `[0, 1]`.
pub fn parse_grid(s: &str) -> Result<Vec<Rat>> {
    let s = s.trim();
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid {s:?} is not start:stop:step")));
        }
        let a = Rat::parse(parts[0])?;
        let b = Rat::parse(parts[1])?;
        let step = Rat::parse(parts[2])?;
        if step <= Rat::zero() {
            return Err(Error::Parse("grid step must be positive".into()));
        }
        let mut out = Vec::new();
        let mut x = a;
        while x <= b {
            if out.len() >= MAX_GRID {
                return Err(Error::Parse(format!(
                    "grid has more than {MAX_GRID} points"
                )));
            }
            out.push(x.clone());
            x = x.add(&step);
        }
        out
    } else {
        s.split(',').map(Rat::parse).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(Error::Parse("empty grid".into()));
    }
    if grid.len() > MAX_GRID {
        return Err(Error::Parse(format!(
            "grid has more than {MAX_GRID} points"
        )));
    }
    if let Some(bad) = grid.iter().find(|x| !x.is_unit()) {
        return Err(Error::Parse(format!("grid value {bad} is outside [0, 1]")));
    }
    Ok(grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub grid: Vec<Rat>,
    pub t: usize,
    pub samples: u64,
    /// Explicit witness cells; empty means automatic selection.
    pub witnesses: Vec<u64>,
    /// `g*`.
    pub gap_threshold: f64,
    /// `δ`: unique evidence needs agreement above `1 - δ`.
    pub delta: f64,
    pub seed: u64,
    pub shortcut: bool,
    #[serde(default)]
    pub lazy: bool,
    /// Second-layer law of both bistability initial conditions.
    pub init_second: f64,
    pub cone_cap: u64,
    /// Level used for a layered map when no level passes the witness test.
    pub fallback_level: u32,
}

impl ScanConfig {
    pub fn new(grid: Vec<Rat>, t: usize, samples: u64, seed: u64) -> Self {
        ScanConfig {
            grid,
            t,
            samples,
            witnesses: Vec::new(),
            gap_threshold: 0.1,
            delta: 0.05,
            seed,
            shortcut: false,
            lazy: false,
            init_second: 0.0,
            cone_cap: engine::DEFAULT_CONE_CAP,
            fallback_level: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.iter().any(|x| !x.is_unit()) {
            return invalid("grid must be a nonempty subset of [0, 1]");
        }
        if self.samples < 100 {
            return invalid(format!(
                "scans need at least 100 samples, got {}",
                self.samples
            ));
        }
        if !(0.0..=1.0).contains(&self.gap_threshold) || !(0.0..=1.0).contains(&self.delta) {
            return invalid("gap threshold and delta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.init_second) {
            return invalid("second-layer probability must lie in [0, 1]");
        }
        Ok(())
    }

    fn options(&self) -> SimOptions {
        SimOptions {
            shortcut: self.shortcut,
            cone_cap: self.cone_cap,
            lazy: self.lazy,
        }
    }

    /// Label for one witness from its gap interval and agreement estimate.
    pub fn classify(&self, gap: &Interval95, agree: &Estimate) -> Label {
        if gap.lo > self.gap_threshold {
            Label::Multiple
        } else if agree.lo > 1.0 - self.delta && gap.hi < self.gap_threshold / 2.0 {
            Label::Unique
        } else {
            Label::Inconclusive
        }
    }
}

/// Evidence gathered at one witness cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub cell: u64,
    pub gap: Interval95,
    pub from_one: Estimate,
    pub from_zero: Estimate,
    pub agree: Estimate,
    pub oracle_gap: Option<f64>,
    pub label: Label,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub eps_exact: String,
    pub witness: Option<u64>,
    pub gap: Option<Interval95>,
    pub agree: Option<Interval95>,
    pub oracle_gap: Option<f64>,
    /// Exact gaps at horizons `0..=t`, when the map is exactly solvable.
    pub oracle_trend: Option<Vec<f64>>,
    pub label: Label,
    pub reports: Vec<WitnessReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub map: serde_json::Value,
    pub config: ScanConfig,
    pub rows: Vec<ScanRow>,
}

/// Witness cells for `map` at `eps`, with a note when a fallback was used.
pub fn auto_witnesses(
    map: &MapDescriptor,
    eps: f64,
    fallback_level: u32,
) -> Result<Vec<(u64, Option<String>)>> {
    match map {
        MapDescriptor::Maj { .. } => Ok(vec![(0, None)]),
        MapDescriptor::Layered(l) => match layered_witness(l, eps) {
            Ok(w) => Ok(vec![(w.cell, None)]),
            Err(Error::NotFound(why)) => {
                let (cell, _) = cone_block(l.arity(), fallback_level)?;
                Ok(vec![(
                    cell,
                    Some(format!("fallback to level {fallback_level}: {why}")),
                )])
            }
            Err(e) => Err(e),
        },
        MapDescriptor::Interleave { rows } => {
            let mut out = Vec::new();
            for (j, row) in rows.iter().enumerate() {
                for (c, note) in auto_witnesses(row, eps, fallback_level)? {
                    let cell = phi(c, j as u32).ok_or(Error::Overflow(c))?;
                    let note = note.map(|n| format!("row {j}: {n}"));
                    out.push((cell, note));
                }
            }
            Ok(out)
        }
        MapDescriptor::GDelta(g) => auto_witnesses(g.expanded(), eps, fallback_level),
        MapDescriptor::Densify(_) => Ok(vec![(0, None)]),
    }
}

/// Bistability gap at `witness`: `|P(1 | all-one) - P(1 | all-zero)|` from
/// two independent runs.
#[allow(clippy::too_many_arguments)]
pub fn bistability_gap(
    map: &MapDescriptor,
    eps: f64,
    t: usize,
    samples: u64,
    witness: u64,
    seed: u64,
    init_second: f64,
    opts: SimOptions,
) -> Result<(Interval95, Estimate, Estimate)> {
    let one = InitSpec::bernoulli(1.0, init_second)?;
    let zero = InitSpec::bernoulli(0.0, init_second)?;
    let a = engine::run(
        map,
        &one,
        eps,
        t,
        &[witness],
        samples,
        engine::sub_seed(seed, 1),
        opts,
    )?;
    let b = engine::run(
        map,
        &zero,
        eps,
        t,
        &[witness],
        samples,
        engine::sub_seed(seed, 2),
        opts,
    )?;
    let pa = a.targets[0].first_one;
    let pb = b.targets[0].first_one;
    Ok((stats::abs_difference(&pa, &pb), pa, pb))
}

fn witness_report(
    map: &MapDescriptor,
    cfg: &ScanConfig,
    eps: f64,
    cell: u64,
    seed: u64,
    note: Option<String>,
) -> Result<WitnessReport> {
    let opts = cfg.options();
    let (gap, from_one, from_zero) = bistability_gap(
        map,
        eps,
        cfg.t,
        cfg.samples,
        cell,
        engine::sub_seed(seed, 10),
        cfg.init_second,
        opts,
    )?;
    let one = InitSpec::bernoulli(1.0, cfg.init_second)?;
    let zero = InitSpec::bernoulli(0.0, cfg.init_second)?;
    let c = engine::couple_run(
        map,
        &one,
        &zero,
        eps,
        cfg.t,
        &[cell],
        cfg.samples,
        engine::sub_seed(seed, 20),
        opts,
    )?;
    let agree = c.agreement[0].agree;
    let oracle_gap = if oracle::is_exactly_solvable(map) {
        oracle::exact_gap(map, eps, cfg.t, cell, cfg.init_second).ok()
    } else {
        None
    };
    Ok(WitnessReport {
        cell,
        gap,
        from_one,
        from_zero,
        agree,
        oracle_gap,
        label: cfg.classify(&gap, &agree),
        note,
    })
}

fn scan_row(map: &MapDescriptor, cfg: &ScanConfig, index: usize, eps_exact: &Rat) -> ScanRow {
    let eps = eps_exact.to_f64();
    let seed = engine::sub_seed(cfg.seed, index as u64);
    let mut row = ScanRow {
        eps,
        eps_exact: eps_exact.to_string(),
        witness: None,
        gap: None,
        agree: None,
        oracle_gap: None,
        oracle_trend: None,
        label: Label::Error,
        reports: Vec::new(),
        error: None,
    };
    let witnesses = if cfg.witnesses.is_empty() {
        match auto_witnesses(map, eps, cfg.fallback_level) {
            Ok(w) => w,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        }
    } else {
        cfg.witnesses.iter().map(|&c| (c, None)).collect()
    };
    let mut errors = Vec::new();
    for (k, (cell, note)) in witnesses.into_iter().enumerate() {
        match witness_report(map, cfg, eps, cell, engine::sub_seed(seed, k as u64), note) {
            Ok(r) => row.reports.push(r),
            Err(e) => errors.push(format!("witness {cell}: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    let chosen = if let Some(r) = row
        .reports
        .iter()
        .filter(|r| r.label == Label::Multiple)
        .max_by(|a, b| a.gap.lo.total_cmp(&b.gap.lo))
    {
        Some(r)
    } else if !row.reports.is_empty()
        && errors.is_empty()
        && row.reports.iter().all(|r| r.label == Label::Unique)
    {
        row.reports
            .iter()
            .min_by(|a, b| a.agree.lo.total_cmp(&b.agree.lo))
    } else {
        row.reports.first()
    };
    if let Some(r) = chosen {
        let label = if r.label == Label::Unique && !errors.is_empty() {
            Label::Inconclusive
        } else if r.label == Label::Multiple {
            Label::Multiple
        } else if row.reports.iter().all(|x| x.label == Label::Unique) {
            Label::Unique
        } else {
            Label::Inconclusive
        };
        row.witness = Some(r.cell);
        row.gap = Some(r.gap);
        row.agree = Some(Interval95 {
            value: r.agree.value,
            lo: r.agree.lo,
            hi: r.agree.hi,
        });
        row.oracle_gap = r.oracle_gap;
        row.label = label;
        if oracle::is_exactly_solvable(map) {
            row.oracle_trend = (0..=cfg.t)
                .map(|s| oracle::exact_gap(map, eps, s, r.cell, cfg.init_second))
                .collect::<Result<Vec<_>>>()
                .ok();
        }
    }
    row
}

/// Runs the scan over every grid point, in grid order.
pub fn scan(map: &MapDescriptor, cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    for &w in &cfg.witnesses {
        // an explicit witness must be a real cell of the map
        if let MapDescriptor::Interleave { rows } = map {
            let (_, j) = phi_inv(w);
            if j as usize >= rows.len() {
                return invalid(format!(
                    "witness {w} lies in row {j}, beyond the truncation"
                ));
            }
        }
    }
    let rows = cfg
        .grid
        .iter()
        .enumerate()
        .map(|(i, e)| scan_row(map, cfg, i, e))
        .collect();
    Ok(ScanResult {
        map: map.to_json_value()?,
        config: cfg.clone(),
        rows,
    })
}

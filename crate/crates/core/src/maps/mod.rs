//! Procedural map algebra.
//!
//! A map is never materialised. [`MapDescriptor::rule`] answers "what does
//! cell `i` read and how does it combine it" on demand, and every composite
//! (row interleave, G_δ stacking, densify) rewrites the answer of its parts
//! through an affine change of cell index.

mod json;
pub mod layout;
pub mod phi;
pub mod schedule;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::rational::IntervalSet;

pub use layout::{cone_block, level_of, ELayout};
pub use phi::{phi, phi_inv};
pub use schedule::{GDeltaSpec, IntervalSchedule, OpenSetSpec};

/// Largest `n` accepted for a plain vote over `2n+1` cells.
pub const MAX_MAJ_N: u32 = 1 << 16;
/// Largest `n` accepted for a layered vote (its threshold proxy is computed).
pub const MAX_LAYERED_N: u32 = 64;
/// Largest row count of an interleave.
pub const MAX_ROWS: usize = 64;
/// Largest `n` accepted by densify.
pub const MAX_DENSIFY_N: u64 = 1 << 20;
/// Default cap on materialised neighborhood sizes.
pub const DEFAULT_NEIGHBORHOOD_CAP: u64 = 1 << 24;

/// Cell symbol. Bit 0 is the first layer, bit 1 the second.
pub type Symbol = u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    Binary,
    BitPair,
}

impl Alphabet {
    pub fn size(self) -> u8 {
        match self {
            Alphabet::Binary => 2,
            Alphabet::BitPair => 4,
        }
    }
}

/// `start, start + stride, …` with `len` terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRun {
    pub start: u64,
    pub stride: u64,
    pub len: u64,
}

impl IndexRun {
    pub fn contiguous(start: u64, len: u64) -> Self {
        IndexRun {
            start,
            stride: 1,
            len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: u64) -> u64 {
        self.start + k * self.stride
    }

    pub fn last(&self) -> u64 {
        self.get(self.len.saturating_sub(1))
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |k| self.get(k))
    }

    pub fn contains(&self, x: u64) -> bool {
        if self.len == 0 || x < self.start {
            return false;
        }
        let d = x - self.start;
        if self.stride == 0 {
            return d == 0;
        }
        d.is_multiple_of(self.stride) && d / self.stride < self.len
    }

    /// Image under `x ↦ offset + scale·x`.
    fn map_affine(&self, offset: u64, scale: u64) -> Option<IndexRun> {
        let start = self.start.checked_mul(scale)?.checked_add(offset)?;
        let stride = self.stride.checked_mul(scale)?;
        let out = IndexRun {
            start,
            stride,
            len: self.len,
        };
        // the last element must fit as well
        if self.len > 0 {
            stride.checked_mul(self.len - 1)?.checked_add(start)?;
        }
        Some(out)
    }
}

/// Gate set of one level with the second-layer counts that fire it.
pub type GateLevel = (Arc<IntervalSet>, Arc<Vec<(u64, u64)>>);

/// Gate of a layered cell: fires when `2·mean` of the second layer over
/// `sample` lies in `set`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub level: u32,
    pub set: Arc<IntervalSet>,
    pub sample: IndexRun,
    /// Second-layer counts `k` with `2k/|sample| ∈ set`, as disjoint ranges.
    pub fire_counts: Arc<Vec<(u64, u64)>>,
}

impl Gate {
    pub fn fires_on_count(&self, k: u64) -> bool {
        let idx = self.fire_counts.partition_point(|&(_, hi)| hi < k);
        idx < self.fire_counts.len() && self.fire_counts[idx].0 <= k
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleKind {
    /// First-layer majority over `votes`; second layer written as 0.
    Majority {
        votes: IndexRun,
    },
    /// Majority unless the gate fires, in which case the output is 0.
    Layered {
        votes: IndexRun,
        gate: Gate,
    },
    ConstantZero,
    Identity {
        source: u64,
    },
    /// A cell of an interleave row beyond the truncation depth. It behaves as
    /// the identity, but the engine refuses to simulate it.
    Truncated {
        source: u64,
        row: u64,
        depth: u64,
    },
}

/// The local rule of one cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellRule {
    pub cell: u64,
    pub kind: RuleKind,
}

fn majority(votes: impl Iterator<Item = Symbol>, len: u64) -> Symbol {
    let ones = votes.filter(|s| s & 1 == 1).count() as u64;
    (2 * ones > len) as Symbol
}

impl CellRule {
    /// Sizes of the runs making up the neighborhood (before deduplication).
    pub fn neighborhood_size(&self) -> u64 {
        match &self.kind {
            RuleKind::Majority { votes } => votes.len,
            RuleKind::Layered { votes, gate } => votes.len.saturating_add(gate.sample.len),
            RuleKind::ConstantZero => 0,
            RuleKind::Identity { .. } | RuleKind::Truncated { .. } => 1,
        }
    }

    /// Largest index read, if any.
    pub fn max_index(&self) -> Option<u64> {
        match &self.kind {
            RuleKind::Majority { votes } => (!votes.is_empty()).then(|| votes.last()),
            RuleKind::Layered { votes, gate } => {
                let a = (!votes.is_empty()).then(|| votes.last());
                let b = (!gate.sample.is_empty()).then(|| gate.sample.last());
                a.max(b)
            }
            RuleKind::ConstantZero => None,
            RuleKind::Identity { source } | RuleKind::Truncated { source, .. } => Some(*source),
        }
    }

    /// Sorted, duplicate-free neighborhood. Fails with a resource error when
    /// it holds more than `cap` cells.
    pub fn neighborhood(&self, cap: u64) -> Result<Vec<u64>> {
        let size = self.neighborhood_size();
        if size > cap {
            return Err(Error::Resource {
                what: "neighborhood",
                size,
                cap,
            });
        }
        let mut out: Vec<u64> = match &self.kind {
            RuleKind::Majority { votes } => votes.iter().collect(),
            RuleKind::Layered { votes, gate } => votes.iter().chain(gate.sample.iter()).collect(),
            RuleKind::ConstantZero => Vec::new(),
            RuleKind::Identity { source } | RuleKind::Truncated { source, .. } => vec![*source],
        };
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Deterministic output, reading neighbor symbols through `get`.
    pub fn eval_with(&self, get: impl Fn(u64) -> Symbol) -> Symbol {
        match &self.kind {
            RuleKind::Majority { votes } => majority(votes.iter().map(&get), votes.len),
            RuleKind::Layered { votes, gate } => {
                let marked = gate.sample.iter().filter(|&c| get(c) & 2 != 0).count() as u64;
                if gate.fires_on_count(marked) {
                    0
                } else {
                    majority(votes.iter().map(&get), votes.len)
                }
            }
            RuleKind::ConstantZero => 0,
            RuleKind::Identity { source } | RuleKind::Truncated { source, .. } => get(*source),
        }
    }

    fn map_affine(self, cell: u64, offset: u64, scale: u64) -> Result<CellRule> {
        let ov = || Error::Overflow(cell);
        let point = |x: u64| -> Result<u64> {
            x.checked_mul(scale)
                .and_then(|v| v.checked_add(offset))
                .ok_or_else(ov)
        };
        let kind = match self.kind {
            RuleKind::Majority { votes } => RuleKind::Majority {
                votes: votes.map_affine(offset, scale).ok_or_else(ov)?,
            },
            RuleKind::Layered { votes, gate } => RuleKind::Layered {
                votes: votes.map_affine(offset, scale).ok_or_else(ov)?,
                gate: Gate {
                    sample: gate.sample.map_affine(offset, scale).ok_or_else(ov)?,
                    ..gate
                },
            },
            RuleKind::ConstantZero => RuleKind::ConstantZero,
            RuleKind::Identity { source } => RuleKind::Identity {
                source: point(source)?,
            },
            RuleKind::Truncated { source, row, depth } => RuleKind::Truncated {
                source: point(source)?,
                row,
                depth,
            },
        };
        Ok(CellRule { cell, kind })
    }
}

type GateEntry = (Arc<IntervalSet>, Arc<Vec<(u64, u64)>>);

/// Per-level gate sets and count ranges, filled lazily.
#[derive(Clone, Default)]
struct GateCache(Arc<Mutex<HashMap<u32, GateEntry>>>);

impl fmt::Debug for GateCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GateCache")
    }
}

/// Layered vote over `2n+1` cells with gate schedule and E-layout.
#[derive(Clone, Debug)]
pub struct LayeredMaj {
    n: u32,
    schedule: IntervalSchedule,
    layout: ELayout,
    cache: GateCache,
}

impl PartialEq for LayeredMaj {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.schedule == other.schedule && self.layout == other.layout
    }
}

impl LayeredMaj {
    pub fn new(n: u32, schedule: IntervalSchedule, layout: ELayout) -> Result<Self> {
        if n == 0 {
            return domain("layered votes need n >= 1");
        }
        if n > MAX_LAYERED_N {
            return invalid(format!("layered n = {n} exceeds {MAX_LAYERED_N}"));
        }
        let arity = 2 * n as u64 + 1;
        if layout.arity != arity {
            return invalid(format!(
                "layout arity {} does not match the vote arity {arity}",
                layout.arity
            ));
        }
        schedule.validate()?;
        Ok(LayeredMaj {
            n,
            schedule,
            layout,
            cache: GateCache::default(),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn arity(&self) -> u64 {
        2 * self.n as u64 + 1
    }

    pub fn schedule(&self) -> &IntervalSchedule {
        &self.schedule
    }

    pub fn layout(&self) -> &ELayout {
        &self.layout
    }

    /// Gate set `I` and its count ranges at cone level `k`.
    pub fn gate_at_level(&self, k: u32) -> Result<GateLevel> {
        if let Some(hit) = self.cache.0.lock().expect("gate cache").get(&k) {
            return Ok(hit.clone());
        }
        let m = self.layout.sample_size(k)?;
        let set = self.schedule.at(k);
        let counts = set.doubled_mean_counts(m);
        let entry = (Arc::new(set), Arc::new(counts));
        self.cache
            .0
            .lock()
            .expect("gate cache")
            .insert(k, entry.clone());
        Ok(entry)
    }

    fn rule(&self, i: u64) -> Result<CellRule> {
        let votes = vote_run(self.n, i)?;
        let level = level_of(self.arity(), i);
        let sample = self.layout.e_set(i)?;
        let (set, fire_counts) = self.gate_at_level(level)?;
        Ok(CellRule {
            cell: i,
            kind: RuleKind::Layered {
                votes,
                gate: Gate {
                    level,
                    set,
                    sample,
                    fire_counts,
                },
            },
        })
    }
}

/// Composite realizing `∩_j (O_j ∪ {1})`; the expansion is kept alongside the
/// spec.
#[derive(Clone, Debug)]
pub struct GDeltaMap {
    spec: GDeltaSpec,
    rows: u32,
    expanded: Box<MapDescriptor>,
}

impl PartialEq for GDeltaMap {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.rows == other.rows
    }
}

impl GDeltaMap {
    pub fn spec(&self) -> &GDeltaSpec {
        &self.spec
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn expanded(&self) -> &MapDescriptor {
        &self.expanded
    }
}

/// `F'`: base on `[0, n]`, zeros on `[n+1, r]`, identity at `r+1`, target
/// shifted onto `[r+2, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensifyMap {
    base: Box<MapDescriptor>,
    target: Box<MapDescriptor>,
    n: u64,
    radius: u64,
}

impl DensifyMap {
    pub fn base(&self) -> &MapDescriptor {
        &self.base
    }

    pub fn target(&self) -> &MapDescriptor {
        &self.target
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `r`: cells `[0, n]` of the base read nothing beyond `r`.
    pub fn radius(&self) -> u64 {
        self.radius
    }

    /// The identity cell `r + 1`.
    pub fn identity_cell(&self) -> u64 {
        self.radius + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapDescriptor {
    Maj { n: u32 },
    Layered(LayeredMaj),
    Interleave { rows: Vec<MapDescriptor> },
    GDelta(GDeltaMap),
    Densify(DensifyMap),
}

fn vote_run(n: u32, i: u64) -> Result<IndexRun> {
    let arity = 2 * n as u64 + 1;
    let start = i
        .checked_mul(arity)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow(i))?;
    start.checked_add(arity - 1).ok_or(Error::Overflow(i))?;
    Ok(IndexRun::contiguous(start, arity))
}

impl MapDescriptor {
    pub fn maj(n: u32) -> Result<Self> {
        if n > MAX_MAJ_N {
            return invalid(format!("n = {n} exceeds {MAX_MAJ_N}"));
        }
        Ok(MapDescriptor::Maj { n })
    }

    /// Layered vote with the default `(N+1)^k` layout.
    pub fn layered(n: u32, schedule: IntervalSchedule) -> Result<Self> {
        let layout = ELayout::new(2 * n as u64 + 1)?;
        Ok(MapDescriptor::Layered(LayeredMaj::new(
            n, schedule, layout,
        )?))
    }

    pub fn layered_with_layout(
        n: u32,
        schedule: IntervalSchedule,
        layout: ELayout,
    ) -> Result<Self> {
        Ok(MapDescriptor::Layered(LayeredMaj::new(
            n, schedule, layout,
        )?))
    }

    pub fn interleave(rows: Vec<MapDescriptor>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("an interleave needs at least one row");
        }
        if rows.len() > MAX_ROWS {
            return invalid(format!(
                "{} rows exceed the limit of {MAX_ROWS}",
                rows.len()
            ));
        }
        Ok(MapDescriptor::Interleave { rows })
    }

    /// Rows `maj_1, maj_3, …, maj_{2J-1}`.
    pub fn build_m(rows: u32) -> Result<Self> {
        let rows = (0..rows)
            .map(MapDescriptor::maj)
            .collect::<Result<Vec<_>>>()?;
        MapDescriptor::interleave(rows)
    }

    /// Row 0 the plain shift, rows `j >= 1` layered votes over `2j+1` cells
    /// with the open-set schedule of `O`.
    pub fn build_m_ie(open: &OpenSetSpec, rows: u32) -> Result<Self> {
        let mut out = Vec::with_capacity(rows as usize);
        for j in 0..rows {
            if j == 0 {
                out.push(MapDescriptor::maj(0)?);
            } else {
                let schedule = IntervalSchedule::open_set(open.clone(), j)?;
                out.push(MapDescriptor::layered(j, schedule)?);
            }
        }
        MapDescriptor::interleave(out)
    }

    /// Outer interleave whose row `j` realizes `O_j ∪ {1}`. An empty spec is
    /// the intersection of nothing and expands to `build_m_ie((0, 1))`.
    pub fn build_f(spec: &GDeltaSpec, rows: u32) -> Result<Self> {
        spec.validate()?;
        let expanded = if spec.levels.is_empty() {
            MapDescriptor::build_m_ie(&OpenSetSpec::full(), rows)?
        } else {
            let levels = spec
                .levels
                .iter()
                .map(|o| MapDescriptor::build_m_ie(o, rows))
                .collect::<Result<Vec<_>>>()?;
            MapDescriptor::interleave(levels)?
        };
        Ok(MapDescriptor::GDelta(GDeltaMap {
            spec: spec.clone(),
            rows,
            expanded: Box::new(expanded),
        }))
    }

    pub fn densify(base: MapDescriptor, target: MapDescriptor, n: u64) -> Result<Self> {
        if n > MAX_DENSIFY_N {
            return invalid(format!("densify n = {n} exceeds {MAX_DENSIFY_N}"));
        }
        let mut radius = n;
        for c in 0..=n {
            if let Some(m) = base.rule(c)?.max_index() {
                radius = radius.max(m);
            }
        }
        radius.checked_add(2).ok_or(Error::Overflow(radius))?;
        Ok(MapDescriptor::Densify(DensifyMap {
            base: Box::new(base),
            target: Box::new(target),
            n,
            radius,
        }))
    }

    pub fn alphabet(&self) -> Alphabet {
        if self.has_layers() {
            Alphabet::BitPair
        } else {
            Alphabet::Binary
        }
    }

    fn has_layers(&self) -> bool {
        match self {
            MapDescriptor::Maj { .. } => false,
            MapDescriptor::Layered(_) | MapDescriptor::GDelta(_) => true,
            MapDescriptor::Interleave { rows } => rows.iter().any(|r| r.has_layers()),
            MapDescriptor::Densify(d) => d.base.has_layers() || d.target.has_layers(),
        }
    }

    /// Whether any layered gate occurs in the tree.
    pub fn is_layered(&self) -> bool {
        self.has_layers()
    }

    /// The local rule of cell `i`.
    pub fn rule(&self, i: u64) -> Result<CellRule> {
        match self {
            MapDescriptor::Maj { n } => Ok(CellRule {
                cell: i,
                kind: RuleKind::Majority {
                    votes: vote_run(*n, i)?,
                },
            }),
            MapDescriptor::Layered(l) => l.rule(i),
            MapDescriptor::Interleave { rows } => {
                let (local, j) = phi_inv(i);
                match rows.get(j as usize) {
                    None => Ok(CellRule {
                        cell: i,
                        kind: RuleKind::Truncated {
                            source: i,
                            row: j as u64,
                            depth: rows.len() as u64,
                        },
                    }),
                    Some(row) => {
                        let (offset, scale) = phi::row_embedding(j).ok_or(Error::Overflow(i))?;
                        row.rule(local)?.map_affine(i, offset, scale)
                    }
                }
            }
            MapDescriptor::GDelta(g) => g.expanded.rule(i),
            MapDescriptor::Densify(d) => {
                if i <= d.n {
                    d.base.rule(i)
                } else if i <= d.radius {
                    Ok(CellRule {
                        cell: i,
                        kind: RuleKind::ConstantZero,
                    })
                } else if i == d.radius + 1 {
                    Ok(CellRule {
                        cell: i,
                        kind: RuleKind::Identity { source: i },
                    })
                } else {
                    let shift = d.radius + 2;
                    d.target.rule(i - shift)?.map_affine(i, shift, 1)
                }
            }
        }
    }

    /// Sorted neighborhood of cell `i`, gate samples included.
    pub fn neighborhood(&self, i: u64) -> Result<Vec<u64>> {
        self.rule(i)?.neighborhood(DEFAULT_NEIGHBORHOOD_CAP)
    }

    /// Unperturbed output of cell `i` given the symbols on its neighborhood,
    /// in the order returned by [`MapDescriptor::neighborhood`].
    pub fn rule_eval(&self, i: u64, local_word: &[Symbol]) -> Result<Symbol> {
        let rule = self.rule(i)?;
        let hood = rule.neighborhood(DEFAULT_NEIGHBORHOOD_CAP)?;
        if hood.len() != local_word.len() {
            return invalid(format!(
                "cell {i} reads {} cells, got a word of length {}",
                hood.len(),
                local_word.len()
            ));
        }
        let limit = self.alphabet().size();
        if let Some(bad) = local_word.iter().find(|&&s| s >= limit) {
            return invalid(format!("symbol {bad} is outside the alphabet"));
        }
        Ok(rule.eval_with(|c| {
            let pos = hood
                .binary_search(&c)
                .expect("rule reads its own neighborhood");
            local_word[pos]
        }))
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        self.describe_into(&mut out, 0);
        out
    }

    fn describe_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        match self {
            MapDescriptor::Maj { n } => {
                out.push_str(&format!("{pad}maj over {} cells\n", 2 * *n as u64 + 1));
            }
            MapDescriptor::Layered(l) => {
                let sched = match &l.schedule {
                    IntervalSchedule::Target { eps0 } => format!("target eps0 = {eps0}"),
                    IntervalSchedule::OpenSet {
                        intervals,
                        threshold,
                    } => format!(
                        "open set with {} intervals, threshold proxy {threshold}",
                        intervals.intervals.len()
                    ),
                };
                out.push_str(&format!(
                    "{pad}layered maj over {} cells, {sched}, |E| = {}^k\n",
                    l.arity(),
                    l.layout.growth
                ));
            }
            MapDescriptor::Interleave { rows } => {
                out.push_str(&format!("{pad}interleave of {} rows\n", rows.len()));
                for (j, r) in rows.iter().enumerate() {
                    out.push_str(&format!("{pad}  row {j}:\n"));
                    r.describe_into(out, depth + 2);
                }
            }
            MapDescriptor::GDelta(g) => {
                out.push_str(&format!(
                    "{pad}gdelta with {} levels, {} rows per level\n",
                    g.spec.levels.len(),
                    g.rows
                ));
            }
            MapDescriptor::Densify(d) => {
                out.push_str(&format!(
                    "{pad}densify n = {}, radius r = {}, identity at {}\n",
                    d.n,
                    d.radius,
                    d.radius + 1
                ));
                out.push_str(&format!("{pad}  base:\n"));
                d.base.describe_into(out, depth + 2);
                out.push_str(&format!("{pad}  target:\n"));
                d.target.describe_into(out, depth + 2);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rat;

    fn target(num: i64, den: i64) -> IntervalSchedule {
        IntervalSchedule::target(Rat::new(num, den).unwrap()).unwrap()
    }

    #[test]
    fn majority_neighborhoods() {
        let m = MapDescriptor::maj(1).unwrap();
        assert_eq!(m.neighborhood(0).unwrap(), vec![1, 2, 3]);
        let m = MapDescriptor::maj(2).unwrap();
        assert_eq!(m.neighborhood(1).unwrap(), vec![6, 7, 8, 9, 10]);
        assert!(m.neighborhood(u64::MAX / 2).is_err());
    }

    #[test]
    fn layered_neighborhood_of_cell_zero() {
        let m = MapDescriptor::layered(1, target(1, 5)).unwrap();
        assert_eq!(m.neighborhood(0).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(m.alphabet(), Alphabet::BitPair);
    }

    #[test]
    fn rule_eval_examples() {
        let m = MapDescriptor::maj(1).unwrap();
        assert_eq!(m.rule_eval(0, &[1, 1, 0]).unwrap(), 1);
        assert!(m.rule_eval(0, &[1, 1]).is_err());
        assert!(m.rule_eval(0, &[1, 2, 0]).is_err());

        // cell 4 sits at level 2: I = [0, 0.7] for eps0 = 0.2, |E| = 16
        let m = MapDescriptor::layered(1, target(1, 5)).unwrap();
        let hood = m.neighborhood(4).unwrap();
        assert_eq!(hood.len(), 3 + 16);
        let mut word = vec![0u8; hood.len()];
        word[..3].copy_from_slice(&[1, 1, 1]);
        // no marked sample cells: 2·mean = 0 ∈ I, output (0, 0)
        assert_eq!(m.rule_eval(4, &word).unwrap(), 0);
        // 8 of 16 marked: 2·mean = 1 ∉ I, majority (1, 0, 1) of first layers
        word[..3].copy_from_slice(&[1, 0, 1]);
        for w in word[3..11].iter_mut() {
            *w = 2;
        }
        assert_eq!(m.rule_eval(4, &word).unwrap(), 1);
    }

    #[test]
    fn interleave_neighborhoods() {
        let m = MapDescriptor::interleave(vec![
            MapDescriptor::maj(0).unwrap(),
            MapDescriptor::maj(1).unwrap(),
        ])
        .unwrap();
        assert_eq!(m.neighborhood(0).unwrap(), vec![2]);
        assert_eq!(m.neighborhood(1).unwrap(), vec![5, 9, 13]);
        // row 2 is beyond the truncation
        let rule = m.rule(3).unwrap();
        assert!(matches!(
            rule.kind,
            RuleKind::Truncated {
                row: 2,
                depth: 2,
                ..
            }
        ));
    }

    #[test]
    fn build_m_rows() {
        let m = MapDescriptor::build_m(4).unwrap();
        match &m {
            MapDescriptor::Interleave { rows } => {
                let ns: Vec<u32> = rows
                    .iter()
                    .map(|r| match r {
                        MapDescriptor::Maj { n } => *n,
                        _ => panic!("row is not a vote"),
                    })
                    .collect();
                assert_eq!(ns, vec![0, 1, 2, 3]);
            }
            _ => panic!("not an interleave"),
        }
        // cell 7 carries row 3, a vote over 7 cells
        assert_eq!(m.neighborhood(7).unwrap().len(), 7);
    }

    #[test]
    fn build_m_ie_with_empty_open_set() {
        let m = MapDescriptor::build_m_ie(&OpenSetSpec::default(), 3).unwrap();
        let MapDescriptor::Interleave { rows } = &m else {
            panic!("not an interleave")
        };
        assert_eq!(rows[0], MapDescriptor::Maj { n: 0 });
        for (j, row) in rows.iter().enumerate().skip(1) {
            let MapDescriptor::Layered(l) = row else {
                panic!("row {j} is not layered")
            };
            let l_j = l.schedule().threshold().unwrap().clone();
            assert_eq!(
                l.schedule().at(5),
                IntervalSet::closed(l_j.sub(&Rat::recip(5)), Rat::one())
            );
        }
    }

    #[test]
    fn empty_gdelta_is_the_full_open_set() {
        let f = MapDescriptor::build_f(&GDeltaSpec::default(), 3).unwrap();
        let MapDescriptor::GDelta(g) = &f else {
            panic!("not gdelta")
        };
        assert_eq!(
            g.expanded(),
            &MapDescriptor::build_m_ie(&OpenSetSpec::full(), 3).unwrap()
        );
    }

    #[test]
    fn densify_blocks() {
        for n in [0u64, 1, 5] {
            let d = MapDescriptor::densify(
                MapDescriptor::maj(1).unwrap(),
                MapDescriptor::maj(2).unwrap(),
                n,
            )
            .unwrap();
            let MapDescriptor::Densify(inner) = &d else {
                panic!("not densify")
            };
            let r = inner.radius();
            assert_eq!(r, 3 * n + 3);
            for c in 0..=n {
                assert_eq!(
                    d.rule(c).unwrap(),
                    MapDescriptor::maj(1).unwrap().rule(c).unwrap()
                );
            }
            for c in n + 1..=r {
                assert_eq!(d.rule(c).unwrap().kind, RuleKind::ConstantZero);
            }
            assert_eq!(
                d.rule(r + 1).unwrap().kind,
                RuleKind::Identity { source: r + 1 }
            );
            let shifted: Vec<u64> = d.neighborhood(r + 2).unwrap();
            let base: Vec<u64> = (1..=5).map(|c| c + r + 2).collect();
            assert_eq!(shifted, base);
        }
    }

    #[test]
    fn index_run_membership() {
        let run = IndexRun {
            start: 5,
            stride: 4,
            len: 3,
        };
        assert!(run.contains(5) && run.contains(13));
        assert!(!run.contains(17) && !run.contains(6) && !run.contains(1));
        assert_eq!(run.iter().collect::<Vec<_>>(), vec![5, 9, 13]);
    }

    #[test]
    fn gate_count_lookup() {
        let gate = Gate {
            level: 0,
            set: Arc::new(IntervalSet::empty()),
            sample: IndexRun::contiguous(0, 10),
            fire_counts: Arc::new(vec![(0, 2), (5, 5), (8, 10)]),
        };
        let fired: Vec<u64> = (0..=10).filter(|&k| gate.fires_on_count(k)).collect();
        assert_eq!(fired, vec![0, 1, 2, 5, 8, 9, 10]);
    }
}

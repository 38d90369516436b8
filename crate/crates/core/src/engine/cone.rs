//! Backward dependency cones.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::maps::{CellRule, MapDescriptor, RuleKind};

/// Default cap on the number of distinct cells in a cone.
pub const DEFAULT_CONE_CAP: u64 = 10_000_000;

/// Sorted cell indices with a dense translation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    cells: Vec<u64>,
}

impl SupportSet {
    pub fn from_cells(mut cells: Vec<u64>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        SupportSet { cells }
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: u64) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    /// Dense position of `cell`.
    pub fn index_of(&self, cell: u64) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }
}

/// Cone of a target set at horizon `t`.
///
/// `layers[t]` holds the targets and `layers[s - 1]` the cells read when
/// `layers[s]` is updated at step `s`; `layers[0]` is what the initial
/// configuration must provide.
#[derive(Clone, Debug)]
pub struct DependencyCone {
    pub layers: Vec<Vec<u64>>,
    pub support: SupportSet,
    pub(crate) rules: HashMap<u64, CellRule>,
}

impl DependencyCone {
    pub fn rule(&self, cell: u64) -> Option<&CellRule> {
        self.rules.get(&cell)
    }
}

/// Cells read by `rule` in one step; with `shortcut` the gate sample of a
/// layered cell is drawn rather than read.
pub(crate) fn reads(rule: &CellRule, shortcut: bool, cap: u64) -> Result<Vec<u64>> {
    match &rule.kind {
        RuleKind::Truncated { row, depth, .. } => Err(Error::Truncation {
            cell: rule.cell,
            row: *row,
            depth: *depth,
        }),
        RuleKind::Layered { votes, .. } if shortcut => Ok(votes.iter().collect()),
        _ => rule.neighborhood(cap),
    }
}

/// Backward closure of `targets` over `t` steps.
pub fn dependency_cone(
    map: &MapDescriptor,
    targets: &[u64],
    t: usize,
    shortcut: bool,
    cap: u64,
) -> Result<DependencyCone> {
    if targets.is_empty() {
        return invalid("at least one target cell is required");
    }
    if shortcut && !map.is_layered() {
        return invalid("the second-layer shortcut only applies to layered maps");
    }
    let mut rules: HashMap<u64, CellRule> = HashMap::new();
    let mut all: BTreeSet<u64> = targets.iter().copied().collect();
    let mut layers: Vec<Vec<u64>> = vec![Vec::new(); t + 1];
    layers[t] = all.iter().copied().collect();
    let check = |size: usize| -> Result<()> {
        if size as u64 > cap {
            Err(Error::Resource {
                what: "dependency cone",
                size: size as u64,
                cap,
            })
        } else {
            Ok(())
        }
    };
    check(all.len())?;
    for s in (1..=t).rev() {
        let mut below: BTreeSet<u64> = BTreeSet::new();
        for &cell in &layers[s] {
            let rule = match rules.entry(cell) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(map.rule(cell)?),
            };
            let remaining = cap.saturating_sub(below.len() as u64);
            for c in reads(rule, shortcut, remaining)? {
                below.insert(c);
            }
            check(below.len())?;
        }
        all.extend(below.iter().copied());
        check(all.len())?;
        layers[s - 1] = below.into_iter().collect();
    }
    Ok(DependencyCone {
        layers,
        support: SupportSet::from_cells(all.into_iter().collect()),
        rules,
    })
}

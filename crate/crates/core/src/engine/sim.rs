//! Compiled update plans and the per-sample loops.

use std::sync::Arc;

use crate::error::Result;
use crate::maps::{Alphabet, MapDescriptor, RuleKind, Symbol};
use crate::meanfield;

use super::cone::{dependency_cone, DependencyCone};
use super::noise::SampleNoise;
use super::InitSpec;

#[derive(Clone, Copy, Debug)]
enum Op {
    /// Votes are `flat[a..b]`.
    Maj {
        a: u32,
        b: u32,
    },
    /// Votes `flat[a..b]`, gate table entry `g`.
    Layered {
        a: u32,
        b: u32,
        g: u32,
    },
    Zero,
    Copy {
        src: u32,
    },
}

#[derive(Clone, Copy, Debug)]
struct Update {
    dense: u32,
    cell: u64,
    op: Op,
}

#[derive(Clone, Debug)]
struct GateEntry {
    counts: Arc<Vec<(u64, u64)>>,
    /// Sample cells `flat[a..b]` when the sample is read.
    a: u32,
    b: u32,
    /// Firing probability at step 1 per leg, and at later steps.
    p_first: [f64; 2],
    p_later: f64,
}

impl GateEntry {
    #[inline]
    fn fires_on(&self, k: u64) -> bool {
        let idx = self.counts.partition_point(|&(_, hi)| hi < k);
        idx < self.counts.len() && self.counts[idx].0 <= k
    }
}

/// A dependency cone compiled into dense per-step update lists.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub cone: DependencyCone,
    pub alphabet: Alphabet,
    pub shortcut: bool,
    pub eps: f64,
    steps: Vec<Vec<Update>>,
    flat: Vec<u32>,
    gates: Vec<GateEntry>,
    init_cells: Vec<(u32, u64)>,
    pub target_dense: Vec<u32>,
}

impl Plan {
    pub fn compile(
        map: &MapDescriptor,
        targets: &[u64],
        t: usize,
        eps: f64,
        shortcut: bool,
        cap: u64,
        inits: [&InitSpec; 2],
    ) -> Result<Plan> {
        let cone = dependency_cone(map, targets, t, shortcut, cap)?;
        let alphabet = map.alphabet();
        let dense = |c: u64| cone.support.index_of(c).expect("cone is closed") as u32;
        let mut flat: Vec<u32> = Vec::new();
        let mut gates: Vec<GateEntry> = Vec::new();
        let mut gate_cache: std::collections::HashMap<(u32, u64, usize), [f64; 3]> =
            Default::default();
        let mut steps = Vec::with_capacity(t);
        for s in 1..=t {
            let mut ups = Vec::with_capacity(cone.layers[s].len());
            for &cell in &cone.layers[s] {
                let rule = cone
                    .rule(cell)
                    .expect("rule recorded for every updated cell");
                let op = match &rule.kind {
                    RuleKind::Majority { votes } => {
                        let a = flat.len() as u32;
                        flat.extend(votes.iter().map(dense));
                        Op::Maj {
                            a,
                            b: flat.len() as u32,
                        }
                    }
                    RuleKind::Layered { votes, gate } => {
                        let a = flat.len() as u32;
                        flat.extend(votes.iter().map(dense));
                        let b = flat.len() as u32;
                        let (ga, gb) = if shortcut {
                            (0, 0)
                        } else {
                            let ga = flat.len() as u32;
                            flat.extend(gate.sample.iter().map(dense));
                            (ga, flat.len() as u32)
                        };
                        let m = gate.sample.len;
                        let key = (gate.level, m, Arc::as_ptr(&gate.set) as usize);
                        let probs = match gate_cache.get(&key) {
                            Some(p) => *p,
                            None => {
                                let p = if shortcut {
                                    [
                                        meanfield::gate_probability(m, inits[0].second, &gate.set)?,
                                        meanfield::gate_probability(m, inits[1].second, &gate.set)?,
                                        meanfield::p_exact(m, eps, &gate.set)?,
                                    ]
                                } else {
                                    [f64::NAN; 3]
                                };
                                gate_cache.insert(key, p);
                                p
                            }
                        };
                        gates.push(GateEntry {
                            counts: gate.fire_counts.clone(),
                            a: ga,
                            b: gb,
                            p_first: [probs[0], probs[1]],
                            p_later: probs[2],
                        });
                        Op::Layered {
                            a,
                            b,
                            g: gates.len() as u32 - 1,
                        }
                    }
                    RuleKind::ConstantZero => Op::Zero,
                    RuleKind::Identity { source } | RuleKind::Truncated { source, .. } => {
                        Op::Copy {
                            src: dense(*source),
                        }
                    }
                };
                ups.push(Update {
                    dense: dense(cell),
                    cell,
                    op,
                });
            }
            steps.push(ups);
        }
        let init_cells = cone.layers[0].iter().map(|&c| (dense(c), c)).collect();
        let target_dense = targets.iter().map(|&c| dense(c)).collect();
        Ok(Plan {
            cone,
            alphabet,
            shortcut,
            eps,
            steps,
            flat,
            gates,
            init_cells,
            target_dense,
        })
    }

    pub fn support_len(&self) -> usize {
        self.cone.support.len()
    }

    pub fn fill_initial(&self, vals: &mut [Symbol], noise: &SampleNoise, init: &InitSpec) {
        for &(d, cell) in &self.init_cells {
            vals[d as usize] = noise.initial(cell, init, self.alphabet);
        }
    }

    #[inline]
    fn majority(&self, vals: &[Symbol], a: u32, b: u32) -> Symbol {
        let votes = &self.flat[a as usize..b as usize];
        let ones = votes.iter().filter(|&&v| vals[v as usize] & 1 == 1).count();
        (2 * ones > votes.len()) as Symbol
    }

    #[inline]
    fn gate_fires(&self, vals: &[Symbol], g: &GateEntry, step: usize, leg: usize, u: f64) -> bool {
        if self.shortcut {
            let p = if step == 1 { g.p_first[leg] } else { g.p_later };
            u < p
        } else {
            let sample = &self.flat[g.a as usize..g.b as usize];
            let k = sample
                .iter()
                .filter(|&&v| vals[v as usize] & 2 != 0)
                .count() as u64;
            g.fires_on(k)
        }
    }

    #[inline]
    fn deterministic(
        &self,
        vals: &[Symbol],
        op: Op,
        step: usize,
        leg: usize,
        gate_u: f64,
    ) -> Symbol {
        match op {
            Op::Maj { a, b } => self.majority(vals, a, b),
            Op::Layered { a, b, g } => {
                if self.gate_fires(vals, &self.gates[g as usize], step, leg, gate_u) {
                    0
                } else {
                    self.majority(vals, a, b)
                }
            }
            Op::Zero => 0,
            Op::Copy { src } => vals[src as usize],
        }
    }

    /// Runs one sample; `vals` must hold the initial configuration.
    pub fn evolve(&self, vals: &mut [Symbol], scratch: &mut Vec<Symbol>, noise: &SampleNoise) {
        let size = self.alphabet.size();
        for (i, ups) in self.steps.iter().enumerate() {
            let step = i + 1;
            scratch.clear();
            for up in ups {
                let gate_u = if self.shortcut && matches!(up.op, Op::Layered { .. }) {
                    noise.gate_uniform(step as u64, up.cell)
                } else {
                    0.0
                };
                let det = self.deterministic(vals, up.op, step, 0, gate_u);
                let out = noise
                    .error(step as u64, up.cell, self.eps, size)
                    .unwrap_or(det);
                scratch.push(out);
            }
            for (up, &v) in ups.iter().zip(scratch.iter()) {
                vals[up.dense as usize] = v;
            }
        }
    }

    /// Runs both coupling legs on shared noise. Returns the number of updated
    /// cells whose second layers disagreed.
    pub fn evolve_pair(
        &self,
        a: &mut [Symbol],
        b: &mut [Symbol],
        scratch: &mut Vec<(Symbol, Symbol)>,
        noise: &SampleNoise,
    ) -> u64 {
        let size = self.alphabet.size();
        let mut mismatches = 0u64;
        for (i, ups) in self.steps.iter().enumerate() {
            let step = i + 1;
            scratch.clear();
            for up in ups {
                let gate_u = if self.shortcut && matches!(up.op, Op::Layered { .. }) {
                    noise.gate_uniform(step as u64, up.cell)
                } else {
                    0.0
                };
                let err = noise.error(step as u64, up.cell, self.eps, size);
                let xa = err.unwrap_or_else(|| self.deterministic(a, up.op, step, 0, gate_u));
                let xb = err.unwrap_or_else(|| self.deterministic(b, up.op, step, 1, gate_u));
                mismatches += ((xa ^ xb) >> 1) as u64 & 1;
                scratch.push((xa, xb));
            }
            for (up, &(xa, xb)) in ups.iter().zip(scratch.iter()) {
                a[up.dense as usize] = xa;
                b[up.dense as usize] = xb;
            }
        }
        mismatches
    }
}

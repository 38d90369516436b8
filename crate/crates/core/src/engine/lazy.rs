//! Top-down evaluation: a cell's value at time `s` is computed only when
//! something asks for it, the noise is consulted before the rule, and a vote
//! stops reading once its majority is settled.
//!
//! With the same seed the result is sample-for-sample the one the compiled
//! plan gives, since both read the same keyed noise. The work per sample is
//! the part of the cone that the noise leaves undecided, which at large `ε`
//! is tiny compared to the whole cone.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::maps::{Alphabet, CellRule, MapDescriptor, RuleKind, Symbol};

use super::noise::SampleNoise;
use super::InitSpec;

/// Deepest horizon the recursive evaluator accepts.
pub const MAX_LAZY_HORIZON: usize = 4096;

pub(crate) struct Evaluator<'a> {
    map: &'a MapDescriptor,
    alphabet: Alphabet,
    eps: f64,
    budget: u64,
    rules: HashMap<u64, CellRule>,
    memo: HashMap<(usize, u64), Symbol>,
    /// Plain votes never share cells, so nothing is asked for twice.
    tree: bool,
    nodes: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        map: &'a MapDescriptor,
        eps: f64,
        t: usize,
        budget: u64,
        shortcut: bool,
    ) -> Result<Self> {
        if shortcut {
            return invalid(
                "lazy evaluation reads gate samples; it does not combine with the shortcut",
            );
        }
        if t > MAX_LAZY_HORIZON {
            return invalid(format!(
                "lazy evaluation is limited to horizon {MAX_LAZY_HORIZON}"
            ));
        }
        Ok(Evaluator {
            map,
            alphabet: map.alphabet(),
            eps,
            budget,
            rules: HashMap::new(),
            memo: HashMap::new(),
            tree: matches!(map, MapDescriptor::Maj { .. }),
            nodes: 0,
        })
    }

    /// Forgets the values of the previous sample (or leg).
    pub fn reset(&mut self) {
        self.memo.clear();
        self.nodes = 0;
    }

    /// Value of `cell` at time `t`; values computed since the last reset are
    /// reused.
    pub fn value(
        &mut self,
        noise: &SampleNoise,
        init: &InitSpec,
        cell: u64,
        t: usize,
    ) -> Result<Symbol> {
        self.eval(noise, init, cell, t)
    }

    fn rule(&mut self, cell: u64) -> Result<CellRule> {
        if self.tree {
            return self.map.rule(cell);
        }
        if let Some(r) = self.rules.get(&cell) {
            return Ok(r.clone());
        }
        let r = self.map.rule(cell)?;
        self.rules.insert(cell, r.clone());
        Ok(r)
    }

    fn eval(
        &mut self,
        noise: &SampleNoise,
        init: &InitSpec,
        cell: u64,
        s: usize,
    ) -> Result<Symbol> {
        if s == 0 {
            return Ok(noise.initial(cell, init, self.alphabet));
        }
        if !self.tree {
            if let Some(&v) = self.memo.get(&(s, cell)) {
                return Ok(v);
            }
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Resource {
                what: "lazy evaluation nodes",
                size: self.nodes,
                cap: self.budget,
            });
        }
        let v = match noise.error(s as u64, cell, self.eps, self.alphabet.size()) {
            Some(e) => e,
            None => {
                let rule = self.rule(cell)?;
                match &rule.kind {
                    RuleKind::Majority { votes } => {
                        self.vote(noise, init, votes.iter(), votes.len, s)?
                    }
                    RuleKind::Layered { votes, gate } => {
                        let mut marked = 0u64;
                        for c in gate.sample.iter() {
                            marked += (self.eval(noise, init, c, s - 1)? >> 1) as u64 & 1;
                        }
                        if gate.fires_on_count(marked) {
                            0
                        } else {
                            self.vote(noise, init, votes.iter(), votes.len, s)?
                        }
                    }
                    RuleKind::ConstantZero => 0,
                    RuleKind::Identity { source } => self.eval(noise, init, *source, s - 1)?,
                    RuleKind::Truncated { row, depth, .. } => {
                        return Err(Error::Truncation {
                            cell,
                            row: *row,
                            depth: *depth,
                        })
                    }
                }
            }
        };
        if !self.tree {
            self.memo.insert((s, cell), v);
        }
        Ok(v)
    }

    fn vote(
        &mut self,
        noise: &SampleNoise,
        init: &InitSpec,
        votes: impl Iterator<Item = u64>,
        len: u64,
        s: usize,
    ) -> Result<Symbol> {
        // strict majority of ones needs more than len/2 of them
        let need = len / 2 + 1;
        let (mut ones, mut zeros) = (0u64, 0u64);
        for c in votes {
            if self.eval(noise, init, c, s - 1)? & 1 == 1 {
                ones += 1;
            } else {
                zeros += 1;
            }
            if ones >= need {
                return Ok(1);
            }
            if zeros > len - need {
                return Ok(0);
            }
        }
        Ok((2 * ones > len) as Symbol)
    }
}

//! Cone blocks `𝒩^t` and the sample sets `E_i` of the layered vote.

use serde::{Deserialize, Serialize};

use super::IndexRun;
use crate::error::{domain, Error, Result};

/// `𝒩^t = ⟦(N^t - 1)/(N - 1), (N^t - 1)/(N - 1) + N^t - 1⟧`, the cells reached
/// from cell 0 after `t` vote steps. `t = 0` gives `{0}`.
pub fn cone_block(arity: u64, t: u32) -> Result<(u64, u64)> {
    if arity < 3 || arity.is_multiple_of(2) {
        return domain(format!("cone blocks need an odd arity >= 3, got {arity}"));
    }
    let len = (arity as u128)
        .checked_pow(t)
        .filter(|&v| v <= u64::MAX as u128)
        .ok_or(Error::Overflow(t as u64))?;
    let start = (len - 1) / (arity as u128 - 1);
    let end = start + len - 1;
    if end > u64::MAX as u128 {
        return Err(Error::Overflow(t as u64));
    }
    Ok((start as u64, end as u64))
}

/// Level `k` such that `i ∈ 𝒩^k`.
pub fn level_of(arity: u64, i: u64) -> u32 {
    // block k ends at (N^{k+1} - 1)/(N - 1) - 1
    let n = arity as u128;
    let mut k = 0u32;
    let mut next_start: u128 = 1;
    let mut pow: u128 = 1;
    while (i as u128) >= next_start {
        pow *= n;
        next_start += pow;
        k += 1;
    }
    k
}

/// The inductive placement of the `E_i`.
///
/// Blocks are laid out level by level: all `E_i` with `i ∈ 𝒩^k` are adjacent
/// runs of `growth^k` cells, in cell order, starting right after both the
/// previous block and `max 𝒩^{k+1}`. That start rule keeps every `E` set of
/// level `k` clear of the vote cells `𝒩^{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ELayout {
    pub arity: u64,
    pub growth: u64,
}

impl ELayout {
    /// Default layout, `|E_i| = (N+1)^k` on `𝒩^k`.
    pub fn new(arity: u64) -> Result<Self> {
        Self::with_growth(arity, arity + 1)
    }

    pub fn with_growth(arity: u64, growth: u64) -> Result<Self> {
        if arity < 3 || arity.is_multiple_of(2) {
            return domain(format!("E-layout needs an odd arity >= 3, got {arity}"));
        }
        if growth < 2 {
            return domain(format!("E-layout growth must be at least 2, got {growth}"));
        }
        Ok(ELayout { arity, growth })
    }

    /// `|E_i|` for `i ∈ 𝒩^k`.
    pub fn sample_size(&self, k: u32) -> Result<u64> {
        self.growth.checked_pow(k).ok_or(Error::Overflow(k as u64))
    }

    /// First and last cell of all `E` sets belonging to level `k`.
    pub fn block_span(&self, k: u32) -> Result<(u64, u64)> {
        let mut end_prev: u64 = 0;
        let mut span = (0, 0);
        for level in 0..=k {
            let (_, reach) = cone_block(self.arity, level + 1)?;
            let start = end_prev
                .max(reach)
                .checked_add(1)
                .ok_or(Error::Overflow(level as u64))?;
            let (lo, hi) = cone_block(self.arity, level)?;
            let total = (hi - lo + 1)
                .checked_mul(self.sample_size(level)?)
                .ok_or(Error::Overflow(level as u64))?;
            let end = start
                .checked_add(total - 1)
                .ok_or(Error::Overflow(level as u64))?;
            span = (start, end);
            end_prev = end;
        }
        Ok(span)
    }

    /// `E_i` as a contiguous run.
    pub fn e_set(&self, i: u64) -> Result<IndexRun> {
        let k = level_of(self.arity, i);
        let (lo, _) = cone_block(self.arity, k)?;
        let size = self.sample_size(k)?;
        let (start, _) = self.block_span(k)?;
        let first = (i - lo)
            .checked_mul(size)
            .and_then(|o| o.checked_add(start))
            .ok_or(Error::Overflow(i))?;
        Ok(IndexRun::contiguous(first, size))
    }
}

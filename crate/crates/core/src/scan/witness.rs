//! Choosing the cell at which a layered map should show bistability.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::maps::{cone_block, LayeredMaj, MapDescriptor};
use crate::meanfield;

/// Largest gate sample the witness search evaluates.
pub const WITNESS_SAMPLE_CAP: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub cell: u64,
    pub level: u32,
    /// Gate probability `p` at the witness level.
    pub p: f64,
    /// `ε' = ε + (l - ε)/2`.
    pub eps_prime: f64,
    /// From all-zero the marginal stays at most `α_ε`.
    pub upper_from_zero: f64,
    /// From all-one the marginal stays at least `1 - α_{ε'}`.
    pub lower_from_one: f64,
}

impl Witness {
    /// Gap the claim guarantees at every horizon.
    pub fn gap_bound(&self) -> f64 {
        self.lower_from_one - self.upper_from_zero
    }
}

/// Left and right side of the smallness condition on `p`:
/// `p · 2g/(2g - 1) <= ((l - ε)/2)/(1 - ε)` with `g = g_n(1 - α_{ε'})`.
#[derive(Clone, Copy, Debug)]
pub struct ClaimCondition {
    pub n: u32,
    pub threshold: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub alpha_eps: f64,
    pub alpha_prime: f64,
    factor: f64,
    rhs: f64,
}

impl ClaimCondition {
    pub fn new(n: u32, eps: f64) -> Result<Self> {
        let threshold = meanfield::mf_threshold(n, 1e-9)?;
        if !(0.0..threshold).contains(&eps) {
            return Err(Error::NotFound(format!(
                "eps = {eps} is not below the threshold proxy {threshold:.9}"
            )));
        }
        let eps_prime = eps + (threshold - eps) / 2.0;
        let lower = |e: f64| -> Result<f64> {
            meanfield::lower_fixed_point(n, e)?
                .ok_or_else(|| Error::NotFound(format!("no lower fixed point at eps = {e}")))
        };
        let alpha_eps = if eps == 0.0 { 0.0 } else { lower(eps)? };
        let alpha_prime = lower(eps_prime)?;
        let g = meanfield::eval_g(n, 1.0 - alpha_prime)?;
        let factor = 2.0 * g / (2.0 * g - 1.0);
        let rhs = ((threshold - eps) / 2.0) / (1.0 - eps);
        Ok(ClaimCondition {
            n,
            threshold,
            eps,
            eps_prime,
            alpha_eps,
            alpha_prime,
            factor,
            rhs,
        })
    }

    pub fn holds(&self, p: f64) -> bool {
        p * self.factor <= self.rhs
    }
}

/// Smallest cell whose level, and every deeper level up to the search cap,
/// satisfies the claim's smallness condition on the gate probability.
pub fn witness_selection(map: &MapDescriptor, eps: f64) -> Result<Witness> {
    match map {
        MapDescriptor::Layered(l) => layered_witness(l, eps),
        _ => invalid("witness selection needs a layered map"),
    }
}

pub fn layered_witness(l: &LayeredMaj, eps: f64) -> Result<Witness> {
    let cond = ClaimCondition::new(l.n(), eps)?;
    let mut probs = Vec::new();
    let mut k = 0u32;
    loop {
        let m = match l.layout().sample_size(k) {
            Ok(m) if m <= WITNESS_SAMPLE_CAP => m,
            _ => break,
        };
        let (set, _) = l.gate_at_level(k)?;
        probs.push(meanfield::p_exact(m, eps, &set)?);
        k += 1;
    }
    // first level from which the condition holds all the way down
    let mut start = None;
    for (k, &p) in probs.iter().enumerate().rev() {
        if cond.holds(p) {
            start = Some(k);
        } else {
            break;
        }
    }
    let level = start.ok_or_else(|| {
        Error::NotFound(format!(
            "no level up to {} satisfies the gate condition at eps = {eps}",
            probs.len().saturating_sub(1)
        ))
    })?;
    let (cell, _) = cone_block(l.arity(), level as u32)?;
    Ok(Witness {
        cell,
        level: level as u32,
        p: probs[level],
        eps_prime: cond.eps_prime,
        upper_from_zero: cond.alpha_eps,
        lower_from_one: 1.0 - cond.alpha_prime,
    })
}

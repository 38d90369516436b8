//! Counter-based randomness: every draw is a hash of
//! `(seed, purpose, sample, step, cell)`, so any evaluation order, thread
//! count or coupling leg sees the same event for the same key.

use crate::maps::{Alphabet, Symbol};

use super::InitSpec;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

const TAG_INIT: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_GATE: u64 = 3;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(h: u64, v: u64) -> u64 {
    mix(h ^ v.wrapping_add(GOLDEN).wrapping_mul(GOLDEN))
}

#[inline]
fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives a child seed, e.g. one per scan row or per bistability leg.
pub fn sub_seed(seed: u64, label: u64) -> u64 {
    absorb(absorb(mix(seed), 0x5eed), label)
}

/// The master noise source of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
}

/// Draws of one sample; caches the per-sample prefix of the hash chain.
#[derive(Clone, Copy, Debug)]
pub struct SampleNoise {
    init: u64,
    noise: u64,
    gate: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { seed }
    }

    pub fn sample(&self, sample: u64) -> SampleNoise {
        let root = mix(self.seed ^ GOLDEN);
        SampleNoise {
            init: absorb(absorb(root, TAG_INIT), sample),
            noise: absorb(absorb(root, TAG_NOISE), sample),
            gate: absorb(absorb(root, TAG_GATE), sample),
        }
    }
}

impl SampleNoise {
    #[inline]
    fn key(base: u64, step: u64, cell: u64) -> u64 {
        absorb(absorb(base, step), cell)
    }

    /// Perturbation at `(step, cell)`: `Some(symbol)` when an error occurs,
    /// with the replacement uniform over the alphabet.
    #[inline]
    pub fn error(&self, step: u64, cell: u64, eps: f64, alphabet_size: u8) -> Option<Symbol> {
        let h = Self::key(self.noise, step, cell);
        if unit(h) < eps {
            Some((h as u8) & (alphabet_size - 1))
        } else {
            None
        }
    }

    /// Uniform used to draw a shortcut gate at `(step, cell)`.
    #[inline]
    pub fn gate_uniform(&self, step: u64, cell: u64) -> f64 {
        unit(Self::key(self.gate, step, cell))
    }

    /// Initial symbol of `cell` under a product law. Both layers are driven by
    /// fixed uniforms, so two initial laws are monotonically coupled.
    #[inline]
    pub fn initial(&self, cell: u64, init: &InitSpec, alphabet: Alphabet) -> Symbol {
        let h = Self::key(self.init, 0, cell);
        let u1 = unit(h);
        let u2 = unit(mix(h ^ GOLDEN));
        let first = (u1 < init.first) as Symbol;
        let second = match alphabet {
            Alphabet::Binary => 0,
            Alphabet::BitPair => (u2 < init.second) as Symbol,
        };
        first | (second << 1)
    }
}

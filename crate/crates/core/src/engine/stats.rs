//! Binomial proportion estimates with Wilson score intervals.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A frequency with its Wilson 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    /// Wilson score interval; `trials = 0` yields the vacuous `[0, 1]`.
    pub fn wilson(successes: u64, trials: u64) -> Estimate {
        if trials == 0 {
            return Estimate {
                successes,
                trials,
                value: f64::NAN,
                lo: 0.0,
                hi: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Estimate {
            successes,
            trials,
            value: p,
            lo: if successes == 0 {
                0.0
            } else {
                (centre - half).max(0.0)
            },
            hi: if successes >= trials {
                1.0
            } else {
                (centre + half).min(1.0)
            },
        }
    }

    /// Standard-error equivalent of the interval: half-width over `z`.
    pub fn sigma(&self) -> f64 {
        (self.hi - self.lo) / (2.0 * Z95)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A derived quantity with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval95 {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval95 {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Newcombe's hybrid score interval for `p_a - p_b`, independent samples.
pub fn difference(a: &Estimate, b: &Estimate) -> Interval95 {
    let d = a.value - b.value;
    let lo = d - ((a.value - a.lo).powi(2) + (b.hi - b.value).powi(2)).sqrt();
    let hi = d + ((a.hi - a.value).powi(2) + (b.value - b.lo).powi(2)).sqrt();
    Interval95 {
        value: d,
        lo: lo.max(-1.0),
        hi: hi.min(1.0),
    }
}

/// Interval for `|p_a - p_b|`, folded from [`difference`].
pub fn abs_difference(a: &Estimate, b: &Estimate) -> Interval95 {
    let d = difference(a, b);
    let (lo, hi) = if d.lo >= 0.0 {
        (d.lo, d.hi)
    } else if d.hi <= 0.0 {
        (-d.hi, -d.lo)
    } else {
        (0.0, d.hi.max(-d.lo))
    };
    Interval95 {
        value: d.value.abs(),
        lo,
        hi,
    }
}

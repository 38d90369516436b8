//! Binomial probabilities that stay accurate for very large trial counts.
//!
//! The point masses use Loader's saddle-point form (Stirling remainder plus
//! the `bd0` deviance term) so `m` in the trillions costs the same as `m = 3`.
//! Range masses start at the point closest to the mode and walk outward with
//! the ratio recurrence, stopping once terms fall below double precision.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling series remainder: `ln n! - ((n + 1/2) ln n - n + ln sqrt(2 pi))`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        // n! is exact in f64 for n <= 15
        let mut ln_fact = 0.0;
        let mut k = 2.0;
        while k <= n {
            ln_fact += f64::ln(k);
            k += 1.0;
        }
        return ln_fact - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, evaluated without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `P(Bin(m, q) = k)`.
pub fn pmf(k: u64, m: u64, q: f64) -> f64 {
    if k > m {
        return 0.0;
    }
    let p = q;
    let qq = 1.0 - q;
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if qq <= 0.0 {
        return if k == m { 1.0 } else { 0.0 };
    }
    let n = m as f64;
    let x = k as f64;
    if k == 0 {
        if m == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 {
            -bd0(n, n * qq) - n * p
        } else {
            n * qq.ln()
        };
        return lc.exp();
    }
    if k == m {
        let lc = if qq < 0.1 {
            -bd0(n, n * p) - n * qq
        } else {
            n * p.ln()
        };
        return lc.exp();
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * qq);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / n).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `P(lo <= Bin(m, q) <= hi)`; empty when `lo > hi`.
pub fn range_mass(m: u64, q: f64, lo: u64, hi: u64) -> f64 {
    let hi = hi.min(m);
    if lo > hi {
        return 0.0;
    }
    if q <= 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if q >= 1.0 {
        return if hi == m { 1.0 } else { 0.0 };
    }
    let mode = (((m as f64) + 1.0) * q).floor().min(m as f64) as u64;
    let start = mode.clamp(lo, hi);
    let first = pmf(start, m, q);
    if first == 0.0 {
        // the whole range sits in a tail beyond double range
        return 0.0;
    }
    let odds = q / (1.0 - q);
    let mut total = first;

    let mut term = first;
    let mut k = start;
    while k < hi {
        term *= (m - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        total += term;
        if k > mode && term <= total * 1e-18 {
            break;
        }
    }

    let mut term = first;
    let mut k = start;
    while k > lo {
        term *= k as f64 / (m - k + 1) as f64 / odds;
        k -= 1;
        total += term;
        if k < mode && term <= total * 1e-18 {
            break;
        }
    }
    total.min(1.0)
}

/// Mass of a union of disjoint count ranges.
pub fn ranges_mass(m: u64, q: f64, ranges: &[(u64, u64)]) -> f64 {
    let total: f64 = ranges.iter().map(|&(a, b)| range_mass(m, q, a, b)).sum();
    total.clamp(0.0, 1.0)
}

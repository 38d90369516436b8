//! Exact analytic layer for the noisy block-majority maps.
//!
//! A majority over `2n+1` disjoint cells preserves product measures, so the
//! per-cell probability of a first-layer `1` evolves under the scalar map
//! `h(x) = ε/2 + (1-ε) g_n(x)`, with `g_n(x) = P(Bin(2n+1, x) >= n+1)`.
//! Bernoulli invariant measures are exactly the roots of `P(x) = h(x) - x`.

use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{domain, Error, Result};
use crate::rational::IntervalSet;

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-6;
/// Largest gate sample whose firing probability is summed exactly.
pub const MAX_EXACT_SAMPLE: u64 = 1 << 44;

/// Arity and noise rate of a majority vote over `2n+1` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityParams {
    pub n: u32,
    pub epsilon: f64,
}

impl MajorityParams {
    pub fn new(n: u32, epsilon: f64) -> Result<Self> {
        check_unit("epsilon", epsilon)?;
        Ok(MajorityParams { n, epsilon })
    }

    pub fn arity(&self) -> u64 {
        2 * self.n as u64 + 1
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return domain(format!("{name} = {v} is outside [0, 1]"));
    }
    Ok(())
}

fn upper_tail(n: u32, x: f64) -> f64 {
    let big_n = 2 * n as u64 + 1;
    let first = n as u64 + 1;
    let mut term = binomial::pmf(first, big_n, x);
    let odds = x / (1.0 - x);
    let mut sum = term;
    for k in first..big_n {
        term *= (big_n - k) as f64 / (k + 1) as f64 * odds;
        sum += term;
        if term <= sum * 1e-18 {
            break;
        }
    }
    sum
}

/// `g_n(x) = P(Bin(2n+1, x) >= n+1)`.
pub fn eval_g(n: u32, x: f64) -> Result<f64> {
    check_unit("x", x)?;
    Ok(g_unchecked(n, x))
}

fn g_unchecked(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x == 1.0 {
        1.0
    } else if x > 0.5 {
        // g(x) = 1 - g(1-x) since 2n+1 is odd
        1.0 - upper_tail(n, 1.0 - x)
    } else {
        upper_tail(n, x)
    }
}

/// `g_n'(x) = (2n+1) * P(Bin(2n, x) = n)`.
pub fn g_derivative(n: u32, x: f64) -> Result<f64> {
    check_unit("x", x)?;
    let big_n = 2 * n as u64 + 1;
    Ok(big_n as f64 * binomial::pmf(n as u64, 2 * n as u64, x))
}

/// `h_{n,ε}(x) = ε/2 + (1-ε) g_n(x)`.
pub fn eval_h(n: u32, eps: f64, x: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    check_unit("x", x)?;
    Ok(h_unchecked(n, eps, x))
}

fn h_unchecked(n: u32, eps: f64, x: f64) -> f64 {
    eps / 2.0 + (1.0 - eps) * g_unchecked(n, x)
}

pub fn h_derivative(n: u32, eps: f64, x: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    Ok((1.0 - eps) * g_derivative(n, x)?)
}

/// `P_n^ε(x) = h_{n,ε}(x) - x`.
pub fn eval_p(n: u32, eps: f64, x: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    check_unit("x", x)?;
    Ok(p_unchecked(n, eps, x))
}

fn p_unchecked(n: u32, eps: f64, x: f64) -> f64 {
    h_unchecked(n, eps, x) - x
}

/// Closed-form lower fixed point of the three-cell vote,
/// `α_ε = (1 - sqrt(1 - 2ε/(1-ε))) / 2`, legal for `0 <= ε <= 1/3`.
pub fn alpha_closed_form(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("eps = {eps} is outside [0, 1]"));
    }
    if eps == 1.0 {
        return domain("eps = 1 divides by zero in the closed form");
    }
    if eps > 1.0 / 3.0 {
        return domain(format!("eps = {eps} > 1/3 makes the radicand negative"));
    }
    // 1 - 2ε/(1-ε) rewritten as (1-3ε)/(1-ε)
    let radicand = ((1.0 - 3.0 * eps) / (1.0 - eps)).max(0.0);
    Ok(0.5 * (1.0 - radicand.sqrt()))
}

/// One Bernoulli invariant parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub value: f64,
    /// `|h'(value)| < 1`.
    pub stable: bool,
    /// Set when two roots collapsed onto this one (bifurcation point).
    pub degenerate: bool,
}

/// All roots of `P_n^ε` in `[0, 1]`, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub params: MajorityParams,
    pub roots: Vec<FixedPoint>,
}

impl FixedPointSet {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.value).collect()
    }

    /// The root strictly below one half, if the map is bistable.
    pub fn lower(&self) -> Option<f64> {
        self.roots
            .iter()
            .find(|r| r.value < 0.5 && !r.degenerate)
            .map(|r| r.value)
    }
}

fn bisect(n: u32, eps: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = p_unchecked(n, eps, lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = p_unchecked(n, eps, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    polish(n, eps, lo, hi)
}

/// A few guarded Newton steps inside the final bracket.
fn polish(n: u32, eps: f64, lo: f64, hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    let mut fx = p_unchecked(n, eps, x).abs();
    for _ in 0..8 {
        let d = (1.0 - eps) * g_derivative(n, x).unwrap_or(0.0) - 1.0;
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - p_unchecked(n, eps, x) / d;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let f_next = p_unchecked(n, eps, next).abs();
        if f_next >= fx {
            break;
        }
        x = next;
        fx = f_next;
    }
    x
}

/// Roots of `P_n^ε` on `[0, 1]`.
///
/// `P(1-x) = -P(x)`, so only `[0, 1/2)` is searched and the result mirrored.
/// The half-interval is bracketed on `4(2n+1)` grid cells (so the full
/// interval sees `8(2n+1)`), then each sign change is bisected to `tol` and
/// polished. A root that lands within `10·tol` of `1/2` is merged into it
/// and flagged degenerate.
pub fn find_fixed_points(n: u32, eps: f64, tol: f64) -> Result<FixedPointSet> {
    check_unit("eps", eps)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return domain(format!("tolerance {tol} must be positive"));
    }
    if n == 0 && eps == 0.0 {
        return domain("P_0^0 vanishes identically: every parameter is fixed");
    }
    let params = MajorityParams { n, epsilon: eps };
    let slope_half = (1.0 - eps) * g_derivative(n, 0.5)? - 1.0;
    let stable = |x: f64| ((1.0 - eps) * g_derivative(n, x).unwrap_or(f64::INFINITY)).abs() < 1.0;

    let cells = 4 * (2 * n as usize + 1);
    let grid: Vec<f64> = (0..cells).map(|k| 0.5 * k as f64 / cells as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| p_unchecked(n, eps, x)).collect();

    let mut left: Vec<f64> = Vec::new();
    for k in 0..cells {
        if values[k] == 0.0 {
            left.push(grid[k]);
            continue;
        }
        let (right_x, right_v) = if k + 1 < cells {
            (grid[k + 1], values[k + 1])
        } else {
            // sign just left of 1/2 is fixed by the slope there
            if slope_half == 0.0 {
                continue;
            }
            let mut eta = 0.25 * (0.5 - grid[k]);
            let want_neg = slope_half > 0.0;
            let mut found = None;
            while eta > tol {
                let x = 0.5 - eta;
                let v = p_unchecked(n, eps, x);
                if v != 0.0 && (v < 0.0) == want_neg {
                    found = Some((x, v));
                    break;
                }
                eta *= 0.25;
            }
            match found {
                Some(p) => p,
                None => continue,
            }
        };
        if right_v != 0.0 && (values[k] > 0.0) != (right_v > 0.0) {
            left.push(bisect(n, eps, grid[k], right_x, tol));
        }
    }
    left.sort_by(|a, b| a.total_cmp(b));
    left.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let mut degenerate_half = slope_half == 0.0;
    left.retain(|&r| {
        if 0.5 - r < 10.0 * tol {
            degenerate_half = true;
            false
        } else {
            true
        }
    });

    let mut roots: Vec<FixedPoint> = left
        .iter()
        .map(|&r| FixedPoint {
            value: r,
            stable: stable(r),
            degenerate: false,
        })
        .collect();
    roots.push(FixedPoint {
        value: 0.5,
        stable: stable(0.5),
        degenerate: degenerate_half,
    });
    roots.extend(left.iter().rev().map(|&r| FixedPoint {
        value: 1.0 - r,
        stable: stable(r),
        degenerate: false,
    }));
    Ok(FixedPointSet { params, roots })
}

/// Lower fixed point `α_{n,ε} < 1/2`, when it exists.
pub fn lower_fixed_point(n: u32, eps: f64) -> Result<Option<f64>> {
    Ok(find_fixed_points(n, eps, DEFAULT_ROOT_TOL)?.lower())
}

/// Mean-field threshold: the supremum of `ε` for which `P_n^ε` keeps a root
/// below one half, located by bisection over `ε`.
///
/// Having several Bernoulli invariant measures rules out uniqueness, so the
/// value is a lower bound for the infimum of the uniqueness set.
pub fn mf_threshold(n: u32, tol: f64) -> Result<f64> {
    if n == 0 {
        return domain("the threshold needs n >= 1; the one-cell vote is a shift");
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return domain(format!("tolerance {tol} must be positive"));
    }
    let bistable = |eps: f64| -> Result<bool> {
        let set = find_fixed_points(n, eps, DEFAULT_ROOT_TOL)?;
        Ok(set
            .roots
            .iter()
            .any(|r| !r.degenerate && r.value < 0.5 - 10.0 * tol))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if bistable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A per-cell marginal trajectory indexed by time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalSequence {
    pub values: Vec<f64>,
}

impl MarginalSequence {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("sequence holds alpha0")
    }
}

/// `α0, h(α0), …, h^t(α0)`: the exact first-layer marginal of the plain vote
/// started from `λ_{α0}`.
pub fn marginal_recursion(n: u32, eps: f64, alpha0: f64, t: usize) -> Result<MarginalSequence> {
    layered_recursion(n, eps, 0.0, alpha0, t)
}

/// Iterates `α ↦ ε/2 + (1-ε)(1-p) g_n(α)`: the marginal at a cell whose gate
/// fires with probability `p` at every step.
pub fn layered_recursion(
    n: u32,
    eps: f64,
    p: f64,
    alpha0: f64,
    t: usize,
) -> Result<MarginalSequence> {
    check_unit("eps", eps)?;
    check_unit("p", p)?;
    check_unit("alpha0", alpha0)?;
    let mut values = Vec::with_capacity(t + 1);
    let mut a = alpha0;
    values.push(a);
    for _ in 0..t {
        a = eps / 2.0 + (1.0 - eps) * (1.0 - p) * g_unchecked(n, a);
        values.push(a);
    }
    Ok(MarginalSequence { values })
}

/// `P(2·mean ∈ I)` where the mean is over `sample_size` independent
/// Bernoulli(`q`) bits. Membership of each `2k/m` is decided exactly.
pub fn gate_probability(sample_size: u64, q: f64, set: &IntervalSet) -> Result<f64> {
    check_unit("q", q)?;
    if sample_size == 0 {
        return domain("gate sample size must be at least 1");
    }
    if sample_size > MAX_EXACT_SAMPLE {
        return Err(Error::Resource {
            what: "exact gate sample",
            size: sample_size,
            cap: MAX_EXACT_SAMPLE,
        });
    }
    let ranges = set.doubled_mean_counts(sample_size);
    Ok(binomial::ranges_mass(sample_size, q, &ranges))
}

/// Gate probability once the second layer is stationary: the sample bits are
/// Bernoulli(`ε/2`).
pub fn p_exact(sample_size: u64, eps: f64, set: &IntervalSet) -> Result<f64> {
    check_unit("eps", eps)?;
    gate_probability(sample_size, eps / 2.0, set)
}

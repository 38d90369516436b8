//! Exact answers at small scale: per-cell marginals for the block-disjoint
//! vote family, stationary laws of finite self-contained blocks, and the
//! analytic gap bound.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::engine::InitSpec;
use crate::error::{domain, invalid, Error, Result};
use crate::maps::{level_of, phi_inv, Alphabet, LayeredMaj, MapDescriptor, Symbol};
use crate::meanfield;

/// Default cap on finite-chain state counts.
pub const DEFAULT_STATE_CAP: u64 = 1 << 20;
/// Residual at which power iteration stops.
pub const POWER_TOL: f64 = 1e-12;
const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Gate probability of a layered level at step `s`: step 1 reads the initial
/// second layer, later steps the stationary Bernoulli(`ε/2`) one.
pub fn layered_gate_probability(
    l: &LayeredMaj,
    eps: f64,
    init_second: f64,
    level: u32,
    s: usize,
) -> Result<f64> {
    let m = l.layout().sample_size(level)?;
    let (set, _) = l.gate_at_level(level)?;
    if s <= 1 {
        meanfield::gate_probability(m, init_second, &set)
    } else {
        meanfield::p_exact(m, eps, &set)
    }
}

/// First-layer marginal at time `t` of any cell at cone level `level`.
///
/// A cell at level `k` reads votes at level `k+1`, so the value at time `t`
/// unrolls into one level per step; votes of distinct cells never share
/// cells and every gate reads cells outside the vote cone, which makes the
/// per-level recursion exact.
pub fn layered_level_marginal(
    l: &LayeredMaj,
    eps: f64,
    init: &InitSpec,
    level: u32,
    t: usize,
) -> Result<f64> {
    check_eps(eps)?;
    init.validate()?;
    let mut a = init.first;
    for d in (0..t).rev() {
        let lvl = level
            .checked_add(d as u32)
            .ok_or(Error::Overflow(level as u64))?;
        let s = t - d;
        let p = layered_gate_probability(l, eps, init.second, lvl, s)?;
        a = eps / 2.0 + (1.0 - eps) * (1.0 - p) * meanfield::eval_g(l.n(), a)?;
    }
    Ok(a)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("eps = {eps} is outside [0, 1]"));
    }
    Ok(())
}

/// Exact first-layer marginal `P(x_c^t = 1)` for each requested cell.
///
/// Defined for plain and layered votes and for interleaves/G_δ stacks of
/// them; densify blocks break the disjoint-neighborhood structure and are
/// rejected.
pub fn exact_marginals(
    map: &MapDescriptor,
    eps: f64,
    init: &InitSpec,
    t: usize,
    cells: &[u64],
) -> Result<Vec<f64>> {
    check_eps(eps)?;
    init.validate()?;
    cells
        .iter()
        .map(|&c| exact_marginal(map, eps, init, t, c))
        .collect()
}

fn exact_marginal(
    map: &MapDescriptor,
    eps: f64,
    init: &InitSpec,
    t: usize,
    cell: u64,
) -> Result<f64> {
    match map {
        MapDescriptor::Maj { n } => {
            Ok(meanfield::marginal_recursion(*n, eps, init.first, t)?.last())
        }
        MapDescriptor::Layered(l) => {
            layered_level_marginal(l, eps, init, level_of(l.arity(), cell), t)
        }
        MapDescriptor::Interleave { rows } => {
            let (i, j) = phi_inv(cell);
            match rows.get(j as usize) {
                Some(row) if t == 0 || row_is_exact(row) => exact_marginal(row, eps, init, t, i),
                Some(_) => invalid("interleave rows must themselves be exactly solvable"),
                None if t == 0 => Ok(init.first),
                None => Err(Error::Truncation {
                    cell,
                    row: j as u64,
                    depth: rows.len() as u64,
                }),
            }
        }
        MapDescriptor::GDelta(g) => exact_marginal(g.expanded(), eps, init, t, cell),
        MapDescriptor::Densify(_) => {
            invalid("densify blocks share cells between neighborhoods; no exact recursion")
        }
    }
}

fn row_is_exact(map: &MapDescriptor) -> bool {
    match map {
        MapDescriptor::Maj { .. } | MapDescriptor::Layered(_) => true,
        MapDescriptor::Interleave { rows } => rows.iter().all(row_is_exact),
        MapDescriptor::GDelta(g) => row_is_exact(g.expanded()),
        MapDescriptor::Densify(_) => false,
    }
}

/// Whether [`exact_marginals`] applies to `map`.
pub fn is_exactly_solvable(map: &MapDescriptor) -> bool {
    row_is_exact(map)
}

/// Exact finite-horizon bistability gap at `cell`: all-one versus all-zero
/// first layer, second layer Bernoulli(`second`) in both.
pub fn exact_gap(map: &MapDescriptor, eps: f64, t: usize, cell: u64, second: f64) -> Result<f64> {
    let one = exact_marginal(map, eps, &InitSpec::bernoulli(1.0, second)?, t, cell)?;
    let zero = exact_marginal(map, eps, &InitSpec::bernoulli(0.0, second)?, t, cell)?;
    Ok((one - zero).abs())
}

/// `1 - 2 α_{n,ε}`: how far apart the all-zero and all-one marginals stay at
/// every horizon while `ε` is below the mean-field threshold.
pub fn gap_lower_bound(n: u32, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return domain("the one-cell shift has no lower fixed point");
    }
    if n == 1 && eps <= 1.0 / 3.0 {
        return Ok(1.0 - 2.0 * meanfield::alpha_closed_form(eps)?);
    }
    let tol = meanfield::DEFAULT_THRESHOLD_TOL;
    let threshold = meanfield::mf_threshold(n, tol)?;
    if eps > threshold + tol {
        return domain(format!(
            "eps = {eps} is above the mean-field threshold {threshold:.6} for n = {n}"
        ));
    }
    match meanfield::lower_fixed_point(n, eps)? {
        Some(a) => Ok(1.0 - 2.0 * a),
        None => Ok(0.0),
    }
}

/// The perturbed map restricted to a finite self-contained block of cells.
#[derive(Clone, Debug)]
pub struct FiniteChain {
    cells: Vec<u64>,
    alphabet: Alphabet,
    eps: f64,
    /// Deterministic image of each state.
    image: Vec<u32>,
}

/// Stationary laws of a [`FiniteChain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub distributions: Vec<Vec<f64>>,
    /// `‖πP - π‖₁` for each distribution.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl FiniteChain {
    /// Chain on `cells`, which must contain every neighbor of every member.
    pub fn new(map: &MapDescriptor, cells: &[u64], eps: f64, cap: u64) -> Result<Self> {
        check_eps(eps)?;
        if cells.is_empty() {
            return invalid("a finite chain needs at least one cell");
        }
        let mut sorted = cells.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let alphabet = map.alphabet();
        let a = alphabet.size() as u64;
        let states = (a as u128)
            .checked_pow(sorted.len() as u32)
            .unwrap_or(u128::MAX);
        if states > cap as u128 {
            return Err(Error::Resource {
                what: "finite chain states",
                size: states.min(u64::MAX as u128) as u64,
                cap,
            });
        }
        let rules = sorted
            .iter()
            .map(|&c| {
                let rule = map.rule(c)?;
                let hood = rule.neighborhood(cap)?;
                if let Some(out) = hood.iter().find(|x| sorted.binary_search(x).is_err()) {
                    return invalid(format!("cell {c} reads {out}, outside the block"));
                }
                Ok(rule)
            })
            .collect::<Result<Vec<_>>>()?;
        let states = states as usize;
        let bits = if a == 2 { 1 } else { 2 };
        let mask = (a - 1) as usize;
        let pos = |c: u64| sorted.binary_search(&c).expect("checked above");
        let image = (0..states)
            .map(|x| {
                let get = |c: u64| ((x >> (bits * pos(c))) & mask) as Symbol;
                rules.iter().enumerate().fold(0u32, |acc, (k, r)| {
                    acc | ((r.eval_with(get) as u32) << (bits * k))
                })
            })
            .collect();
        Ok(FiniteChain {
            cells: sorted,
            alphabet,
            eps,
            image,
        })
    }

    /// The block `[lo, hi]` of consecutive cells.
    pub fn block(map: &MapDescriptor, lo: u64, hi: u64, eps: f64, cap: u64) -> Result<Self> {
        if lo > hi || hi - lo >= 64 {
            return invalid(format!("block [{lo}, {hi}] is empty or too long"));
        }
        let cells: Vec<u64> = (lo..=hi).collect();
        FiniteChain::new(map, &cells, eps, cap)
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn states(&self) -> usize {
        self.image.len()
    }

    pub fn deterministic_image(&self, x: usize) -> usize {
        self.image[x] as usize
    }

    fn bits(&self) -> usize {
        if self.alphabet.size() == 2 {
            1
        } else {
            2
        }
    }

    /// `π ↦ πP`.
    pub fn apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut rho = vec![0.0; pi.len()];
        for (x, &w) in pi.iter().enumerate() {
            rho[self.image[x] as usize] += w;
        }
        if self.eps == 0.0 {
            return rho;
        }
        let a = self.alphabet.size() as usize;
        let bits = self.bits();
        let mask = a - 1;
        let keep = 1.0 - self.eps;
        let spread = self.eps / a as f64;
        for k in 0..self.cells.len() {
            let shift = bits * k;
            for x in 0..rho.len() {
                if (x >> shift) & mask != 0 {
                    continue;
                }
                let total: f64 = (0..a).map(|v| rho[x | (v << shift)]).sum();
                for v in 0..a {
                    let y = x | (v << shift);
                    rho[y] = keep * rho[y] + spread * total;
                }
            }
        }
        rho
    }

    /// Transition row of state `x`, as a dense vector.
    pub fn row(&self, x: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.states()];
        e[x] = 1.0;
        self.apply(&e)
    }

    fn residual(&self, pi: &[f64]) -> f64 {
        self.apply(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// All stationary distributions: one for `ε > 0`, one per closed class
    /// (cycle of the deterministic map) for `ε = 0`.
    pub fn stationary(&self) -> Result<Stationary> {
        let s = self.states();
        if self.eps == 0.0 {
            let mut g: DiGraph<(), ()> = DiGraph::with_capacity(s, s);
            let nodes: Vec<NodeIndex> = (0..s).map(|_| g.add_node(())).collect();
            for x in 0..s {
                g.add_edge(nodes[x], nodes[self.image[x] as usize], ());
            }
            let comps = tarjan_scc(&g);
            let mut comp_of = vec![0usize; s];
            for (id, comp) in comps.iter().enumerate() {
                for n in comp {
                    comp_of[n.index()] = id;
                }
            }
            let mut distributions = Vec::new();
            for (id, comp) in comps.iter().enumerate() {
                let members: Vec<usize> = comp.iter().map(|n| n.index()).collect();
                // closed classes of a functional graph are its cycles; a lone
                // state qualifies only if it maps to itself
                if !members
                    .iter()
                    .all(|&x| comp_of[self.image[x] as usize] == id)
                {
                    continue;
                }
                let mut pi = vec![0.0; s];
                let w = 1.0 / members.len() as f64;
                for &x in &members {
                    pi[x] = w;
                }
                distributions.push(pi);
            }
            distributions.sort_by(|a, b| {
                let fa = a.iter().position(|&v| v > 0.0);
                let fb = b.iter().position(|&v| v > 0.0);
                fa.cmp(&fb)
            });
            let residuals = distributions.iter().map(|p| self.residual(p)).collect();
            return Ok(Stationary {
                distributions,
                residuals,
                iterations: 0,
            });
        }
        let mut pi = vec![1.0 / s as f64; s];
        let mut iterations = 0;
        loop {
            let next = self.apply(&pi);
            let r: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            iterations += 1;
            if r < POWER_TOL {
                break;
            }
            if iterations >= MAX_POWER_ITERATIONS {
                return Err(Error::Resource {
                    what: "power iterations",
                    size: iterations as u64,
                    cap: MAX_POWER_ITERATIONS as u64,
                });
            }
        }
        let total: f64 = pi.iter().sum();
        for v in pi.iter_mut() {
            *v /= total;
        }
        let residual = self.residual(&pi);
        Ok(Stationary {
            distributions: vec![pi],
            residuals: vec![residual],
            iterations,
        })
    }
}

/// Stationary laws of `chain`.
pub fn exact_finite_markov(chain: &FiniteChain) -> Result<Stationary> {
    chain.stationary()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::IntervalSchedule;
    use crate::rational::Rat;

    #[test]
    fn majority_marginals_follow_h() {
        let m = MapDescriptor::maj(1).unwrap();
        let init = InitSpec::bernoulli(0.3, 0.0).unwrap();
        let got = exact_marginals(&m, 0.1, &init, 4, &[0, 17]).unwrap();
        let want = meanfield::marginal_recursion(1, 0.1, 0.3, 4)
            .unwrap()
            .last();
        assert_eq!(got, vec![want, want]);
    }

    #[test]
    fn surely_firing_gate_gives_half_eps() {
        // target 0: level 1 has I = [0, 1] and |E| = 4; with an unmarked
        // second layer 2·mean = 0 and the step-1 gate fires surely
        let l = MapDescriptor::layered(1, IntervalSchedule::target(Rat::zero()).unwrap()).unwrap();
        let v = exact_marginals(&l, 0.3, &InitSpec::ALL_ONE, 1, &[1, 2, 3]).unwrap();
        assert_eq!(v, vec![0.15; 3]);
        // step 2 fires when at most 2 of 4 sample cells are marked
        let q: f64 = 0.15;
        let p2: f64 = (0..=2u32)
            .map(|k| {
                let c = [1.0, 4.0, 6.0][k as usize];
                c * q.powi(k as i32) * (1.0 - q).powi(4 - k as i32)
            })
            .sum();
        // level 2 at step 1: I = [0, 1/2], unmarked, fires surely
        let want = 0.15 + 0.7 * (1.0 - p2) * meanfield::eval_g(1, 0.15).unwrap();
        let v = exact_marginals(&l, 0.3, &InitSpec::ALL_ONE, 2, &[1]).unwrap();
        assert!((v[0] - want).abs() < 1e-14, "{} vs {want}", v[0]);
    }

    #[test]
    fn densify_is_rejected() {
        let d = MapDescriptor::densify(
            MapDescriptor::maj(1).unwrap(),
            MapDescriptor::maj(1).unwrap(),
            0,
        )
        .unwrap();
        assert!(exact_marginals(&d, 0.1, &InitSpec::ALL_ZERO, 2, &[0]).is_err());
        assert!(!is_exactly_solvable(&d));
    }

    #[test]
    fn interleave_delegates() {
        let m = MapDescriptor::build_m(3).unwrap();
        // cell 1 is row 1 (maj over 3 cells), cell 3 row 2 (maj over 5)
        let v = exact_marginals(&m, 0.2, &InitSpec::ALL_ONE, 3, &[1, 3]).unwrap();
        assert_eq!(
            v[0],
            meanfield::marginal_recursion(1, 0.2, 1.0, 3)
                .unwrap()
                .last()
        );
        assert_eq!(
            v[1],
            meanfield::marginal_recursion(2, 0.2, 1.0, 3)
                .unwrap()
                .last()
        );
        assert!(exact_marginals(&m, 0.2, &InitSpec::ALL_ONE, 3, &[7]).is_err());
    }

    #[test]
    fn gap_bound_examples() {
        assert_eq!(gap_lower_bound(1, 1.0 / 3.0).unwrap(), 0.0);
        assert_eq!(gap_lower_bound(1, 0.0).unwrap(), 1.0);
        let want = 1.0 - 2.0 * meanfield::alpha_closed_form(0.1).unwrap();
        assert_eq!(gap_lower_bound(1, 0.1).unwrap(), want);
        assert!(gap_lower_bound(1, 0.4).is_err());
        assert!(gap_lower_bound(2, 0.3).unwrap() > 0.0);
        assert!(gap_lower_bound(2, 0.6).is_err());
    }

    fn identity_cell() -> MapDescriptor {
        // densify(maj_1, maj_1, 0): cell 1 is the identity cell
        MapDescriptor::densify(
            MapDescriptor::maj(0).unwrap(),
            MapDescriptor::maj(0).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn identity_cell_chain() {
        let m = identity_cell();
        let chain = FiniteChain::new(&m, &[2], 0.3, DEFAULT_STATE_CAP).unwrap();
        let st = chain.stationary().unwrap();
        assert_eq!(st.distributions.len(), 1);
        for v in &st.distributions[0] {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let chain = FiniteChain::new(&m, &[2], 0.0, DEFAULT_STATE_CAP).unwrap();
        let st = chain.stationary().unwrap();
        assert_eq!(st.distributions, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn rows_are_stochastic() {
        let m = MapDescriptor::densify(
            MapDescriptor::maj(1).unwrap(),
            MapDescriptor::maj(1).unwrap(),
            0,
        )
        .unwrap();
        let chain = FiniteChain::block(&m, 0, 4, 0.1, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(chain.states(), 32);
        for x in 0..chain.states() {
            let s: f64 = chain.row(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_noise_is_uniform() {
        let m = MapDescriptor::densify(
            MapDescriptor::maj(1).unwrap(),
            MapDescriptor::maj(1).unwrap(),
            0,
        )
        .unwrap();
        let chain = FiniteChain::block(&m, 0, 4, 1.0, DEFAULT_STATE_CAP).unwrap();
        let st = chain.stationary().unwrap();
        for v in &st.distributions[0] {
            assert!((v - 1.0 / 32.0).abs() < 1e-14);
        }
    }

    #[test]
    fn open_blocks_are_rejected() {
        let m = MapDescriptor::maj(1).unwrap();
        assert!(FiniteChain::block(&m, 0, 2, 0.1, DEFAULT_STATE_CAP).is_err());
        assert!(FiniteChain::block(&m, 0, 40, 0.1, DEFAULT_STATE_CAP).is_err());
    }
}

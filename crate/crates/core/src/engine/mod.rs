//! Seeded Monte Carlo for the perturbed maps on finite dependency cones.
//!
//! Each sample evolves only the cells its targets depend on. Randomness is
//! keyed by `(seed, sample, step, cell)` (see [`noise`]), which makes results
//! independent of thread count and lets two coupling legs share every error
//! event exactly.

pub mod cone;
mod lazy;
pub mod noise;
mod sim;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::maps::{Alphabet, MapDescriptor, Symbol, DEFAULT_NEIGHBORHOOD_CAP};

pub use cone::{dependency_cone, DependencyCone, SupportSet, DEFAULT_CONE_CAP};
pub use lazy::MAX_LAZY_HORIZON;
pub use noise::{sub_seed, NoiseStream, SampleNoise};
pub use stats::{Estimate, Interval95};

use lazy::Evaluator;
use sim::Plan;

const CHUNK: u64 = 512;

/// Product initial law: first layer Bernoulli(`first`), second layer
/// Bernoulli(`second`), independent across cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub first: f64,
    #[serde(default)]
    pub second: f64,
}

impl InitSpec {
    pub const ALL_ZERO: InitSpec = InitSpec {
        first: 0.0,
        second: 0.0,
    };
    pub const ALL_ONE: InitSpec = InitSpec {
        first: 1.0,
        second: 0.0,
    };

    pub fn bernoulli(first: f64, second: f64) -> Result<Self> {
        let s = InitSpec { first, second };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("first", self.first), ("second", self.second)] {
            if !(0.0..=1.0).contains(&v) {
                return domain(format!(
                    "initial {name}-layer probability {v} is outside [0, 1]"
                ));
            }
        }
        Ok(())
    }

    /// `all0`, `all1`, or `bern:a` / `bern:a,b`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all0" => return Ok(InitSpec::ALL_ZERO),
            "all1" => return Ok(InitSpec::ALL_ONE),
            _ => {}
        }
        let body = s
            .strip_prefix("bern:")
            .ok_or_else(|| Error::Parse(format!("unknown initial law {s:?}")))?;
        let mut parts = body.split(',');
        let num = |p: Option<&str>| -> Result<Option<f64>> {
            match p {
                None => Ok(None),
                Some(x) => x
                    .trim()
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("bad probability {x:?}"))),
            }
        };
        let first = num(parts.next())?.ok_or_else(|| Error::Parse("missing probability".into()))?;
        let second = num(parts.next())?.unwrap_or(0.0);
        if parts.next().is_some() {
            return Err(Error::Parse(format!("too many fields in {s:?}")));
        }
        InitSpec::bernoulli(first, second).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Engine knobs that do not change the law being sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Draw layered gates from their exact law instead of reading `E` cells.
    pub shortcut: bool,
    /// Cap on cone size, or on cells evaluated per sample when lazy.
    pub cone_cap: u64,
    /// Evaluate top-down instead of compiling the cone.
    #[serde(default)]
    pub lazy: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            shortcut: false,
            cone_cap: DEFAULT_CONE_CAP,
            lazy: false,
        }
    }
}

/// Empirical law of one target cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMarginal {
    pub cell: u64,
    /// Count per symbol.
    pub counts: Vec<u64>,
    /// Frequency per symbol.
    pub symbols: Vec<Estimate>,
    /// Frequency of first-layer symbol 1.
    pub first_one: Estimate,
}

impl CellMarginal {
    fn from_counts(cell: u64, counts: &[u64], alphabet: Alphabet, samples: u64) -> Self {
        let counts = counts[..alphabet.size() as usize].to_vec();
        let ones: u64 = counts.iter().skip(1).step_by(2).sum();
        CellMarginal {
            cell,
            symbols: counts
                .iter()
                .map(|&c| Estimate::wilson(c, samples))
                .collect(),
            first_one: Estimate::wilson(ones, samples),
            counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub eps: f64,
    pub t: usize,
    pub samples: u64,
    pub seed: u64,
    pub shortcut: bool,
    pub alphabet: Alphabet,
    pub cone_size: usize,
    pub targets: Vec<CellMarginal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellAgreement {
    pub cell: u64,
    pub agree: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupleResult {
    pub eps: f64,
    pub t: usize,
    pub samples: u64,
    pub seed: u64,
    pub shortcut: bool,
    pub alphabet: Alphabet,
    pub cone_size: usize,
    pub agreement: Vec<CellAgreement>,
    /// Updated cells whose second layers differed between the legs.
    pub second_layer_mismatches: u64,
    pub leg_a: Vec<CellMarginal>,
    pub leg_b: Vec<CellMarginal>,
}

fn check_common(eps: f64, samples: u64, targets: &[u64]) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("eps = {eps} is outside [0, 1]"));
    }
    if samples == 0 {
        return invalid("samples must be at least 1");
    }
    if targets.is_empty() {
        return invalid("at least one target cell is required");
    }
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return invalid("target cells must be distinct");
    }
    Ok(())
}

fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(samples)))
        .collect()
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Empirical per-target marginals at horizon `t`.
#[allow(clippy::too_many_arguments)]
pub fn run(
    map: &MapDescriptor,
    init: &InitSpec,
    eps: f64,
    t: usize,
    targets: &[u64],
    samples: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<RunResult> {
    check_common(eps, samples, targets)?;
    init.validate()?;
    if opts.lazy {
        return run_lazy(map, init, eps, t, targets, samples, seed, opts);
    }
    let plan = Plan::compile(
        map,
        targets,
        t,
        eps,
        opts.shortcut,
        opts.cone_cap,
        [init, init],
    )?;
    let noise = NoiseStream::new(seed);
    let width = targets.len() * 4;
    let counts = chunks(samples)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut vals = vec![0 as Symbol; plan.support_len()];
            let mut scratch = Vec::new();
            let mut counts = vec![0u64; width];
            for s in lo..hi {
                let sn = noise.sample(s);
                plan.fill_initial(&mut vals, &sn, init);
                plan.evolve(&mut vals, &mut scratch, &sn);
                for (k, &d) in plan.target_dense.iter().enumerate() {
                    counts[4 * k + vals[d as usize] as usize] += 1;
                }
            }
            counts
        })
        .reduce(|| vec![0u64; width], add_counts);
    let alphabet = plan.alphabet;
    Ok(RunResult {
        eps,
        t,
        samples,
        seed,
        shortcut: opts.shortcut,
        alphabet,
        cone_size: plan.support_len(),
        targets: targets
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                CellMarginal::from_counts(c, &counts[4 * k..4 * k + 4], alphabet, samples)
            })
            .collect(),
    })
}

/// Grand coupling of two initial laws under shared noise.
#[allow(clippy::too_many_arguments)]
pub fn couple_run(
    map: &MapDescriptor,
    init_a: &InitSpec,
    init_b: &InitSpec,
    eps: f64,
    t: usize,
    targets: &[u64],
    samples: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<CoupleResult> {
    check_common(eps, samples, targets)?;
    init_a.validate()?;
    init_b.validate()?;
    if opts.lazy {
        return couple_lazy(map, [init_a, init_b], eps, t, targets, samples, seed, opts);
    }
    let plan = Plan::compile(
        map,
        targets,
        t,
        eps,
        opts.shortcut,
        opts.cone_cap,
        [init_a, init_b],
    )?;
    let noise = NoiseStream::new(seed);
    let nt = targets.len();
    // per target: 4 counts for each leg, then agreements; one trailing slot
    // for second-layer mismatches
    let width = nt * 9 + 1;
    let counts = chunks(samples)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut a = vec![0 as Symbol; plan.support_len()];
            let mut b = vec![0 as Symbol; plan.support_len()];
            let mut scratch = Vec::new();
            let mut counts = vec![0u64; width];
            for s in lo..hi {
                let sn = noise.sample(s);
                plan.fill_initial(&mut a, &sn, init_a);
                plan.fill_initial(&mut b, &sn, init_b);
                counts[width - 1] += plan.evolve_pair(&mut a, &mut b, &mut scratch, &sn);
                for (k, &d) in plan.target_dense.iter().enumerate() {
                    let (xa, xb) = (a[d as usize], b[d as usize]);
                    counts[4 * k + xa as usize] += 1;
                    counts[4 * nt + 4 * k + xb as usize] += 1;
                    counts[8 * nt + k] += (xa == xb) as u64;
                }
            }
            counts
        })
        .reduce(|| vec![0u64; width], add_counts);
    let alphabet = plan.alphabet;
    let leg = |base: usize| -> Vec<CellMarginal> {
        targets
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let o = base + 4 * k;
                CellMarginal::from_counts(c, &counts[o..o + 4], alphabet, samples)
            })
            .collect()
    };
    Ok(CoupleResult {
        eps,
        t,
        samples,
        seed,
        shortcut: opts.shortcut,
        alphabet,
        cone_size: plan.support_len(),
        agreement: targets
            .iter()
            .enumerate()
            .map(|(k, &c)| CellAgreement {
                cell: c,
                agree: Estimate::wilson(counts[8 * nt + k], samples),
            })
            .collect(),
        second_layer_mismatches: counts[width - 1],
        leg_a: leg(0),
        leg_b: leg(4 * nt),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_lazy(
    map: &MapDescriptor,
    init: &InitSpec,
    eps: f64,
    t: usize,
    targets: &[u64],
    samples: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<RunResult> {
    Evaluator::new(map, eps, t, opts.cone_cap, opts.shortcut)?;
    let noise = NoiseStream::new(seed);
    let width = targets.len() * 4;
    let counts = chunks(samples)
        .into_par_iter()
        .map(|(lo, hi)| -> Result<Vec<u64>> {
            let mut ev = Evaluator::new(map, eps, t, opts.cone_cap, false)?;
            let mut counts = vec![0u64; width];
            for s in lo..hi {
                let sn = noise.sample(s);
                ev.reset();
                for (k, &c) in targets.iter().enumerate() {
                    counts[4 * k + ev.value(&sn, init, c, t)? as usize] += 1;
                }
            }
            Ok(counts)
        })
        .try_reduce(|| vec![0u64; width], |a, b| Ok(add_counts(a, b)))?;
    let alphabet = map.alphabet();
    Ok(RunResult {
        eps,
        t,
        samples,
        seed,
        shortcut: false,
        alphabet,
        cone_size: 0,
        targets: targets
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                CellMarginal::from_counts(c, &counts[4 * k..4 * k + 4], alphabet, samples)
            })
            .collect(),
    })
}

/// Lazy coupling: both legs read the same noise. Second-layer mismatches are
/// not tracked and reported as zero.
#[allow(clippy::too_many_arguments)]
fn couple_lazy(
    map: &MapDescriptor,
    inits: [&InitSpec; 2],
    eps: f64,
    t: usize,
    targets: &[u64],
    samples: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<CoupleResult> {
    Evaluator::new(map, eps, t, opts.cone_cap, opts.shortcut)?;
    let noise = NoiseStream::new(seed);
    let nt = targets.len();
    let width = nt * 9;
    let counts = chunks(samples)
        .into_par_iter()
        .map(|(lo, hi)| -> Result<Vec<u64>> {
            let mut ev = Evaluator::new(map, eps, t, opts.cone_cap, false)?;
            let mut counts = vec![0u64; width];
            let mut legs = vec![[0 as Symbol; 2]; nt];
            for s in lo..hi {
                let sn = noise.sample(s);
                for (leg, init) in inits.iter().enumerate() {
                    ev.reset();
                    for (k, &c) in targets.iter().enumerate() {
                        legs[k][leg] = ev.value(&sn, init, c, t)?;
                    }
                }
                for (k, [xa, xb]) in legs.iter().enumerate() {
                    counts[4 * k + *xa as usize] += 1;
                    counts[4 * nt + 4 * k + *xb as usize] += 1;
                    counts[8 * nt + k] += (xa == xb) as u64;
                }
            }
            Ok(counts)
        })
        .try_reduce(|| vec![0u64; width], |a, b| Ok(add_counts(a, b)))?;
    let alphabet = map.alphabet();
    let leg = |base: usize| -> Vec<CellMarginal> {
        targets
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let o = base + 4 * k;
                CellMarginal::from_counts(c, &counts[o..o + 4], alphabet, samples)
            })
            .collect()
    };
    Ok(CoupleResult {
        eps,
        t,
        samples,
        seed,
        shortcut: false,
        alphabet,
        cone_size: 0,
        agreement: targets
            .iter()
            .enumerate()
            .map(|(k, &c)| CellAgreement {
                cell: c,
                agree: Estimate::wilson(counts[8 * nt + k], samples),
            })
            .collect(),
        second_layer_mismatches: 0,
        leg_a: leg(0),
        leg_b: leg(4 * nt),
    })
}

/// Configuration restricted to a live support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryState {
    pub support: SupportSet,
    pub values: Vec<Symbol>,
    pub time: u64,
}

impl TrajectoryState {
    /// Initial configuration on `cells` for one sample.
    pub fn initial(
        cells: Vec<u64>,
        init: &InitSpec,
        alphabet: Alphabet,
        noise: &NoiseStream,
        sample: u64,
    ) -> Self {
        let support = SupportSet::from_cells(cells);
        let sn = noise.sample(sample);
        let values = support
            .cells()
            .iter()
            .map(|&c| sn.initial(c, init, alphabet))
            .collect();
        TrajectoryState {
            support,
            values,
            time: 0,
        }
    }

    pub fn get(&self, cell: u64) -> Option<Symbol> {
        self.support.index_of(cell).map(|i| self.values[i])
    }
}

/// One application of the perturbed map to every live cell whose full
/// neighborhood is live; the rest drop out of the support.
pub fn step(
    map: &MapDescriptor,
    state: &TrajectoryState,
    eps: f64,
    noise: &NoiseStream,
    sample: u64,
) -> Result<TrajectoryState> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("eps = {eps} is outside [0, 1]"));
    }
    let alphabet = map.alphabet();
    let sn = noise.sample(sample);
    let now = state.time + 1;
    let mut cells = Vec::new();
    let mut values = Vec::new();
    for &cell in state.support.cells() {
        let rule = map.rule(cell)?;
        if let crate::maps::RuleKind::Truncated { row, depth, .. } = rule.kind {
            return Err(Error::Truncation { cell, row, depth });
        }
        let hood = rule.neighborhood(DEFAULT_NEIGHBORHOOD_CAP)?;
        if !hood.iter().all(|&c| state.support.contains(c)) {
            continue;
        }
        let det = rule.eval_with(|c| state.get(c).expect("neighborhood is live"));
        cells.push(cell);
        values.push(sn.error(now, cell, eps, alphabet.size()).unwrap_or(det));
    }
    Ok(TrajectoryState {
        support: SupportSet::from_cells(cells),
        values,
        time: now,
    })
}

/// A run described as a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Inline descriptor, or a path to one (resolved by the caller).
    pub map: MapRef,
    pub eps: f64,
    pub t: usize,
    pub targets: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub shortcut: bool,
    #[serde(default = "default_init")]
    pub init: InitSpec,
    /// Second initial law, for coupled runs.
    #[serde(default)]
    pub init_b: Option<InitSpec>,
    #[serde(default = "default_cap")]
    pub cone_cap: u64,
    #[serde(default)]
    pub lazy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapRef {
    Path(String),
    Inline(serde_json::Value),
}

fn default_init() -> InitSpec {
    InitSpec::ALL_ZERO
}

fn default_cap() -> u64 {
    DEFAULT_CONE_CAP
}

/// Upper bounds applied to run configurations read from files.
pub const MAX_SAMPLES: u64 = 1 << 40;
pub const MAX_HORIZON: usize = 1 << 16;

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_common(self.eps, self.samples, &self.targets)?;
        self.init.validate()?;
        if let Some(b) = &self.init_b {
            b.validate()?;
        }
        if self.samples > MAX_SAMPLES {
            return invalid(format!("samples {} exceed {MAX_SAMPLES}", self.samples));
        }
        if self.t > MAX_HORIZON {
            return invalid(format!("horizon {} exceeds {MAX_HORIZON}", self.t));
        }
        Ok(())
    }

    pub fn options(&self) -> SimOptions {
        SimOptions {
            shortcut: self.shortcut,
            cone_cap: self.cone_cap,
            lazy: self.lazy,
        }
    }

    /// The inline descriptor, if the config carries one.
    pub fn inline_map(&self) -> Result<Option<MapDescriptor>> {
        match &self.map {
            MapRef::Inline(v) => MapDescriptor::from_json_value(v.clone()).map(Some),
            MapRef::Path(_) => Ok(None),
        }
    }
}

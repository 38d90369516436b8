//! Gate interval schedules `t ↦ I_{N^t}` and the open-set specifications
//! they are built from.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::meanfield;
use crate::rational::{Interval, IntervalSet, Rat};

/// Upper bound on generating intervals per open set.
pub const MAX_INTERVALS: usize = 4096;

/// A finite union of rational open intervals `(a_i, b_i) ⊆ [0, 1]`.
///
/// Order matters: the schedule admits interval `i` from level `i` on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpenSetSpec {
    pub intervals: Vec<(Rat, Rat)>,
}

impl OpenSetSpec {
    pub fn new(intervals: Vec<(Rat, Rat)>) -> Result<Self> {
        if intervals.len() > MAX_INTERVALS {
            return Err(Error::Invalid(format!(
                "{} intervals exceed the limit of {MAX_INTERVALS}",
                intervals.len()
            )));
        }
        for (a, b) in &intervals {
            if !a.is_unit() || !b.is_unit() {
                return Err(Error::Invalid(format!("interval ({a}, {b}) leaves [0, 1]")));
            }
        }
        Ok(OpenSetSpec { intervals })
    }

    pub fn full() -> Self {
        OpenSetSpec {
            intervals: vec![(Rat::zero(), Rat::one())],
        }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        self.intervals.iter().any(|(a, b)| x > a && x < b)
    }

    fn from_quads(quads: Vec<[i64; 4]>) -> Result<Self> {
        let mut intervals = Vec::with_capacity(quads.len());
        for [an, ad, bn, bd] in quads {
            if ad <= 0 || bd <= 0 {
                return Err(Error::Invalid(
                    "interval denominators must be positive".into(),
                ));
            }
            intervals.push((Rat::new(an, ad)?, Rat::new(bn, bd)?));
        }
        OpenSetSpec::new(intervals)
    }

    fn to_quads(&self) -> Option<Vec<[i64; 4]>> {
        self.intervals
            .iter()
            .map(|(a, b)| {
                let (an, ad) = a.to_pair()?;
                let (bn, bd) = b.to_pair()?;
                Some([an, ad, bn, bd])
            })
            .collect()
    }
}

impl Serialize for OpenSetSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_quads()
            .ok_or_else(|| serde::ser::Error::custom("interval endpoint exceeds i64"))?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OpenSetSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let quads = Vec::<[i64; 4]>::deserialize(d)?;
        OpenSetSpec::from_quads(quads).map_err(serde::de::Error::custom)
    }
}

/// Levels of a G_δ set `G = ∩_j (O_j ∪ {1})`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GDeltaSpec {
    pub levels: Vec<OpenSetSpec>,
}

/// Upper bound on G_δ levels (outer interleave rows).
pub const MAX_LEVELS: usize = 64;

impl GDeltaSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: GDeltaSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() > MAX_LEVELS {
            return Err(Error::Invalid(format!(
                "{} levels exceed the limit of {MAX_LEVELS}",
                self.levels.len()
            )));
        }
        Ok(())
    }

    /// Membership in `∩_j (O_j ∪ {1})`.
    pub fn contains(&self, x: &Rat) -> bool {
        *x == Rat::one() || self.levels.iter().all(|o| o.contains(x))
    }
}

/// `t ↦ I_{N^t}` for the cells of one cone block.
///
/// Level `0` has no `1/t` offset to speak of; it reuses the level-1 set, which
/// for both families is all of `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntervalSchedule {
    /// `[ε₀ - 1/t, ε₀ + 1/t] ∩ [0, 1]`.
    Target { eps0: Rat },
    /// `∪_{i≤t} [a_i + 1/t, b_i - 1/t] ∪ [l - 1/t, 1]`, `l` the threshold proxy.
    OpenSet {
        intervals: OpenSetSpec,
        threshold: Rat,
    },
}

impl IntervalSchedule {
    pub fn target(eps0: Rat) -> Result<Self> {
        if !eps0.is_unit() {
            return domain(format!("target {eps0} is outside [0, 1]"));
        }
        Ok(IntervalSchedule::Target { eps0 })
    }

    /// Open-set schedule for a vote over `2n+1` cells, with the mean-field
    /// threshold standing in for `l_n`.
    pub fn open_set(intervals: OpenSetSpec, n: u32) -> Result<Self> {
        Ok(IntervalSchedule::OpenSet {
            intervals,
            threshold: proxy_threshold(n)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IntervalSchedule::Target { eps0 } if !eps0.is_unit() => {
                domain(format!("target {eps0} is outside [0, 1]"))
            }
            IntervalSchedule::OpenSet { threshold, .. } if !threshold.is_unit() => {
                domain(format!("threshold {threshold} is outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    /// `I` at cone level `t`.
    pub fn at(&self, t: u32) -> IntervalSet {
        let t = t.max(1) as u64;
        let eta = Rat::recip(t);
        match self {
            IntervalSchedule::Target { eps0 } => {
                IntervalSet::closed(eps0.sub(&eta).clamp_unit(), eps0.add(&eta).clamp_unit())
            }
            IntervalSchedule::OpenSet {
                intervals,
                threshold,
            } => {
                let mut pieces: Vec<Interval> = intervals
                    .intervals
                    .iter()
                    .take(t.saturating_add(1).min(usize::MAX as u64) as usize)
                    .map(|(a, b)| Interval::closed(a.add(&eta), b.sub(&eta)))
                    .collect();
                pieces.push(Interval::closed(
                    threshold.sub(&eta).clamp_unit(),
                    Rat::one(),
                ));
                IntervalSet::from_intervals(pieces)
            }
        }
    }

    /// Threshold the gate schedule was built around: `ε₀` or `l`.
    pub fn threshold(&self) -> Option<&Rat> {
        match self {
            IntervalSchedule::Target { .. } => None,
            IntervalSchedule::OpenSet { threshold, .. } => Some(threshold),
        }
    }
}

/// Mean-field threshold of the `2n+1` vote rounded down to a multiple of
/// `10^-9`, so it can live in exact gate arithmetic.
pub fn proxy_threshold(n: u32) -> Result<Rat> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Rat>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("proxy cache").get(&n) {
        return Ok(hit.clone());
    }
    let l = meanfield::mf_threshold(n, 1e-9)?;
    let r = Rat::floor_f64(l, 1_000_000_000)?;
    cache.lock().expect("proxy cache").insert(n, r.clone());
    Ok(r)
}

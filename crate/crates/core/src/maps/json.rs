//! JSON wire format for descriptors.
//!
//! Every node carries a `"type"` tag; rationals travel as `[num, den]` pairs
//! and open intervals as `[a_num, a_den, b_num, b_den]` quadruples.

use serde::{Deserialize, Serialize};

use super::{ELayout, GDeltaSpec, IntervalSchedule, MapDescriptor, OpenSetSpec};
use crate::error::{invalid, Result};
use crate::rational::Rat;

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawMap {
    Maj {
        n: u32,
    },
    Layered {
        n: u32,
        schedule: RawSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout: Option<RawLayout>,
    },
    Interleave {
        rows: Vec<RawMap>,
    },
    Gdelta {
        levels: Vec<OpenSetSpec>,
        rows: u32,
    },
    Densify {
        base: Box<RawMap>,
        target: Box<RawMap>,
        n: u64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSchedule {
    Target {
        eps0: Rat,
    },
    OpenSet {
        intervals: OpenSetSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<Rat>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    growth: u64,
}

const MAX_GROWTH: u64 = 1 << 16;

fn build(raw: RawMap) -> Result<MapDescriptor> {
    match raw {
        RawMap::Maj { n } => MapDescriptor::maj(n),
        RawMap::Layered {
            n,
            schedule,
            layout,
        } => {
            if n == 0 || n > super::MAX_LAYERED_N {
                return invalid(format!(
                    "layered n = {n} is outside 1..={}",
                    super::MAX_LAYERED_N
                ));
            }
            let schedule = match schedule {
                RawSchedule::Target { eps0 } => IntervalSchedule::target(eps0)?,
                RawSchedule::OpenSet {
                    intervals,
                    threshold: Some(threshold),
                } => IntervalSchedule::OpenSet {
                    intervals,
                    threshold,
                },
                RawSchedule::OpenSet {
                    intervals,
                    threshold: None,
                } => IntervalSchedule::open_set(intervals, n)?,
            };
            let arity = 2 * n as u64 + 1;
            let layout = match layout {
                None => ELayout::new(arity)?,
                Some(RawLayout { growth }) if growth > MAX_GROWTH => {
                    return invalid(format!("growth {growth} exceeds {MAX_GROWTH}"))
                }
                Some(RawLayout { growth }) => ELayout::with_growth(arity, growth)?,
            };
            MapDescriptor::layered_with_layout(n, schedule, layout)
        }
        RawMap::Interleave { rows } => {
            if rows.len() > super::MAX_ROWS {
                return invalid(format!(
                    "{} rows exceed the limit of {}",
                    rows.len(),
                    super::MAX_ROWS
                ));
            }
            let rows = rows.into_iter().map(build).collect::<Result<Vec<_>>>()?;
            MapDescriptor::interleave(rows)
        }
        RawMap::Gdelta { levels, rows } => {
            if rows == 0 || rows as usize > super::MAX_ROWS {
                return invalid(format!(
                    "gdelta rows = {rows} is outside 1..={}",
                    super::MAX_ROWS
                ));
            }
            MapDescriptor::build_f(&GDeltaSpec { levels }, rows)
        }
        RawMap::Densify { base, target, n } => {
            MapDescriptor::densify(build(*base)?, build(*target)?, n)
        }
    }
}

fn raw(map: &MapDescriptor) -> RawMap {
    match map {
        MapDescriptor::Maj { n } => RawMap::Maj { n: *n },
        MapDescriptor::Layered(l) => RawMap::Layered {
            n: l.n(),
            schedule: match l.schedule() {
                IntervalSchedule::Target { eps0 } => RawSchedule::Target { eps0: eps0.clone() },
                IntervalSchedule::OpenSet {
                    intervals,
                    threshold,
                } => RawSchedule::OpenSet {
                    intervals: intervals.clone(),
                    threshold: Some(threshold.clone()),
                },
            },
            layout: Some(RawLayout {
                growth: l.layout().growth,
            }),
        },
        MapDescriptor::Interleave { rows } => RawMap::Interleave {
            rows: rows.iter().map(raw).collect(),
        },
        MapDescriptor::GDelta(g) => RawMap::Gdelta {
            levels: g.spec().levels.clone(),
            rows: g.rows(),
        },
        MapDescriptor::Densify(d) => RawMap::Densify {
            base: Box::new(raw(d.base())),
            target: Box::new(raw(d.target())),
            n: d.n(),
        },
    }
}

impl MapDescriptor {
    pub fn from_json_str(s: &str) -> Result<Self> {
        build(serde_json::from_str(s)?)
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        build(serde_json::from_value(v)?)
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(raw(self))?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&raw(self))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_node_type() {
        let m = MapDescriptor::from_json_str(r#"{"type":"maj","n":1}"#).unwrap();
        assert_eq!(m, MapDescriptor::Maj { n: 1 });

        let l = MapDescriptor::from_json_str(
            r#"{"type":"layered","n":1,"schedule":{"kind":"target","eps0":[1,5]}}"#,
        )
        .unwrap();
        assert_eq!(l.neighborhood(0).unwrap(), vec![1, 2, 3, 4]);

        let o = MapDescriptor::from_json_str(
            r#"{"type":"layered","n":2,"schedule":{"kind":"open_set","intervals":[[1,10,3,10]],"threshold":[1,2]},"layout":{"growth":6}}"#,
        )
        .unwrap();
        assert!(matches!(o, MapDescriptor::Layered(_)));

        let i = MapDescriptor::from_json_str(
            r#"{"type":"interleave","rows":[{"type":"maj","n":0},{"type":"maj","n":1}]}"#,
        )
        .unwrap();
        assert_eq!(i.neighborhood(1).unwrap(), vec![5, 9, 13]);

        let g =
            MapDescriptor::from_json_str(r#"{"type":"gdelta","levels":[[[1,10,3,10]]],"rows":2}"#)
                .unwrap();
        assert!(matches!(g, MapDescriptor::GDelta(_)));

        let d = MapDescriptor::from_json_str(
            r#"{"type":"densify","base":{"type":"maj","n":1},"target":{"type":"maj","n":0},"n":0}"#,
        )
        .unwrap();
        assert_eq!(d.neighborhood(4).unwrap(), vec![4]);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            r#"{"type":"maj"}"#,
            r#"{"type":"maj","n":1,"extra":0}"#,
            r#"{"type":"cube","n":1}"#,
            r#"{"type":"interleave","rows":[]}"#,
            r#"{"type":"layered","n":0,"schedule":{"kind":"target","eps0":[1,5]}}"#,
            r#"{"type":"layered","n":1,"schedule":{"kind":"target","eps0":[6,5]}}"#,
            r#"{"type":"layered","n":1,"schedule":{"kind":"target","eps0":[1,0]}}"#,
            r#"{"type":"layered","n":1,"schedule":{"kind":"target","eps0":[1,5]},"layout":{"growth":1}}"#,
            r#"{"type":"gdelta","levels":[],"rows":0}"#,
            r#"{"type":"densify","base":{"type":"maj","n":1},"target":{"type":"maj","n":0},"n":99999999}"#,
            "[]",
            "",
        ] {
            assert!(MapDescriptor::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trip_keeps_neighborhoods() {
        let src = r#"{"type":"densify","base":{"type":"layered","n":1,"schedule":{"kind":"target","eps0":[1,5]}},"target":{"type":"gdelta","levels":[[[1,10,3,10]]],"rows":3},"n":2}"#;
        let a = MapDescriptor::from_json_str(src).unwrap();
        let b = MapDescriptor::from_json_str(&a.to_json_string().unwrap()).unwrap();
        assert_eq!(a, b);
        for i in 0..500 {
            assert_eq!(a.neighborhood(i).unwrap(), b.neighborhood(i).unwrap());
        }
    }
}

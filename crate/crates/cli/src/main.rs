//! `cpca`: command-line front end.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 domain error, 3 resource limit.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cantor_pca::engine::{self, InitSpec, MapRef, RunConfig, DEFAULT_CONE_CAP};
use cantor_pca::maps::phi::phi_checked;
use cantor_pca::maps::{
    phi_inv, GDeltaSpec, IntervalSchedule, MapDescriptor, OpenSetSpec, RuleKind,
};
use cantor_pca::meanfield::{self, DEFAULT_ROOT_TOL, DEFAULT_THRESHOLD_TOL};
use cantor_pca::oracle::{self, FiniteChain, DEFAULT_STATE_CAP};
use cantor_pca::rational::Rat;
use cantor_pca::scan::{self, ScanConfig};
use cantor_pca::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "cpca",
    version,
    about = "Noisy majority maps on the Cantor set"
)]
struct Cli {
    /// Worker threads for sampling loops (results do not depend on it).
    #[arg(long, global = true, env = "CPCA_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean-field analysis of the (2n+1)-majority.
    #[command(subcommand)]
    Mf(MfCmd),
    /// Build, inspect and index map descriptors.
    #[command(subcommand)]
    Map(MapCmd),
    /// Monte Carlo runs.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Same as `sim couple`.
    Couple(CoupleArgs),
    /// Phase-diagram sweep over a grid of noise levels.
    Scan(ScanArgs),
    /// Exact small-scale answers.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Same as `map phi`.
    Phi(PhiArgs),
}

#[derive(Subcommand, Debug)]
enum MfCmd {
    /// Roots of P_n^eps in [0, 1] with their stability.
    Roots {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_ROOT_TOL)]
        tol: f64,
    },
    /// Largest eps with three roots.
    Threshold {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_TOL)]
        tol: f64,
    },
    /// Marginal sequence alpha0, h(alpha0), ... under a gate firing with probability p.
    Recurse {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        alpha0: f64,
        #[arg(long)]
        t: usize,
        /// Gate firing probability at every step.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MapType {
    Maj,
    Layered,
    #[value(name = "M")]
    M,
    #[value(name = "MIE")]
    Mie,
    #[value(name = "F", alias = "gdelta")]
    F,
    Densify,
}

#[derive(Subcommand, Debug)]
enum MapCmd {
    /// Write a descriptor as JSON.
    Emit(EmitArgs),
    /// Print a descriptor's summary and the rules of its first cells.
    Describe {
        #[arg(long)]
        map: PathBuf,
        /// Number of cells to list.
        #[arg(long, default_value_t = 16)]
        cells: u64,
    },
    /// Row-packing index: phi(i, j) or its inverse.
    Phi(PhiArgs),
}

#[derive(Args, Debug)]
struct EmitArgs {
    #[arg(long = "type", value_enum)]
    kind: MapType,
    /// Majority parameter (votes over 2n+1 cells); densify block size for `densify`.
    #[arg(long)]
    n: Option<u64>,
    /// Gate target for `layered`, e.g. 1/5.
    #[arg(long)]
    eps0: Option<String>,
    /// Open set for `MIE`, as `a:b` pairs separated by commas, e.g. `1/10:3/10`.
    #[arg(long)]
    open: Option<String>,
    /// G_delta spec file for `F`.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Interleave rows.
    #[arg(long, default_value_t = 8)]
    rows: u32,
    /// Base descriptor file for `densify`.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Target descriptor file for `densify`.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhiArgs {
    /// Cell index to decompose into (i, j).
    #[arg(long, conflicts_with_all = ["i", "j"])]
    k: Option<u64>,
    #[arg(long, requires = "j")]
    i: Option<u64>,
    #[arg(long, requires = "i")]
    j: Option<u32>,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// JSON run configuration; flags below are then ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Descriptor file.
    #[arg(long, required_unless_present = "config")]
    map: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    eps: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    t: Option<usize>,
    /// Target cells, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    targets: Vec<u64>,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, required_unless_present = "config")]
    seed: Option<u64>,
    /// Initial law: all0, all1, bern:a or bern:a,b.
    #[arg(long, default_value = "all0")]
    init: String,
    /// Draw layered gates from their exact law.
    #[arg(long)]
    shortcut: bool,
    /// Top-down evaluation instead of compiling the cone.
    #[arg(long)]
    lazy: bool,
    #[arg(long, default_value_t = DEFAULT_CONE_CAP)]
    cone_cap: u64,
    /// Output file (stdout if absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoupleArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Initial law of the second leg.
    #[arg(long, default_value = "all1")]
    init_b: String,
}

#[derive(Subcommand, Debug)]
enum SimCmd {
    /// Empirical marginals at the target cells.
    Run(SimArgs),
    /// Two legs sharing every noise event; reports agreement.
    Couple(CoupleArgs),
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Descriptor file.
    #[arg(long)]
    map: PathBuf,
    /// `a:b:step` (inclusive) or a comma list, in [0, 1].
    #[arg(long)]
    grid: String,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    /// Witness cells; automatic when absent.
    #[arg(long, value_delimiter = ',')]
    witnesses: Vec<u64>,
    /// Multiple evidence needs the gap interval above this.
    #[arg(long, default_value_t = 0.1)]
    gap_threshold: f64,
    /// Unique evidence needs agreement above 1 - delta.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    shortcut: bool,
    #[arg(long)]
    lazy: bool,
    /// Second-layer law of both initial conditions.
    #[arg(long, default_value_t = 0.0)]
    init_second: f64,
    #[arg(long, default_value_t = DEFAULT_CONE_CAP)]
    cone_cap: u64,
    /// Layered level used when no witness level qualifies.
    #[arg(long, default_value_t = 8)]
    fallback_level: u32,
    /// CSV output (stdout if no output is given at all).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Gap between the all-one and all-zero starts: the mean-field bound
    /// 1 - 2 alpha, or the exact value at horizon t.
    Gap {
        #[arg(long, conflicts_with = "map")]
        n: Option<u32>,
        /// Descriptor file (instead of --n).
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 0)]
        cell: u64,
        #[arg(long, default_value_t = 0.0)]
        second: f64,
    },
    /// Exact first-layer marginals on tree-shaped cones.
    Marginals {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        t: usize,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        cells: Vec<u64>,
        #[arg(long, default_value = "all0")]
        init: String,
    },
    /// Stationary laws of the chain on the closed block [lo, hi].
    Markov {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        cap: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => 2,
        Error::Resource { .. } | Error::Truncation { .. } | Error::Overflow(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("cpca: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe downstream (`| head`) is not a failure
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cpca: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> cantor_pca::Result<()> {
    match cmd {
        Command::Mf(c) => mf(c),
        Command::Map(MapCmd::Emit(a)) => emit(a),
        Command::Map(MapCmd::Describe { map, cells }) => describe(&map, cells),
        Command::Map(MapCmd::Phi(a)) | Command::Phi(a) => phi_cmd(a),
        Command::Sim(SimCmd::Run(a)) => sim(a, None),
        Command::Sim(SimCmd::Couple(a)) | Command::Couple(a) => sim(a.sim, Some(a.init_b)),
        Command::Scan(a) => scan_cmd(a),
        Command::Oracle(c) => oracle_cmd(c),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> cantor_pca::Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// `{"config": …, "result": …}`, pretty printed.
fn report(config: Value, result: impl serde::Serialize) -> cantor_pca::Result<String> {
    Ok(serde_json::to_string_pretty(&json!({
        "config": config,
        "result": serde_json::to_value(result)?,
    }))?)
}

fn read(path: &Path) -> cantor_pca::Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_map(path: &Path) -> cantor_pca::Result<MapDescriptor> {
    MapDescriptor::from_json_str(&read(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn mf(c: MfCmd) -> cantor_pca::Result<()> {
    let text = match c {
        MfCmd::Roots { n, eps, tol } => report(
            json!({"command": "mf roots", "n": n, "eps": eps, "tol": tol}),
            meanfield::find_fixed_points(n, eps, tol)?,
        )?,
        MfCmd::Threshold { n, tol } => report(
            json!({"command": "mf threshold", "n": n, "tol": tol}),
            json!({"threshold": meanfield::mf_threshold(n, tol)?}),
        )?,
        MfCmd::Recurse {
            n,
            eps,
            alpha0,
            t,
            p,
        } => report(
            json!({"command": "mf recurse", "n": n, "eps": eps, "alpha0": alpha0, "t": t, "p": p}),
            meanfield::layered_recursion(n, eps, p, alpha0, t)?,
        )?,
    };
    write_out(None, &text)
}

fn need<T>(v: Option<T>, flag: &str, kind: MapType) -> cantor_pca::Result<T> {
    v.ok_or_else(|| Error::Invalid(format!("--type {kind:?} needs --{flag}")))
}

fn parse_open(s: &str) -> cantor_pca::Result<OpenSetSpec> {
    let mut out = Vec::new();
    for piece in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (a, b) = piece
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("interval {piece:?} is not a:b")))?;
        out.push((Rat::parse(a)?, Rat::parse(b)?));
    }
    OpenSetSpec::new(out)
}

fn small_n(n: u64) -> cantor_pca::Result<u32> {
    u32::try_from(n).map_err(|_| Error::Invalid(format!("n = {n} is too large")))
}

fn emit(a: EmitArgs) -> cantor_pca::Result<()> {
    let kind = a.kind;
    let map = match kind {
        MapType::Maj => MapDescriptor::maj(small_n(need(a.n, "n", kind)?)?)?,
        MapType::Layered => {
            let eps0 = Rat::parse(&need(a.eps0, "eps0", kind)?)?;
            MapDescriptor::layered(small_n(a.n.unwrap_or(1))?, IntervalSchedule::target(eps0)?)?
        }
        MapType::M => MapDescriptor::build_m(a.rows)?,
        MapType::Mie => {
            MapDescriptor::build_m_ie(&parse_open(&need(a.open, "open", kind)?)?, a.rows)?
        }
        MapType::F => {
            let path = need(a.spec, "spec", kind)?;
            let spec = GDeltaSpec::from_json_str(&read(&path)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            MapDescriptor::build_f(&spec, a.rows)?
        }
        MapType::Densify => {
            let base = load_map(&need(a.base, "base", kind)?)?;
            let target = load_map(&need(a.target, "target", kind)?)?;
            MapDescriptor::densify(base, target, need(a.n, "n", kind)?)?
        }
    };
    write_out(a.out.as_deref(), &map.to_json_string()?)
}

fn describe(path: &Path, cells: u64) -> cantor_pca::Result<()> {
    let map = load_map(path)?;
    let mut text = format!("{}\nalphabet: {:?}\n", map.describe(), map.alphabet());
    text.push_str("cell\trule\tneighborhood\n");
    for c in 0..cells {
        let line = match map.rule(c) {
            Ok(rule) => {
                let kind = match &rule.kind {
                    RuleKind::Majority { votes } => format!("maj over {}", votes.len),
                    RuleKind::Layered { votes, gate } => format!(
                        "layered maj over {}, gate level {} on {} cells",
                        votes.len, gate.level, gate.sample.len
                    ),
                    RuleKind::ConstantZero => "zero".to_string(),
                    RuleKind::Identity { source } => format!("copy {source}"),
                    RuleKind::Truncated { row, .. } => format!("truncated row {row}"),
                };
                let hood = match rule.max_index() {
                    None => "-".to_string(),
                    Some(_) if rule.neighborhood_size() > 8 => {
                        format!(
                            "{} cells up to {}",
                            rule.neighborhood_size(),
                            rule.max_index().unwrap_or(0)
                        )
                    }
                    Some(_) => format!("{:?}", rule.neighborhood(8)?),
                };
                format!("{c}\t{kind}\t{hood}")
            }
            Err(e) => format!("{c}\terror\t{e}"),
        };
        text.push_str(&line);
        text.push('\n');
    }
    write_out(None, &text)
}

fn phi_cmd(a: PhiArgs) -> cantor_pca::Result<()> {
    let text = match (a.k, a.i, a.j) {
        (Some(k), _, _) => {
            let (i, j) = phi_inv(k);
            format!("({i},{j})")
        }
        (None, Some(i), Some(j)) => phi_checked(i, j)?.to_string(),
        _ => return Err(Error::Invalid("give --k, or both --i and --j".into())),
    };
    write_out(None, &text)
}

fn sim(a: SimArgs, init_b: Option<String>) -> cantor_pca::Result<()> {
    let out = a.out.clone();
    let (cfg, map) = match &a.config {
        Some(path) => {
            let cfg = RunConfig::from_json_str(&read(path)?)?;
            let map = match cfg.inline_map()? {
                Some(m) => m,
                None => {
                    let MapRef::Path(p) = &cfg.map else {
                        unreachable!()
                    };
                    let base = path.parent().unwrap_or(Path::new("."));
                    load_map(&base.join(p))?
                }
            };
            (cfg, map)
        }
        None => {
            let path = a.map.as_deref().expect("required by clap");
            let map = load_map(path)?;
            let init_b = init_b.as_deref().map(InitSpec::parse).transpose()?;
            let cfg = RunConfig {
                map: MapRef::Inline(map.to_json_value()?),
                eps: a.eps.expect("required by clap"),
                t: a.t.expect("required by clap"),
                targets: a.targets,
                samples: a.samples,
                seed: a.seed.expect("required by clap"),
                shortcut: a.shortcut,
                init: InitSpec::parse(&a.init)?,
                init_b,
                cone_cap: a.cone_cap,
                lazy: a.lazy,
            };
            cfg.validate()?;
            (cfg, map)
        }
    };
    let mut header = serde_json::to_value(&cfg)?;
    header["map"] = map.to_json_value()?;
    let text = match cfg.init_b {
        Some(b) => {
            header["command"] = json!("sim couple");
            let r = engine::couple_run(
                &map,
                &cfg.init,
                &b,
                cfg.eps,
                cfg.t,
                &cfg.targets,
                cfg.samples,
                cfg.seed,
                cfg.options(),
            )?;
            report(header, r)?
        }
        None => {
            header["command"] = json!("sim run");
            let r = engine::run(
                &map,
                &cfg.init,
                cfg.eps,
                cfg.t,
                &cfg.targets,
                cfg.samples,
                cfg.seed,
                cfg.options(),
            )?;
            report(header, r)?
        }
    };
    write_out(out.as_deref(), &text)
}

/// Noise levels worth marking on the plot.
fn plot_thresholds(map: &MapDescriptor) -> Vec<f64> {
    match map {
        MapDescriptor::Maj { n } if *n > 0 => {
            meanfield::mf_threshold(*n, 1e-9).into_iter().collect()
        }
        MapDescriptor::Layered(l) => match l.schedule() {
            IntervalSchedule::Target { eps0 } => vec![eps0.to_f64()],
            IntervalSchedule::OpenSet { threshold, .. } => vec![threshold.to_f64()],
        },
        _ => Vec::new(),
    }
}

fn scan_cmd(a: ScanArgs) -> cantor_pca::Result<()> {
    let map = load_map(&a.map)?;
    let mut cfg = ScanConfig::new(scan::parse_grid(&a.grid)?, a.t, a.samples, a.seed);
    cfg.witnesses = a.witnesses;
    cfg.gap_threshold = a.gap_threshold;
    cfg.delta = a.delta;
    cfg.shortcut = a.shortcut;
    cfg.lazy = a.lazy;
    cfg.init_second = a.init_second;
    cfg.cone_cap = a.cone_cap;
    cfg.fallback_level = a.fallback_level;
    let result = scan::scan(&map, &cfg)?;
    let mut csv = Vec::new();
    scan::write_csv(&result, &mut csv)?;
    let csv = String::from_utf8(csv).expect("csv writer emits utf-8");
    let quiet = a.csv.is_none() && a.json.is_none() && a.svg.is_none();
    if quiet {
        return write_out(None, &csv);
    }
    if let Some(p) = &a.csv {
        fs::write(p, &csv)?;
    }
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&result)?)?;
    }
    if let Some(p) = &a.svg {
        fs::write(p, scan::render_svg(&result, &plot_thresholds(&map)))?;
    }
    Ok(())
}

fn oracle_cmd(c: OracleCmd) -> cantor_pca::Result<()> {
    let text = match c {
        OracleCmd::Gap {
            n,
            map,
            eps,
            t,
            cell,
            second,
        } => {
            let m = match (&map, n) {
                (Some(p), _) => load_map(p)?,
                (None, Some(n)) => MapDescriptor::maj(n)?,
                (None, None) => return Err(Error::Invalid("give --n or --map".into())),
            };
            let config = json!({
                "command": "oracle gap", "map": m.to_json_value()?, "eps": eps,
                "t": t, "cell": cell, "second": second,
            });
            match (t, &m) {
                (Some(t), _) => report(
                    config,
                    json!({"gap": oracle::exact_gap(&m, eps, t, cell, second)?}),
                )?,
                (None, MapDescriptor::Maj { n }) => {
                    report(config, json!({"gap": oracle::gap_lower_bound(*n, eps)?}))?
                }
                (None, _) => {
                    return Err(Error::Invalid(
                        "the mean-field gap needs a plain majority; give --t for an exact gap"
                            .into(),
                    ))
                }
            }
        }
        OracleCmd::Marginals {
            map,
            eps,
            t,
            cells,
            init,
        } => {
            let m = load_map(&map)?;
            let init = InitSpec::parse(&init)?;
            let values = oracle::exact_marginals(&m, eps, &init, t, &cells)?;
            report(
                json!({
                    "command": "oracle marginals", "map": m.to_json_value()?, "eps": eps,
                    "t": t, "cells": cells, "init": init,
                }),
                json!({"marginals": values}),
            )?
        }
        OracleCmd::Markov {
            map,
            lo,
            hi,
            eps,
            cap,
        } => {
            let m = load_map(&map)?;
            let chain = FiniteChain::block(&m, lo, hi, eps, cap)?;
            let st = chain.stationary()?;
            report(
                json!({
                    "command": "oracle markov", "map": m.to_json_value()?, "lo": lo,
                    "hi": hi, "eps": eps, "cap": cap,
                }),
                json!({"cells": chain.cells(), "states": chain.states(), "stationary": st}),
            )?
        }
    };
    write_out(None, &text)
}

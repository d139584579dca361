//! Command-line front end: argument parsing, config-file overrides and report emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::addressing::{color_for, verify_local, verify_spi};
use crate::analysis::{
    build_potential, bridge_persists, classify, classify_table, island_kind_for, island_persists, make_bridge,
    make_flow, make_island, verify_bridge, verify_flows, verify_island, verify_toom,
};
use crate::automaton::{build_automaton, weakening_rule, BoundaryPolicy};
use crate::error::{Error, Result};
use crate::faults::FaultConfig;
use crate::simulate::{monte_carlo, RunManifest};
use crate::tessellation::{audit_tessellation, build_tessellation, FaceDegree, Tessellation, TessellationSpec};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tessvote", version, about = "Majority-vote automata on regular {p,q} tessellations")]
pub struct Cli {
    /// JSON object whose keys override the command's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a truncated tessellation and audit it.
    Build(BuildArgs),
    /// Check a certificate or structural property.
    Verify {
        target: Target,
        #[command(flatten)]
        args: VerifyArgs,
    },
    /// Estimate the origin error curve by Monte Carlo.
    Simulate(SimulateArgs),
    /// Fault-tolerance class of {p,q}, or the whole table.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Spi,
    Lemmas,
    Toom,
    Flows,
    Island,
    Bridge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Adversarial,
    FrozenZero,
}

impl From<Boundary> for BoundaryPolicy {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Adversarial => BoundaryPolicy::AdversarialBoundary,
            Boundary::FrozenZero => BoundaryPolicy::FrozenZero,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct Shape {
    /// Face degree: an integer >= 3 or `inf`.
    #[arg(long)]
    pub p: FaceDegree,
    #[arg(long)]
    pub q: u32,
    #[arg(long)]
    pub generations: Option<u32>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Allow spherical {p,q} patches that do not close up.
    #[arg(long)]
    #[serde(default)]
    pub spherical_patch: bool,
}

impl Shape {
    fn spec(&self, default_generations: u32) -> TessellationSpec {
        let mut s = TessellationSpec::new(self.p, self.q, self.generations.unwrap_or(default_generations));
        s.vertex_budget = self.budget;
        s.spherical_patch = self.spherical_patch;
        s
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BuildArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: Shape,
    /// Write the tessellation JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the audit report JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: Shape,
    /// Speed-up kappa for the Toom check.
    #[arg(long, default_value_t = 1)]
    pub speedup: u32,
    /// Vertices on which the Toom search is cross-checked by enumeration.
    #[arg(long, default_value_t = 0)]
    pub crosscheck: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Deterministic steps for island and bridge persistence.
    #[arg(long, default_value_t = 1000)]
    pub steps: u32,
    /// Bridge half-lengths.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    #[arg(long, default_value_t = 3)]
    pub n: u32,
    /// Write the report JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: Shape,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Number of steps T.
    #[arg(long, default_value_t = 200)]
    pub steps: u32,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Boundary::Adversarial)]
    pub boundary: Boundary,
    /// Use the weakened automaton of the combined-tolerance region.
    #[arg(long)]
    #[serde(default)]
    pub weakened: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path (defaults to the CSV path with `.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub p: Option<FaceDegree>,
    #[arg(long)]
    pub q: Option<u32>,
    /// Print the table for p = 3..=PMAX and infinity, q = 2..=QMAX.
    #[arg(long, num_args = 2, value_names = ["PMAX", "QMAX"])]
    pub table: Option<Vec<u32>>,
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let overrides = match &cli.config {
        Some(path) => Some(serde_json::from_str::<serde_json::Value>(&fs::read_to_string(path)?)?),
        None => None,
    };
    match cli.command {
        Command::Build(a) => cmd_build(&apply(a, overrides.as_ref())?),
        Command::Verify { target, args } => cmd_verify(target, &apply(args, overrides.as_ref())?),
        Command::Simulate(a) => cmd_simulate(&apply(a, overrides.as_ref())?),
        Command::Classify(a) => cmd_classify(&apply(a, overrides.as_ref())?),
    }
}

/// Overlay the keys of a JSON object on top of parsed flags.
fn apply<A: Serialize + DeserializeOwned>(args: A, overrides: Option<&serde_json::Value>) -> Result<A> {
    let Some(over) = overrides else { return Ok(args) };
    let serde_json::Value::Object(over) = over else {
        return Err(Error::InvalidSpec("config file must hold a JSON object".into()));
    };
    let mut base = serde_json::to_value(args)?;
    if let serde_json::Value::Object(map) = &mut base {
        for (k, v) in over {
            map.insert(k.replace('-', "_"), v.clone());
        }
    }
    Ok(serde_json::from_value(base)?)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn show<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}

fn verdict(pass: bool) -> (&'static str, i32) {
    if pass {
        ("pass", EXIT_PASS)
    } else {
        ("fail", EXIT_FAIL)
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        log::info!("no --seed given, using {s}");
        eprintln!("seed: {s}");
        s
    })
}

pub fn cmd_build(a: &BuildArgs) -> Result<i32> {
    let t = build_tessellation(&a.shape.spec(6))?;
    let report = audit_tessellation(&t);
    if let Some(out) = &a.out {
        fs::write(out, t.to_json()?)?;
    }
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    let (word, code) = verdict(report.pass);
    println!(
        "{{{},{}}} G={}: {} vertices, {} edges, {} faces",
        t.p(),
        t.q(),
        t.generations_built,
        t.vertex_count(),
        t.edge_count(),
        report.face_count
    );
    println!("audit: {word}");
    for v in report.violations.iter().take(10) {
        println!("  {}: {}", v.rule, v.message);
    }
    Ok(code)
}

fn tessellation(shape: &Shape, default_generations: u32) -> Result<Arc<Tessellation>> {
    Ok(Arc::new(build_tessellation(&shape.spec(default_generations))?))
}

pub fn cmd_verify(target: Target, a: &VerifyArgs) -> Result<i32> {
    let (p, q) = (a.shape.p, a.shape.q);
    let (pass, summary, report): (bool, String, serde_json::Value) = match target {
        Target::Lemmas => {
            let t = tessellation(&a.shape, 5)?;
            let r = audit_tessellation(&t);
            let s = format!("{} violations over {} vertices", r.violations.len(), t.vertex_count());
            (r.pass, s, serde_json::to_value(&r)?)
        }
        Target::Spi => {
            let t = tessellation(&a.shape, 5)?;
            let scheme = color_for(&t)?;
            let local = verify_local(&t, &scheme);
            let spi = verify_spi(&t, &scheme);
            let s = format!(
                "{} colors, {} local violations, {} vertices checked, {} invariance violations",
                scheme.colors,
                local.violations.len(),
                spi.vertices_checked,
                spi.violations.len()
            );
            let pass = spi.pass && local.pass;
            (pass, s, serde_json::json!({ "local": local, "spi": spi }))
        }
        Target::Toom => {
            let t = tessellation(&a.shape, 4)?;
            let spec = build_automaton(t.clone(), None, a.speedup)?;
            let pot = build_potential(&t, &color_for(&t)?)?;
            let r = verify_toom(&spec, &pot, a.speedup, a.crosscheck, a.seed.unwrap_or(0))?;
            let mut s = format!(
                "speedup {}: condition1={} (M stated {}, tight {}) condition2={} condition3={}",
                r.kappa, r.condition1, r.m_stated, r.m_tight, r.condition2, r.condition3
            );
            if let Some(w) = r.condition3_witnesses.first() {
                s += &format!(
                    "; witness vertex {} ({:?}) error set {:?} component {} hypothesis ({})",
                    w.vertex, w.class, w.error_set, w.component, w.hypothesis
                );
            }
            if let Some(c) = &r.crosscheck {
                s += &format!("; cross-check agree={} over {} sets", c.agree, c.composed_sets_enumerated);
            }
            (r.pass, s, serde_json::to_value(&r)?)
        }
        Target::Flows => {
            let rule = weakening_rule(p, q)?;
            let t = tessellation(&a.shape, 5)?;
            let spec = build_automaton(t, Some(rule), 1)?;
            let flow = make_flow(p, q)?;
            let r = verify_flows(&spec, &flow)?;
            let mut s = format!("{:?}: r={} s={} M={} max in-flow {}", r.rule, r.r, r.s, r.m, r.max_in_flow);
            for c in &r.classes {
                s += &format!(
                    "\n  {}: out>={} in<={} net>={} (realized net>={}) {}",
                    c.class,
                    show(c.analytic_out),
                    show(c.analytic_in),
                    show(c.analytic_net),
                    c.min_net,
                    if c.matches_claim { "ok" } else { "MISMATCH" }
                );
            }
            (r.pass, s, serde_json::to_value(&r)?)
        }
        Target::Island => {
            let t = tessellation(&a.shape, 5)?;
            let spec = build_automaton(t.clone(), None, 1)?;
            let cert = make_island(&t, island_kind_for(p, q)?)?;
            let r = verify_island(&spec, &cert.vertices);
            let persists = island_persists(&spec, &cert.vertices, a.steps)?;
            let s = format!(
                "{:?} island {:?}: static={} persists {} steps={}",
                cert.kind, cert.vertices, r.valid, a.steps, persists
            );
            (
                r.valid && persists,
                s,
                serde_json::json!({ "certificate": cert, "static": r, "persists": persists }),
            )
        }
        Target::Bridge => {
            let default_g = if p == FaceDegree::Finite(3) { 8 } else { 6 };
            let t = tessellation(&a.shape, default_g)?;
            let spec = build_automaton(t.clone(), None, 1)?;
            let cert = make_bridge(&t, a.m, a.n)?;
            let r = verify_bridge(&spec, &cert.bridge, &cert.piers);
            let persists = bridge_persists(&spec, &cert.bridge, &cert.piers, a.steps)?;
            let s = format!(
                "bridge {:?} piers {:?}: static={} persists {} steps={}",
                cert.bridge, cert.piers, r.valid, a.steps, persists
            );
            (
                r.valid && persists,
                s,
                serde_json::json!({ "certificate": cert, "static": r, "persists": persists }),
            )
        }
    };
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    let (word, code) = verdict(pass);
    let name = target.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    println!("verify {name} {{{p},{q}}}: {word}");
    println!("{summary}");
    Ok(code)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let seed = resolve_seed(a.seed);
    let t = tessellation(&a.shape, 8)?;
    let rule = if a.weakened { Some(weakening_rule(a.shape.p, a.shape.q)?) } else { None };
    let spec = build_automaton(t.clone(), rule, 1)?;
    let config = FaultConfig::new(a.alpha, a.beta, seed)?;
    let curve = monte_carlo(&spec, &config, a.steps, a.trials, a.boundary.into(), a.workers)?;
    let csv = curve.to_csv();
    let mut echo = serde_json::to_value(a)?;
    echo["seed"] = seed.into();
    let manifest = RunManifest::new("simulate", echo, seed, a.trials, &t)?;
    match &a.out {
        Some(out) => {
            fs::write(out, &csv)?;
            let mpath = a.manifest.clone().unwrap_or_else(|| out.with_extension("manifest.json"));
            write_json(&mpath, &manifest)?;
            let last = curve.points.last().expect("at least t = 0");
            println!(
                "terminal error rate {:.6} [{:.6}, {:.6}] over {} trials; wrote {} and {}",
                last.error_rate,
                last.ci_low,
                last.ci_high,
                a.trials,
                out.display(),
                mpath.display()
            );
        }
        None => {
            print!("{csv}");
            if let Some(mpath) = &a.manifest {
                write_json(mpath, &manifest)?;
            }
        }
    }
    Ok(EXIT_PASS)
}

pub fn cmd_classify(a: &ClassifyArgs) -> Result<i32> {
    if let Some(tb) = &a.table {
        let (pmax, qmax) = (tb[0], tb[1]);
        let rows = classify_table(pmax, qmax)?;
        let header: String = (2..=qmax).map(|q| format!("{q:>3}")).collect();
        println!("p\\q{header}");
        for (p, row) in rows {
            let cells: String = row.iter().map(|c| format!("{:>3}", c.symbol())).collect();
            println!("{:<3}{cells}", p.to_string());
        }
        return Ok(EXIT_PASS);
    }
    match (a.p, a.q) {
        (Some(p), Some(q)) => {
            println!("{}", classify(p, q)?);
            Ok(EXIT_PASS)
        }
        _ => Err(Error::InvalidSpec("classify needs --p and --q, or --table PMAX QMAX".into())),
    }
}

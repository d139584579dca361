//! Seeded trajectories and Monte Carlo estimates of the origin error rate.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::automaton::{step, AutomatonSpec, BoundaryPolicy};
use crate::error::{Error, Result};
use crate::faults::{FaultConfig, FaultTrace};
use crate::tessellation::{Tessellation, VertexId, SCHEMA_VERSION};

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Per-cell binary state at one time; a cell is in error iff its state is 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    pub cells: Vec<u8>,
    pub t: u32,
    pub boundary: BoundaryPolicy,
}

/// Sparse stepping engine: scatters votes from cells in state 1 only.
pub struct Engine<'a> {
    spec: &'a AutomatonSpec,
    rev_offsets: Vec<u32>,
    rev: Vec<VertexId>,
    base: Vec<u16>,
    boundary_cells: Vec<VertexId>,
    self_starting: Vec<VertexId>,
    counts: Vec<u16>,
    touched: Vec<VertexId>,
}

impl<'a> Engine<'a> {
    pub fn new(spec: &'a AutomatonSpec) -> Self {
        let n = spec.cell_count();
        let mut deg = vec![0u32; n + 1];
        let mut base = vec![0u16; n];
        for v in 0..n as VertexId {
            for (&w, &ig) in spec.guardians(v).iter().zip(spec.ignored_flags(v)) {
                if ig {
                    base[v as usize] += 1;
                } else {
                    deg[w as usize + 1] += 1;
                }
            }
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut rev = vec![0; deg[n] as usize];
        for v in 0..n as VertexId {
            for (&w, &ig) in spec.guardians(v).iter().zip(spec.ignored_flags(v)) {
                if !ig {
                    rev[fill[w as usize] as usize] = v;
                    fill[w as usize] += 1;
                }
            }
        }
        let boundary_cells = (0..n as VertexId).filter(|&v| !spec.is_complete(v)).collect();
        let self_starting = (0..n as VertexId)
            .filter(|&v| spec.is_complete(v) && base[v as usize] as u32 >= spec.threshold(v))
            .collect();
        Engine {
            spec,
            rev_offsets: deg,
            rev,
            base,
            boundary_cells,
            self_starting,
            counts: vec![0; n],
            touched: Vec::new(),
        }
    }

    /// Advance one step. `state` is the dense state, `ones` its support (any order).
    /// Returns the support of the new state, ascending; `state` is updated in place.
    pub fn step(
        &mut self,
        state: &mut [u8],
        ones: &[VertexId],
        permanent: &[VertexId],
        transient: &[VertexId],
        boundary: BoundaryPolicy,
    ) -> Vec<VertexId> {
        for &u in ones {
            let (a, b) = (self.rev_offsets[u as usize] as usize, self.rev_offsets[u as usize + 1] as usize);
            for &v in &self.rev[a..b] {
                if self.counts[v as usize] == 0 {
                    self.touched.push(v);
                }
                self.counts[v as usize] += 1;
            }
        }
        for &u in ones {
            state[u as usize] = 0;
        }
        let mut next = Vec::with_capacity(ones.len() + transient.len());
        for &v in &self.touched {
            let c = self.counts[v as usize] + self.base[v as usize];
            self.counts[v as usize] = 0;
            if self.spec.is_complete(v) && c as u32 >= self.spec.threshold(v) {
                next.push(v);
            }
        }
        self.touched.clear();
        next.extend_from_slice(&self.self_starting);
        for &v in permanent.iter().chain(transient) {
            if self.spec.is_complete(v) {
                next.push(v);
            }
        }
        if boundary == BoundaryPolicy::AdversarialBoundary {
            next.extend_from_slice(&self.boundary_cells);
        }
        next.sort_unstable();
        next.dedup();
        for &v in &next {
            state[v as usize] = 1;
        }
        next
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub config: FaultConfig,
    pub boundary: BoundaryPolicy,
    /// Origin error indicator for t = 0..=T.
    pub origin_error: Vec<bool>,
    /// Fraction of interior cells in error for t = 0..=T.
    pub density: Vec<f64>,
}

fn check_margin(spec: &AutomatonSpec) -> Result<()> {
    let t = spec.tessellation();
    if !spec.is_complete(t.origin) {
        return Err(Error::InsufficientMargin("the origin lies on the truncation boundary".into()));
    }
    Ok(())
}

fn boundary_ones(spec: &AutomatonSpec, boundary: BoundaryPolicy) -> Vec<VertexId> {
    match boundary {
        BoundaryPolicy::FrozenZero => Vec::new(),
        BoundaryPolicy::AdversarialBoundary => {
            (0..spec.cell_count() as VertexId).filter(|&v| !spec.is_complete(v)).collect()
        }
    }
}

/// One trajectory from the all-zero state (boundary cells set per policy).
pub fn run_trial(spec: &AutomatonSpec, config: &FaultConfig, steps: u32, boundary: BoundaryPolicy) -> Result<TrialResult> {
    config.validate()?;
    check_margin(spec)?;
    let n = spec.cell_count();
    let origin = spec.tessellation().origin;
    let interior = (0..n as VertexId).filter(|&v| spec.is_complete(v)).count().max(1) as f64;
    let trace = FaultTrace::new(config, n);
    let permanent: Vec<VertexId> = (0..n as VertexId).filter(|&v| trace.is_permanent(v)).collect();
    let mut engine = Engine::new(spec);
    let mut state = vec![0u8; n];
    let mut ones = boundary_ones(spec, boundary);
    for &v in &ones {
        state[v as usize] = 1;
    }
    let count_interior = |ones: &[VertexId]| ones.iter().filter(|&&v| spec.is_complete(v)).count() as f64;
    let mut origin_error = Vec::with_capacity(steps as usize + 1);
    let mut density = Vec::with_capacity(steps as usize + 1);
    origin_error.push(state[origin as usize] == 1);
    density.push(count_interior(&ones) / interior);
    for t in 0..steps {
        if ones.len() == n && boundary == BoundaryPolicy::AdversarialBoundary {
            origin_error.resize(steps as usize + 1, true);
            density.resize(steps as usize + 1, 1.0);
            break;
        }
        let transient = trace.transient_cells(t);
        ones = engine.step(&mut state, &ones, &permanent, &transient, boundary);
        origin_error.push(state[origin as usize] == 1);
        density.push(count_interior(&ones) / interior);
    }
    Ok(TrialResult {
        seed: config.seed,
        config: *config,
        boundary,
        origin_error,
        density,
    })
}

/// Full dense trajectory (states at t = 0..=T), computed with the reference `step`.
pub fn run_trajectory(
    spec: &AutomatonSpec,
    trace: &FaultTrace,
    steps: u32,
    boundary: BoundaryPolicy,
) -> Result<Vec<Vec<u8>>> {
    check_margin(spec)?;
    let n = spec.cell_count();
    if trace.cells() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: trace.cells(),
        });
    }
    let mut s = vec![0u8; n];
    for v in boundary_ones(spec, boundary) {
        s[v as usize] = 1;
    }
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(s);
    for t in 0..steps {
        let next = step(spec, out.last().expect("nonempty"), &trace.mask(t), boundary)?;
        out.push(next);
    }
    Ok(out)
}

/// Seed of trial `i` derived from a master seed.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(i);
    rng.next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: u32,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub master_seed: u64,
    pub trials: usize,
    pub points: Vec<CurvePoint>,
}

impl ErrorCurve {
    pub fn terminal_rate(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.error_rate)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,error_rate,ci_low,ci_high\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{:.6},{:.6},{:.6}", p.t, p.error_rate, p.ci_low, p.ci_high);
        }
        s
    }
}

/// Wilson score interval at 95% for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Origin error rate per time step over `trials` independent trials.
/// `workers` = None uses the global thread pool.
pub fn monte_carlo(
    spec: &AutomatonSpec,
    config: &FaultConfig,
    steps: u32,
    trials: usize,
    boundary: BoundaryPolicy,
    workers: Option<usize>,
) -> Result<ErrorCurve> {
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    config.validate()?;
    check_margin(spec)?;
    let run = || -> Result<Vec<u64>> {
        (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let cfg = config.with_seed(trial_seed(config.seed, i));
                run_trial(spec, &cfg, steps, boundary).map(|r| r.origin_error.iter().map(|&b| b as u64).collect::<Vec<u64>>())
            })
            .try_reduce(
                || vec![0u64; steps as usize + 1],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    };
    let hits = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidSpec(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let points = hits
        .iter()
        .enumerate()
        .map(|(t, &h)| {
            let (lo, hi) = wilson_interval(h, trials as u64);
            CurvePoint {
                t: t as u32,
                error_rate: h as f64 / trials as f64,
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    Ok(ErrorCurve {
        master_seed: config.seed,
        trials,
        points,
    })
}

/// Fault-free evolution from `initial` with `permanent` cells held in error.
/// With `clamp`, every other cell is forced to 0 after each step.
/// Returns the error set (ascending) at t = 0..=T.
pub fn run_deterministic(
    spec: &AutomatonSpec,
    initial: &[VertexId],
    permanent: &[VertexId],
    clamp: bool,
    steps: u32,
) -> Result<Vec<Vec<VertexId>>> {
    let n = spec.cell_count();
    for &v in initial.iter().chain(permanent) {
        if v as usize >= n {
            return Err(Error::UnknownVertex(v));
        }
        if !spec.is_complete(v) {
            return Err(Error::InsufficientMargin(format!("cell {v} lies on the truncation boundary")));
        }
    }
    let mut faults = vec![false; n];
    let mut keep = vec![false; n];
    for &v in permanent {
        faults[v as usize] = true;
        keep[v as usize] = true;
    }
    for &v in initial {
        keep[v as usize] = true;
    }
    let mut s = vec![0u8; n];
    for &v in initial.iter().chain(permanent) {
        s[v as usize] = 1;
    }
    let support = |s: &[u8]| -> Vec<VertexId> { (0..n as VertexId).filter(|&v| s[v as usize] == 1).collect() };
    let mut out = vec![support(&s)];
    for _ in 0..steps {
        s = step(spec, &s, &faults, BoundaryPolicy::FrozenZero)?;
        if clamp {
            s.iter_mut().zip(&keep).for_each(|(x, &k)| *x &= k as u8);
        }
        out.push(support(&s));
    }
    Ok(out)
}

/// Content hash of a tessellation's JSON serialization.
pub fn tessellation_hash(t: &Tessellation) -> Result<String> {
    Ok(hex::encode(Sha256::digest(t.to_json()?.as_bytes())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub tessellation_hash: String,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, master_seed: u64, trials: usize, t: &Tessellation) -> Result<Self> {
        Ok(RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            master_seed,
            trial_seeds: (0..trials as u64).map(|i| trial_seed(master_seed, i)).collect(),
            tessellation_hash: tessellation_hash(t)?,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        })
    }
}

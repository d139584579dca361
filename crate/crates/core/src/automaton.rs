//! Majority-vote automata over a tessellation, their weakenings and speed-ups.

use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tessellation::{assign_strength, class_of, FaceDegree, Strength, Tessellation, VertexClass, VertexId};

/// Ignore-set rules for the five families that tolerate combined faults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeakeningRule {
    /// {inf,q}, q >= 5: ignore the parent.
    Tree,
    /// {4,q}, q >= 7: ignore parents.
    Square,
    /// {3,q}, q >= 9: ignore parents; one-parent vertices also ignore siblings.
    Triangle,
    /// even p >= 6, q >= 5: ignore parents.
    EvenFace,
    /// odd p >= 5, q >= 5: ignore parents; weak cousin vertices ignore their cousin.
    OddFace,
}

/// The weakening that applies to {p,q}.
pub fn weakening_rule(p: FaceDegree, q: u32) -> Result<WeakeningRule> {
    let rule = match p {
        FaceDegree::Infinite if q >= 5 => WeakeningRule::Tree,
        FaceDegree::Finite(4) if q >= 7 => WeakeningRule::Square,
        FaceDegree::Finite(3) if q >= 9 => WeakeningRule::Triangle,
        FaceDegree::Finite(n) if n >= 6 && n % 2 == 0 && q >= 5 => WeakeningRule::EvenFace,
        FaceDegree::Finite(n) if n >= 5 && n % 2 == 1 && q >= 5 => WeakeningRule::OddFace,
        _ => {
            return Err(Error::OutsidePositiveRegion {
                p: p.to_string(),
                q,
            })
        }
    };
    Ok(rule)
}

/// What a boundary cell (one with an incomplete guardian set) does each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    /// Outermost generation pinned to 0.
    FrozenZero,
    /// Outermost generation pinned to 1.
    AdversarialBoundary,
}

impl BoundaryPolicy {
    pub fn value(self) -> u8 {
        match self {
            BoundaryPolicy::FrozenZero => 0,
            BoundaryPolicy::AdversarialBoundary => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AutomatonSpec {
    tess: Arc<Tessellation>,
    pub self_vote: bool,
    pub speedup: u32,
    pub weakening: Option<WeakeningRule>,
    offsets: Vec<u32>,
    guardians: Vec<VertexId>,
    ignored: Vec<bool>,
    threshold: Vec<u32>,
    reduced: Vec<u32>,
    complete: Vec<bool>,
    strength: Option<Vec<Strength>>,
}

/// Build the majority automaton on `t`, optionally weakened and sped up.
pub fn build_automaton(t: Arc<Tessellation>, weakening: Option<WeakeningRule>, speedup: u32) -> Result<AutomatonSpec> {
    if speedup == 0 {
        return Err(Error::InvalidSpec("speed-up factor must be at least 1".into()));
    }
    let q = t.q();
    if let Some(rule) = weakening {
        let expected = weakening_rule(t.p(), q).ok();
        if expected != Some(rule) || t.sibling_free {
            return Err(Error::WeakeningNotApplicable {
                p: t.p().to_string(),
                q,
            });
        }
    }
    let self_vote = q.is_multiple_of(2);
    let full = if self_vote { q + 1 } else { q };
    let strength = match weakening {
        Some(WeakeningRule::OddFace) => Some(assign_strength(&t)?),
        _ => None,
    };
    let n = t.vertex_count();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut guardians = Vec::with_capacity(n * full as usize);
    let mut ignored = Vec::with_capacity(n * full as usize);
    let mut threshold = Vec::with_capacity(n);
    let mut reduced = Vec::with_capacity(n);
    let mut complete = Vec::with_capacity(n);
    offsets.push(0);
    for v in 0..n as VertexId {
        let rec = &t.vertices[v as usize];
        let class = class_of(&t, v);
        let ignore = |w: VertexId| -> bool {
            let Some(rule) = weakening else { return false };
            if w == v {
                return self_vote;
            }
            if rec.parents.contains(&w) {
                return true;
            }
            match rule {
                WeakeningRule::Triangle => {
                    matches!(class, VertexClass::OneParent { .. }) && rec.peers().any(|x| x == w)
                }
                WeakeningRule::OddFace => {
                    let weak = strength.as_ref().map(|s| s[v as usize]) == Some(Strength::Weak);
                    weak && matches!(class, VertexClass::OneParent { has_cousin: true }) && rec.peers().any(|x| x == w)
                }
                _ => false,
            }
        };
        let mut count_ignored = 0;
        for w in t.neighbors(v).chain(self_vote.then_some(v)) {
            guardians.push(w);
            let ig = ignore(w);
            count_ignored += ig as u32;
            ignored.push(ig);
        }
        offsets.push(guardians.len() as u32);
        let thr = full.div_ceil(2);
        threshold.push(thr);
        reduced.push(thr.saturating_sub(count_ignored));
        complete.push(rec.interior);
    }
    Ok(AutomatonSpec {
        tess: t,
        self_vote,
        speedup,
        weakening,
        offsets,
        guardians,
        ignored,
        threshold,
        reduced,
        complete,
        strength,
    })
}

impl AutomatonSpec {
    pub fn tessellation(&self) -> &Tessellation {
        &self.tess
    }

    pub fn tessellation_arc(&self) -> Arc<Tessellation> {
        Arc::clone(&self.tess)
    }

    pub fn cell_count(&self) -> usize {
        self.threshold.len()
    }

    /// Guardians of v: neighbors in rotation order, then v itself when q is even.
    pub fn guardians(&self, v: VertexId) -> &[VertexId] {
        let (a, b) = (self.offsets[v as usize] as usize, self.offsets[v as usize + 1] as usize);
        &self.guardians[a..b]
    }

    pub fn ignored_flags(&self, v: VertexId) -> &[bool] {
        let (a, b) = (self.offsets[v as usize] as usize, self.offsets[v as usize + 1] as usize);
        &self.ignored[a..b]
    }

    pub fn ignore_set(&self, v: VertexId) -> Vec<VertexId> {
        self.guardians(v)
            .iter()
            .zip(self.ignored_flags(v))
            .filter(|(_, &i)| i)
            .map(|(&w, _)| w)
            .collect()
    }

    /// Guardians that are not ignored.
    pub fn active_guardians(&self, v: VertexId) -> Vec<VertexId> {
        self.guardians(v)
            .iter()
            .zip(self.ignored_flags(v))
            .filter(|(_, &i)| !i)
            .map(|(&w, _)| w)
            .collect()
    }

    pub fn threshold(&self, v: VertexId) -> u32 {
        self.threshold[v as usize]
    }

    pub fn reduced_threshold(&self, v: VertexId) -> u32 {
        self.reduced[v as usize]
    }

    /// All guardians present (the vertex is interior).
    pub fn is_complete(&self, v: VertexId) -> bool {
        self.complete[v as usize]
    }

    pub fn strength(&self) -> Option<&[Strength]> {
        self.strength.as_deref()
    }

    /// Next state of one interior, non-faulty cell.
    pub fn vote(&self, v: VertexId, state: &[u8]) -> u8 {
        let ones: u32 = self
            .guardians(v)
            .iter()
            .zip(self.ignored_flags(v))
            .map(|(&w, &ig)| if ig { 1 } else { state[w as usize] as u32 })
            .sum();
        (ones >= self.threshold(v)) as u8
    }
}

/// Guardian subsets of size equal to the (reduced) threshold, ignored guardians excluded.
pub fn minimal_error_sets(spec: &AutomatonSpec, a: VertexId) -> Result<impl Iterator<Item = Vec<VertexId>>> {
    if a as usize >= spec.cell_count() {
        return Err(Error::UnknownVertex(a));
    }
    if !spec.is_complete(a) {
        return Err(Error::BoundaryVertex(a));
    }
    let k = spec.reduced_threshold(a) as usize;
    Ok(spec.active_guardians(a).into_iter().combinations(k))
}

/// Unions of one minimal error set per member of a minimal error set of `a`
/// (the error sets of the two-fold speed-up). Not deduplicated.
pub struct ComposedErrorSets {
    outer: Vec<Vec<VertexId>>,
    inner: Vec<Vec<Vec<Vec<VertexId>>>>,
    outer_idx: usize,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for ComposedErrorSets {
    type Item = Vec<VertexId>;

    fn next(&mut self) -> Option<Vec<VertexId>> {
        if self.done {
            return None;
        }
        let lists = &self.inner[self.outer_idx];
        let mut out: Vec<VertexId> = self.odometer.iter().enumerate().flat_map(|(i, &j)| lists[i][j].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        // advance
        let mut i = self.odometer.len();
        loop {
            if i == 0 {
                self.outer_idx += 1;
                if self.outer_idx == self.outer.len() {
                    self.done = true;
                } else {
                    self.odometer = vec![0; self.outer[self.outer_idx].len()];
                }
                break;
            }
            i -= 1;
            self.odometer[i] += 1;
            if self.odometer[i] < self.inner[self.outer_idx][i].len() {
                break;
            }
            self.odometer[i] = 0;
        }
        Some(out)
    }
}

pub fn composed_error_sets(spec: &AutomatonSpec, a: VertexId) -> Result<ComposedErrorSets> {
    if spec.speedup != 2 {
        return Err(Error::NotApplicable(format!(
            "composed error sets need a two-fold speed-up, got {}",
            spec.speedup
        )));
    }
    let outer: Vec<Vec<VertexId>> = minimal_error_sets(spec, a)?.collect();
    let mut inner = Vec::with_capacity(outer.len());
    for t in &outer {
        let mut per = Vec::with_capacity(t.len());
        for &c in t {
            per.push(minimal_error_sets(spec, c).map_err(|_| Error::BoundaryVertex(a))?.collect::<Vec<_>>());
        }
        inner.push(per);
    }
    let done = outer.is_empty();
    let odometer = outer.first().map(|t| vec![0; t.len()]).unwrap_or_default();
    Ok(ComposedErrorSets {
        outer,
        inner,
        outer_idx: 0,
        odometer,
        done,
    })
}

/// Number of composed sets before deduplication.
pub fn composed_error_set_count(spec: &AutomatonSpec, a: VertexId) -> Result<u128> {
    let mut total: u128 = 0;
    for t in minimal_error_sets(spec, a)? {
        let mut prod: u128 = 1;
        for c in t {
            prod *= minimal_error_sets(spec, c).map_err(|_| Error::BoundaryVertex(a))?.count() as u128;
        }
        total += prod;
    }
    Ok(total)
}

fn check_len(spec: &AutomatonSpec, len: usize) -> Result<()> {
    if len != spec.cell_count() {
        return Err(Error::ShapeMismatch {
            expected: spec.cell_count(),
            got: len,
        });
    }
    Ok(())
}

/// One synchronous update. Faulty cells become 1; boundary cells follow the policy.
pub fn step(spec: &AutomatonSpec, state: &[u8], faults: &[bool], boundary: BoundaryPolicy) -> Result<Vec<u8>> {
    check_len(spec, state.len())?;
    check_len(spec, faults.len())?;
    Ok((0..spec.cell_count() as VertexId)
        .map(|v| {
            if !spec.is_complete(v) {
                boundary.value()
            } else if faults[v as usize] {
                1
            } else {
                spec.vote(v, state)
            }
        })
        .collect())
}

/// `speedup` consecutive steps, one fault mask per sub-step.
pub fn speed_up_step(
    spec: &AutomatonSpec,
    state: &[u8],
    faults: &[Vec<bool>],
    boundary: BoundaryPolicy,
) -> Result<Vec<u8>> {
    if faults.len() != spec.speedup as usize {
        return Err(Error::ShapeMismatch {
            expected: spec.speedup as usize,
            got: faults.len(),
        });
    }
    let mut s = state.to_vec();
    for mask in faults {
        s = step(spec, &s, mask, boundary)?;
    }
    Ok(s)
}

/// Size of the ball of radius `kappa` around v (v included).
pub fn dependence_ball(t: &Tessellation, v: VertexId, kappa: u32) -> Vec<VertexId> {
    let mut seen = vec![v];
    let mut frontier = vec![v];
    for _ in 0..kappa {
        let mut next = Vec::new();
        for &u in &frontier {
            for w in t.neighbors(u) {
                if !seen.contains(&w) {
                    seen.push(w);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Cells reachable from `a` by exactly `kappa` dependence arcs.
pub fn dependents_after(spec: &AutomatonSpec, a: VertexId, kappa: u32) -> Vec<VertexId> {
    let mut layer = vec![a];
    for _ in 0..kappa {
        let mut next: Vec<VertexId> = layer.iter().flat_map(|&u| spec.guardians(u).iter().copied()).collect();
        next.sort_unstable();
        next.dedup();
        layer = next;
    }
    layer
}

//! Self-sustaining islands, opposite-edge sets and pier-supported bridges.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::automaton::AutomatonSpec;
use crate::error::{Error, Result};
use crate::simulate::run_deterministic;
use crate::tessellation::{strip_sibling_edges, trace_faces, EdgeId, FaceDegree, Tessellation, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IslandKind {
    /// Two adjacent vertices (q = 2).
    AdjacentPair,
    /// The p vertices around a face (3 <= q <= 4, p finite).
    Face,
    /// A vertex and its q neighbors (5 <= q <= 6, p = 3).
    Star,
}

/// The island shape that defeats transient-fault tolerance on {p,q}.
pub fn island_kind_for(p: FaceDegree, q: u32) -> Result<IslandKind> {
    match (p, q) {
        (_, 2) => Ok(IslandKind::AdjacentPair),
        (FaceDegree::Finite(_), 3..=4) => Ok(IslandKind::Face),
        (FaceDegree::Finite(3), 5..=6) => Ok(IslandKind::Star),
        _ => Err(Error::NotApplicable(format!("{{{p},{q}}} has no finite self-sustaining island"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountCheck {
    pub vertex: VertexId,
    pub supporting: u32,
    pub threshold: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticReport {
    pub valid: bool,
    pub counts: Vec<CountCheck>,
    pub violations: Vec<CountCheck>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IslandCertificate {
    pub kind: IslandKind,
    pub vertices: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeCertificate {
    pub bridge: Vec<VertexId>,
    pub piers: Vec<VertexId>,
    /// Chain the bridge was cut from: path vertices (trees) or rung edges as vertex pairs.
    pub chain: Vec<Vec<VertexId>>,
}

fn require_interior(t: &Tessellation, vs: &[VertexId]) -> Result<()> {
    for &v in vs {
        if v as usize >= t.vertex_count() {
            return Err(Error::UnknownVertex(v));
        }
        if !t.is_interior(v) {
            return Err(Error::InsufficientMargin(format!("vertex {v} lies on the truncation boundary")));
        }
    }
    Ok(())
}

/// Build the island of the given kind around the origin.
pub fn make_island(t: &Tessellation, kind: IslandKind) -> Result<IslandCertificate> {
    let o = t.origin;
    let mut vertices = match kind {
        IslandKind::AdjacentPair => {
            let first = t.neighbors(o).next().ok_or_else(|| Error::InsufficientMargin("origin has no neighbor".into()))?;
            vec![o, first]
        }
        IslandKind::Face => {
            let p = t
                .p()
                .finite()
                .ok_or_else(|| Error::NotApplicable("trees have no closed faces".into()))? as usize;
            trace_faces(t)
                .into_iter()
                .find(|f| f.len() == p && f.contains(&o))
                .ok_or_else(|| Error::InsufficientMargin("no closed face at the origin".into()))?
        }
        IslandKind::Star => std::iter::once(o).chain(t.neighbors(o)).collect(),
    };
    vertices.sort_unstable();
    vertices.dedup();
    require_interior(t, &vertices)?;
    Ok(IslandCertificate { kind, vertices })
}

fn support_counts(spec: &AutomatonSpec, targets: &[VertexId], support: &BTreeSet<VertexId>) -> StaticReport {
    let counts: Vec<CountCheck> = targets
        .iter()
        .map(|&v| CountCheck {
            vertex: v,
            supporting: spec.guardians(v).iter().filter(|w| support.contains(w)).count() as u32,
            threshold: spec.threshold(v),
        })
        .collect();
    let violations: Vec<CountCheck> = counts
        .iter()
        .filter(|c| c.supporting < c.threshold || !spec.is_complete(c.vertex))
        .cloned()
        .collect();
    StaticReport {
        valid: violations.is_empty() && !targets.is_empty(),
        counts,
        violations,
    }
}

/// Every cell of I has at least threshold-many guardians in I.
pub fn verify_island(spec: &AutomatonSpec, island: &[VertexId]) -> StaticReport {
    let set: BTreeSet<VertexId> = island.iter().copied().collect();
    support_counts(spec, island, &set)
}

/// Fault-free run with everything outside I clamped to 0: I stays in error at every step.
pub fn island_persists(spec: &AutomatonSpec, island: &[VertexId], steps: u32) -> Result<bool> {
    let traj = run_deterministic(spec, island, &[], true, steps)?;
    Ok(traj.iter().all(|s| island.iter().all(|v| s.binary_search(v).is_ok())))
}

/// Every cell of I has at least threshold-many guardians in I and J.
pub fn verify_bridge(spec: &AutomatonSpec, bridge: &[VertexId], piers: &[VertexId]) -> StaticReport {
    let set: BTreeSet<VertexId> = bridge.iter().chain(piers).copied().collect();
    let mut r = support_counts(spec, bridge, &set);
    if bridge.iter().any(|v| piers.contains(v)) {
        r.valid = false;
    }
    r
}

/// J permanently faulted, I initially in error, all else clamped to 0: I stays in error.
pub fn bridge_persists(spec: &AutomatonSpec, bridge: &[VertexId], piers: &[VertexId], steps: u32) -> Result<bool> {
    let traj = run_deterministic(spec, bridge, piers, true, steps)?;
    Ok(traj.iter().all(|s| bridge.iter().all(|v| s.binary_search(v).is_ok())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OppositeEdgeSet {
    pub edges: Vec<EdgeId>,
    /// Edges of the set lying on fewer than two closed faces (the set leaves the truncation there).
    pub boundary_edges: Vec<EdgeId>,
}

struct Quads {
    faces: Vec<Vec<VertexId>>,
    by_edge: HashMap<EdgeId, Vec<usize>>,
}

fn quads(t: &Tessellation) -> Result<Quads> {
    let mut faces = trace_faces(t);
    let outer = faces
        .iter()
        .enumerate()
        .max_by_key(|(i, f)| (f.len(), std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
        .expect("at least one face");
    faces.remove(outer);
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        if f.len() != 4 {
            return Err(Error::FaceDegreeNot4 {
                face: i,
                degree: f.len(),
            });
        }
        for j in 0..4 {
            let e = t.edge_between(f[j], f[(j + 1) % 4]).expect("face edge exists");
            by_edge.entry(e).or_default().push(i);
        }
    }
    Ok(Quads { faces, by_edge })
}

fn opposite(t: &Tessellation, face: &[VertexId], e: EdgeId) -> EdgeId {
    let edge = &t.edges[e as usize];
    let j = (0..4)
        .find(|&j| {
            let (x, y) = (face[j], face[(j + 1) % 4]);
            (x == edge.a && y == edge.b) || (x == edge.b && y == edge.a)
        })
        .expect("edge on face");
    t.edge_between(face[(j + 2) % 4], face[(j + 3) % 4]).expect("opposite edge exists")
}

/// Closure of {e} under taking the opposite edge across either incident face.
/// All closed faces of `t` must have degree 4 (pass a sibling-free tessellation for p = 3).
pub fn opposite_edge_set(t: &Tessellation, e: EdgeId) -> Result<OppositeEdgeSet> {
    if e as usize >= t.edge_count() {
        return Err(Error::InvalidSpec(format!("unknown edge {e}")));
    }
    let qd = quads(t)?;
    let mut seen = BTreeSet::from([e]);
    let mut queue = VecDeque::from([e]);
    let mut boundary = Vec::new();
    while let Some(f) = queue.pop_front() {
        let fs = qd.by_edge.get(&f).map(Vec::as_slice).unwrap_or(&[]);
        if fs.len() < 2 {
            boundary.push(f);
        }
        for &fi in fs {
            let g = opposite(t, &qd.faces[fi], f);
            if seen.insert(g) {
                queue.push_back(g);
            }
        }
    }
    boundary.sort_unstable();
    Ok(OppositeEdgeSet {
        edges: seen.into_iter().collect(),
        boundary_edges: boundary,
    })
}

/// Rungs of the opposite-edge chain through `e`, in chain order, and the index of `e`.
fn chain_through(t: &Tessellation, qd: &Quads, e: EdgeId) -> (Vec<EdgeId>, usize) {
    let faces_of = |f: EdgeId| qd.by_edge.get(&f).cloned().unwrap_or_default();
    let walk = |first_face: usize| {
        let mut out = Vec::new();
        let (mut cur, mut via) = (e, first_face);
        loop {
            let next = opposite(t, &qd.faces[via], cur);
            if out.contains(&next) || next == e {
                break;
            }
            out.push(next);
            match faces_of(next).into_iter().find(|&fi| fi != via) {
                Some(fi) => {
                    cur = next;
                    via = fi;
                }
                None => break,
            }
        }
        out
    };
    let fs = faces_of(e);
    let forward = fs.first().map(|&f| walk(f)).unwrap_or_default();
    let backward = fs.get(1).map(|&f| walk(f)).unwrap_or_default();
    let mut chain: Vec<EdgeId> = backward.iter().rev().copied().collect();
    let idx = chain.len();
    chain.push(e);
    chain.extend(forward);
    (chain, idx)
}

fn endpoints(t: &Tessellation, e: EdgeId) -> Vec<VertexId> {
    let edge = &t.edges[e as usize];
    vec![edge.a, edge.b]
}

fn descend(t: &Tessellation, mut v: VertexId, steps: u32, rightmost: bool) -> Vec<VertexId> {
    let mut out = Vec::new();
    for _ in 0..steps {
        let ch = &t.vertices[v as usize].children;
        v = if rightmost { *ch.last().expect("child") } else { ch[0] };
        out.push(v);
    }
    out
}

/// A bridge I with piers J cut from a face boundary (trees) or an opposite-edge chain
/// ({4,q} directly, {3,q} through its sibling-free derivative).
/// I covers m-1 chain steps on one side of the origin and n-1 on the other; J caps both ends.
/// For p = 3 a valid window typically needs eight generations.
pub fn make_bridge(t: &Tessellation, m: u32, n: u32) -> Result<BridgeCertificate> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidSpec("m and n must be at least 1".into()));
    }
    match t.p() {
        FaceDegree::Infinite => {
            let g = t.generations_built;
            if m.max(n) >= g {
                return Err(Error::InsufficientMargin(format!("need more than {} generations", m.max(n))));
            }
            let o = t.origin;
            let q = t.q() as usize;
            let right_start = t.vertices[o as usize].children[0];
            let left_start = t.vertices[o as usize].children[q - 1];
            let mut right = vec![right_start];
            right.extend(descend(t, right_start, n - 1, false));
            let mut left = vec![left_start];
            left.extend(descend(t, left_start, m - 1, true));
            let mut path: Vec<VertexId> = left.iter().rev().copied().collect();
            path.push(o);
            path.extend(&right);
            let piers = vec![path[0], *path.last().expect("nonempty")];
            let bridge = path[1..path.len() - 1].to_vec();
            require_interior(t, &path)?;
            Ok(BridgeCertificate {
                bridge,
                piers,
                chain: path.into_iter().map(|v| vec![v]).collect(),
            })
        }
        FaceDegree::Finite(4) => {
            let qd = quads(t)?;
            let e0 = t.rotation(t.origin)[0].1;
            let (chain, idx) = chain_through(t, &qd, e0);
            cut_window(t, t, &chain, idx, m, n).ok_or_else(|| {
                Error::InsufficientMargin("opposite-edge chain leaves the truncation too early".into())
            })
        }
        FaceDegree::Finite(3) => {
            let stripped = strip_sibling_edges(t)?;
            let qd = quads(&stripped)?;
            let spec = crate::automaton::build_automaton(std::sync::Arc::new(t.clone()), None, 1)?;
            let mut starts: Vec<EdgeId> = (0..stripped.edge_count() as EdgeId).collect();
            starts.sort_by_key(|&e| {
                let ed = &stripped.edges[e as usize];
                (t.generation(ed.a) + t.generation(ed.b), e)
            });
            for e in starts {
                let (chain, _) = chain_through(&stripped, &qd, e);
                let w = (m + n + 1) as usize;
                for lo in 0..chain.len().saturating_sub(w - 1) {
                    if let Some(cert) = cut_window(t, &stripped, &chain, lo + m as usize, m, n) {
                        if verify_bridge(&spec, &cert.bridge, &cert.piers).valid {
                            return Ok(cert);
                        }
                    }
                }
            }
            Err(Error::NotApplicable("no opposite-edge chain window forms a bridge".into()))
        }
        p => Err(Error::NotApplicable(format!("bridges are built for p in {{3,4,inf}}, got {p}"))),
    }
}

fn cut_window(t: &Tessellation, chain_t: &Tessellation, chain: &[EdgeId], idx: usize, m: u32, n: u32) -> Option<BridgeCertificate> {
    let (m, n) = (m as usize, n as usize);
    if idx < m || idx + n >= chain.len() {
        return None;
    }
    let rungs: Vec<Vec<VertexId>> = chain[idx - m..=idx + n].iter().map(|&e| endpoints(chain_t, e)).collect();
    let mut piers: Vec<VertexId> = rungs[0].iter().chain(rungs.last().expect("nonempty")).copied().collect();
    let mut bridge: Vec<VertexId> = rungs[1..rungs.len() - 1].iter().flatten().copied().collect();
    piers.sort_unstable();
    piers.dedup();
    bridge.sort_unstable();
    bridge.dedup();
    if bridge.iter().any(|v| piers.contains(v)) {
        return None;
    }
    if require_interior(t, &bridge).is_err() || require_interior(t, &piers).is_err() {
        return None;
    }
    Some(BridgeCertificate {
        bridge,
        piers,
        chain: rungs,
    })
}

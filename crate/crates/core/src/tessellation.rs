//! Layered truncations of the regular tessellation {p,q}.
//!
//! Vertices are grouped into generations by distance from the origin. Each
//! generation is a cyclic sequence; positions increase clockwise ("to the
//! right"). The rotation stored for every vertex lists its incident edges in
//! clockwise order: children left to right, right peer, right parent, left
//! parent, left peer.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;
pub type EdgeId = u32;

pub const SCHEMA_VERSION: u32 = 1;

/// Face degree p, which may be infinite (trees).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "FaceDegreeRepr", into = "FaceDegreeRepr")]
pub enum FaceDegree {
    Finite(u32),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FaceDegreeRepr {
    Num(u32),
    Text(String),
}

impl TryFrom<FaceDegreeRepr> for FaceDegree {
    type Error = String;
    fn try_from(r: FaceDegreeRepr) -> std::result::Result<Self, String> {
        match r {
            FaceDegreeRepr::Num(n) => Ok(FaceDegree::Finite(n)),
            FaceDegreeRepr::Text(s) => s.parse(),
        }
    }
}

impl From<FaceDegree> for FaceDegreeRepr {
    fn from(p: FaceDegree) -> Self {
        match p {
            FaceDegree::Finite(n) => FaceDegreeRepr::Num(n),
            FaceDegree::Infinite => FaceDegreeRepr::Text("inf".into()),
        }
    }
}

impl FaceDegree {
    pub fn finite(self) -> Option<u32> {
        match self {
            FaceDegree::Finite(n) => Some(n),
            FaceDegree::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, FaceDegree::Infinite)
    }

    /// True for odd finite p.
    pub fn is_odd(self) -> bool {
        matches!(self, FaceDegree::Finite(n) if n % 2 == 1)
    }
}

impl fmt::Display for FaceDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceDegree::Finite(n) => write!(f, "{n}"),
            FaceDegree::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for FaceDegree {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "inf" | "infinity" | "∞" => Ok(FaceDegree::Infinite),
            _ => t
                .parse::<u32>()
                .map(FaceDegree::Finite)
                .map_err(|_| format!("face degree must be an integer or 'inf', got '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TessellationSpec {
    pub p: FaceDegree,
    pub q: u32,
    pub max_generation: u32,
    #[serde(default)]
    pub vertex_budget: Option<usize>,
    /// Accept a spherical {p,q} as long as the truncation does not close up.
    #[serde(default)]
    pub spherical_patch: bool,
}

impl TessellationSpec {
    pub fn new(p: FaceDegree, q: u32, max_generation: u32) -> Self {
        TessellationSpec {
            p,
            q,
            max_generation,
            vertex_budget: None,
            spherical_patch: false,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.vertex_budget = Some(budget);
        self
    }

    /// 1/p + 1/q > 1/2, i.e. 2(p+q) > pq.
    pub fn is_spherical(&self) -> bool {
        match self.p {
            FaceDegree::Infinite => false,
            FaceDegree::Finite(p) => 2 * (p + self.q) > p * self.q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::InvalidSpec(format!("q must be at least 2, got {}", self.q)));
        }
        if let FaceDegree::Finite(p) = self.p {
            if p < 3 {
                return Err(Error::InvalidSpec(format!("p must be at least 3, got {p}")));
            }
        }
        if self.vertex_budget == Some(0) {
            return Err(Error::InvalidSpec("vertex budget must be at least 1".into()));
        }
        if self.q != 2 && self.is_spherical() && !self.spherical_patch {
            return Err(Error::SphericalUnsupported {
                p: self.p.to_string(),
                q: self.q,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    ParentChild,
    Sibling,
    Cousin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    /// Parent for ParentChild edges, left vertex for same-generation edges.
    pub a: VertexId,
    pub b: VertexId,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub generation: u32,
    pub position: u32,
    /// Left parent first.
    pub parents: Vec<VertexId>,
    /// Left to right.
    pub children: Vec<VertexId>,
    pub left_peer: Option<VertexId>,
    pub right_peer: Option<VertexId>,
    pub interior: bool,
}

impl Vertex {
    pub fn peers(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.left_peer.into_iter().chain(self.right_peer)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum VertexClass {
    Origin,
    OneParent { has_cousin: bool },
    TwoParent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strength {
    Strong,
    Weak,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tessellation {
    pub spec: TessellationSpec,
    /// Last generation actually built (the vertex budget may stop early).
    pub generations_built: u32,
    /// Sibling edges were removed ({3,q}').
    pub sibling_free: bool,
    pub origin: VertexId,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub generations: Vec<Vec<VertexId>>,
    /// Clockwise (neighbor, edge) lists.
    rotation: Vec<Vec<(VertexId, EdgeId)>>,
}

struct Builder {
    q: u32,
    p: FaceDegree,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    generations: Vec<Vec<VertexId>>,
}

impl Builder {
    fn add_vertex(&mut self, generation: u32) -> VertexId {
        let id = self.vertices.len() as VertexId;
        self.vertices.push(Vertex {
            id,
            generation,
            position: 0,
            parents: Vec::new(),
            children: Vec::new(),
            left_peer: None,
            right_peer: None,
            interior: false,
        });
        id
    }

    fn add_edge(&mut self, a: VertexId, b: VertexId, kind: EdgeKind) {
        let id = self.edges.len() as EdgeId;
        self.edges.push(Edge { id, a, b, kind });
    }

    fn same_generation_kind(&self) -> EdgeKind {
        if self.p == FaceDegree::Finite(3) {
            EdgeKind::Sibling
        } else {
            EdgeKind::Cousin
        }
    }

    /// Close every gap of size 1 with a same-generation edge.
    fn close_unit_gaps(&mut self, ring: &[VertexId], gaps: &mut [Option<u32>]) {
        let Some(p) = self.p.finite() else { return };
        if p % 2 == 0 {
            return;
        }
        let kind = self.same_generation_kind();
        let n = ring.len();
        for i in 0..n {
            if gaps[i] == Some(1) {
                let (a, b) = (ring[i], ring[(i + 1) % n]);
                self.add_edge(a, b, kind);
                self.vertices[a as usize].right_peer = Some(b);
                self.vertices[b as usize].left_peer = Some(a);
                gaps[i] = Some(p - 1);
            }
        }
    }

    fn child_counts(&self, ring: &[VertexId], generation: u32) -> Result<Vec<u32>> {
        ring.iter()
            .map(|&v| {
                let rec = &self.vertices[v as usize];
                let used = rec.parents.len() as u32 + rec.peers().count() as u32;
                if used >= self.q {
                    Err(Error::SphericalClosure { generation })
                } else {
                    Ok(self.q - used)
                }
            })
            .collect()
    }

    fn next_size(ring_len: usize, counts: &[u32], gaps: &[Option<u32>]) -> usize {
        let merges = gaps.iter().filter(|g| **g == Some(2)).count();
        debug_assert_eq!(ring_len, counts.len());
        counts.iter().map(|&c| c as usize).sum::<usize>() - merges
    }

    /// Grow generation g+1 from ring g. Returns the new ring and its gaps.
    fn grow(
        &mut self,
        ring: &[VertexId],
        gaps: &[Option<u32>],
        counts: &[u32],
        generation: u32,
    ) -> Result<(Vec<VertexId>, Vec<Option<u32>>)> {
        let n = ring.len();
        let inner = self.p.finite().map(|p| p - 2);
        let merge_right: Vec<bool> = gaps.iter().map(|g| *g == Some(2)).collect();
        let merge_left = |i: usize| merge_right[(i + n - 1) % n];
        for i in 0..n {
            if counts[i] == 1 && merge_left(i) && merge_right[i] && n > 1 {
                return Err(Error::SphericalClosure {
                    generation: generation + 1,
                });
            }
        }
        let mut next: Vec<VertexId> = Vec::new();
        // gap_before[k] is the gap between next[k-1] and next[k]
        let mut gap_before: Vec<Option<u32>> = Vec::new();
        let mut prev_parent: Option<usize> = None;
        for i in 0..n {
            let parent = ring[i];
            for j in 0..counts[i] {
                let last = j + 1 == counts[i];
                if j == 0 && merge_left(i) && i > 0 {
                    let shared = *next.last().expect("merged child exists");
                    self.vertices[shared as usize].parents.push(parent);
                    self.vertices[parent as usize].children.push(shared);
                    self.add_edge(parent, shared, EdgeKind::ParentChild);
                } else if last && merge_right[i] && i + 1 == n && !next.is_empty() && merge_left(0) {
                    let shared = next[0];
                    self.vertices[shared as usize].parents.insert(0, parent);
                    self.vertices[parent as usize].children.push(shared);
                    self.add_edge(parent, shared, EdgeKind::ParentChild);
                } else {
                    let c = self.add_vertex(generation + 1);
                    self.vertices[c as usize].parents.push(parent);
                    self.vertices[parent as usize].children.push(c);
                    self.add_edge(parent, c, EdgeKind::ParentChild);
                    let g = match prev_parent {
                        None => None,
                        Some(pp) if pp == i => inner,
                        Some(_) => gaps[(i + n - 1) % n].map(|x| x - 2),
                    };
                    next.push(c);
                    gap_before.push(g);
                }
                prev_parent = Some(i);
            }
        }
        // Wrap-around gap between the last and the first new vertex.
        let wrap = if merge_left(0) {
            inner
        } else {
            gaps[n - 1].map(|x| x - 2)
        };
        gap_before[0] = wrap;
        let m = next.len();
        let new_gaps: Vec<Option<u32>> = (0..m).map(|k| gap_before[(k + 1) % m]).collect();
        Ok((next, new_gaps))
    }
}

impl Tessellation {
    pub fn p(&self) -> FaceDegree {
        self.spec.p
    }

    pub fn q(&self) -> u32 {
        self.spec.q
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> Result<&Vertex> {
        self.vertices.get(v as usize).ok_or(Error::UnknownVertex(v))
    }

    pub fn generation(&self, v: VertexId) -> u32 {
        self.vertices[v as usize].generation
    }

    /// Clockwise (neighbor, edge id) list.
    pub fn rotation(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.rotation[v as usize]
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.rotation[v as usize].iter().map(|&(w, _)| w)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.rotation[v as usize].len()
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.rotation[u as usize]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
    }

    /// Degree an interior vertex should have.
    pub fn expected_degree(&self, v: VertexId) -> usize {
        if self.sibling_free && v != self.origin {
            self.spec.q as usize - 2
        } else {
            self.spec.q as usize
        }
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        self.vertices[v as usize].interior
    }

    /// Degree every closed face should have.
    pub fn expected_face_degree(&self) -> Option<usize> {
        if self.sibling_free {
            Some(4)
        } else {
            self.spec.p.finite().map(|p| p as usize)
        }
    }

    /// Rebuild rotation lists from the vertex records and the edge list.
    fn rebuild_rotation(&mut self) {
        let mut lookup: HashMap<(VertexId, VertexId), EdgeId> = HashMap::with_capacity(self.edges.len());
        for e in &self.edges {
            lookup.insert((e.a.min(e.b), e.a.max(e.b)), e.id);
        }
        let key = |u: VertexId, v: VertexId| (u.min(v), u.max(v));
        self.rotation = self
            .vertices
            .iter()
            .map(|rec| {
                let order = rec
                    .children
                    .iter()
                    .copied()
                    .chain(rec.right_peer)
                    .chain(rec.parents.iter().rev().copied())
                    .chain(rec.left_peer);
                let mut out: Vec<(VertexId, EdgeId)> = Vec::new();
                for w in order {
                    if let Some(&e) = lookup.get(&key(rec.id, w)) {
                        if !out.iter().any(|&(_, f)| f == e) {
                            out.push((w, e));
                        }
                    }
                }
                out
            })
            .collect();
    }

    /// Copy with the given edge removed; interior flags are kept.
    pub fn without_edge(&self, e: EdgeId) -> Result<Tessellation> {
        let edge = self
            .edges
            .get(e as usize)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown edge {e}")))?
            .clone();
        let mut t = self.clone();
        t.edges.retain(|f| f.id != e);
        for (i, f) in t.edges.iter_mut().enumerate() {
            f.id = i as EdgeId;
        }
        let (a, b) = (edge.a as usize, edge.b as usize);
        match edge.kind {
            EdgeKind::ParentChild => {
                t.vertices[a].children.retain(|&c| c != edge.b);
                t.vertices[b].parents.retain(|&c| c != edge.a);
            }
            _ => {
                t.vertices[a].right_peer = None;
                t.vertices[b].left_peer = None;
            }
        }
        t.rebuild_rotation();
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            #[serde(flatten)]
            tess: &'a Tessellation,
            taxonomy: Vec<VertexClass>,
        }
        let taxonomy = (0..self.vertices.len() as VertexId)
            .map(|v| class_of(self, v))
            .collect();
        Ok(serde_json::to_string(&Doc {
            schema_version: SCHEMA_VERSION,
            tess: self,
            taxonomy,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Tessellation> {
        let mut t: Tessellation = serde_json::from_str(s)?;
        t.rebuild_rotation();
        Ok(t)
    }
}

fn build_q2(spec: &TessellationSpec) -> Tessellation {
    let mut b = Builder {
        q: 2,
        p: spec.p,
        vertices: Vec::new(),
        edges: Vec::new(),
        generations: Vec::new(),
    };
    let origin = b.add_vertex(0);
    b.generations.push(vec![origin]);
    let full = spec.p.finite().map(|p| p / 2);
    let mut last = spec.max_generation;
    if let Some(f) = full {
        last = last.min(f);
    }
    let budget = spec.vertex_budget.unwrap_or(usize::MAX);
    let mut ring = vec![origin, origin];
    for g in 1..=last {
        let closing_even = full == Some(g) && spec.p.finite().unwrap_or(1).is_multiple_of(2);
        let size = if closing_even { 1 } else { 2 };
        if b.vertices.len() + size > budget {
            break;
        }
        let next: Vec<VertexId> = if closing_even {
            let c = b.add_vertex(g);
            for &parent in &ring {
                b.vertices[c as usize].parents.push(parent);
                b.vertices[parent as usize].children.push(c);
                b.add_edge(parent, c, EdgeKind::ParentChild);
            }
            vec![c]
        } else {
            ring.iter()
                .map(|&parent| {
                    let c = b.add_vertex(g);
                    b.vertices[c as usize].parents.push(parent);
                    b.vertices[parent as usize].children.push(c);
                    b.add_edge(parent, c, EdgeKind::ParentChild);
                    c
                })
                .collect()
        };
        b.generations.push(next.clone());
        ring = next;
    }
    // Odd cycle: the two vertices of the last generation are adjacent.
    if let Some(p) = spec.p.finite() {
        if p % 2 == 1 && b.generations.len() as u32 - 1 == p / 2 && ring.len() == 2 {
            let kind = b.same_generation_kind();
            b.add_edge(ring[0], ring[1], kind);
            b.vertices[ring[0] as usize].right_peer = Some(ring[1]);
            b.vertices[ring[1] as usize].left_peer = Some(ring[0]);
        }
    }
    finish(spec.clone(), b)
}

fn finish(spec: TessellationSpec, b: Builder) -> Tessellation {
    let mut t = Tessellation {
        generations_built: b.generations.len() as u32 - 1,
        spec,
        sibling_free: false,
        origin: 0,
        vertices: b.vertices,
        edges: b.edges,
        generations: b.generations,
        rotation: Vec::new(),
    };
    for ring in &t.generations {
        for (pos, &v) in ring.iter().enumerate() {
            t.vertices[v as usize].position = pos as u32;
        }
    }
    t.rebuild_rotation();
    let q = t.spec.q as usize;
    for v in 0..t.vertices.len() {
        t.vertices[v].interior = t.rotation[v].len() == q;
    }
    t
}

/// Build the truncation of {p,q} through `max_generation` (or until the vertex
/// budget would be exceeded).
pub fn build_tessellation(spec: &TessellationSpec) -> Result<Tessellation> {
    spec.validate()?;
    if spec.q == 2 {
        return Ok(build_q2(spec));
    }
    let q = spec.q;
    let budget = spec.vertex_budget.unwrap_or(usize::MAX);
    if spec.max_generation >= 1 && 1 + q as usize > budget {
        return Err(Error::BudgetExceeded {
            needed: 1 + q as usize,
            budget,
        });
    }
    let mut b = Builder {
        q,
        p: spec.p,
        vertices: Vec::new(),
        edges: Vec::new(),
        generations: Vec::new(),
    };
    let origin = b.add_vertex(0);
    b.generations.push(vec![origin]);
    if spec.max_generation == 0 {
        return Ok(finish(spec.clone(), b));
    }
    let mut ring = Vec::with_capacity(q as usize);
    for _ in 0..q {
        let c = b.add_vertex(1);
        b.vertices[c as usize].parents.push(origin);
        b.vertices[origin as usize].children.push(c);
        b.add_edge(origin, c, EdgeKind::ParentChild);
        ring.push(c);
    }
    let mut gaps: Vec<Option<u32>> = vec![spec.p.finite().map(|p| p - 2); q as usize];
    b.generations.push(ring.clone());
    let mut g = 1;
    loop {
        b.close_unit_gaps(&ring, &mut gaps);
        if g == spec.max_generation {
            break;
        }
        let counts = b.child_counts(&ring, g)?;
        let size = Builder::next_size(ring.len(), &counts, &gaps);
        if b.vertices.len() + size > budget {
            log::debug!("vertex budget {budget} stops the build after generation {g}");
            break;
        }
        let (next, next_gaps) = b.grow(&ring, &gaps, &counts, g)?;
        b.generations.push(next.clone());
        ring = next;
        gaps = next_gaps;
        g += 1;
    }
    Ok(finish(spec.clone(), b))
}

pub fn class_of(t: &Tessellation, v: VertexId) -> VertexClass {
    let rec = &t.vertices[v as usize];
    match rec.parents.len() {
        0 => VertexClass::Origin,
        1 => {
            let cousins = t.rotation[v as usize]
                .iter()
                .filter(|&&(_, e)| t.edges[e as usize].kind == EdgeKind::Cousin)
                .count();
            VertexClass::OneParent {
                has_cousin: cousins == 1,
            }
        }
        _ => VertexClass::TwoParent,
    }
}

pub fn classify_vertex(t: &Tessellation, v: VertexId) -> Result<VertexClass> {
    t.vertex(v)?;
    Ok(class_of(t, v))
}

/// Strong/weak labels for odd p >= 5, assigned generation by generation.
pub fn assign_strength(t: &Tessellation) -> Result<Vec<Strength>> {
    match t.spec.p {
        FaceDegree::Finite(p) if p >= 5 && p % 2 == 1 => {}
        other => {
            return Err(Error::NotApplicable(format!(
                "strength labels need odd p >= 5, got p = {other}"
            )))
        }
    }
    let mut out = vec![Strength::NotApplicable; t.vertices.len()];
    for ring in &t.generations {
        for &v in ring {
            out[v as usize] = match class_of(t, v) {
                VertexClass::Origin => Strength::Strong,
                VertexClass::TwoParent => Strength::Weak,
                VertexClass::OneParent { has_cousin: false } => Strength::Strong,
                VertexClass::OneParent { has_cousin: true } => {
                    let parent = t.vertices[v as usize].parents[0];
                    match out[parent as usize] {
                        Strength::Weak => Strength::Strong,
                        _ => Strength::Weak,
                    }
                }
            };
        }
    }
    Ok(out)
}

/// Delete every sibling edge of a {3,q} truncation.
pub fn strip_sibling_edges(t: &Tessellation) -> Result<Tessellation> {
    if t.spec.p != FaceDegree::Finite(3) {
        return Err(Error::NotApplicable(format!(
            "sibling edges exist only for p = 3, got p = {}",
            t.spec.p
        )));
    }
    let mut s = t.clone();
    s.edges.retain(|e| e.kind != EdgeKind::Sibling);
    for (i, e) in s.edges.iter_mut().enumerate() {
        e.id = i as EdgeId;
    }
    for rec in &mut s.vertices {
        rec.left_peer = None;
        rec.right_peer = None;
    }
    s.sibling_free = true;
    s.rebuild_rotation();
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub generation_sizes: Vec<usize>,
    pub class_counts: BTreeMap<String, usize>,
    pub face_count: usize,
}

struct Audit<'a> {
    t: &'a Tessellation,
    violations: Vec<Violation>,
}

impl Audit<'_> {
    fn flag(&mut self, rule: &str, vertices: Vec<VertexId>, edges: Vec<EdgeId>, message: String) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            vertices,
            edges,
            message,
        });
    }

    fn bfs_generations(&mut self) {
        let t = self.t;
        let n = t.vertices.len();
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::from([t.origin]);
        dist[t.origin as usize] = 0;
        while let Some(v) = queue.pop_front() {
            for w in t.neighbors(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        for (v, &d) in dist.iter().enumerate().take(n) {
            let g = t.vertices[v].generation;
            if d != g {
                self.flag(
                    "generation",
                    vec![v as VertexId],
                    vec![],
                    format!("stored generation {g}, graph distance {}", d as i64),
                );
            }
        }
        for (g, ring) in t.generations.iter().enumerate() {
            for (pos, &v) in ring.iter().enumerate() {
                let rec = &t.vertices[v as usize];
                if rec.generation as usize != g || rec.position as usize != pos {
                    self.flag(
                        "generation",
                        vec![v],
                        vec![],
                        "generation list disagrees with the vertex record".into(),
                    );
                }
            }
        }
    }

    fn degrees(&mut self) {
        let t = self.t;
        for rec in &t.vertices {
            let v = rec.id;
            let d = t.degree(v);
            let want = t.expected_degree(v);
            if rec.interior && d != want {
                self.flag(
                    "degree",
                    vec![v],
                    vec![],
                    format!("interior vertex has degree {d}, expected {want}"),
                );
            } else if d > want {
                self.flag("degree", vec![v], vec![], format!("degree {d} exceeds {want}"));
            }
            if rec.generation < t.generations_built && !rec.interior {
                self.flag(
                    "degree",
                    vec![v],
                    vec![],
                    format!("vertex in generation {} is not interior", rec.generation),
                );
            }
        }
    }

    fn edge_kinds(&mut self) {
        let t = self.t;
        let p = t.spec.p;
        for e in &t.edges {
            let (ga, gb) = (t.generation(e.a), t.generation(e.b));
            let ok = match e.kind {
                EdgeKind::ParentChild => {
                    gb == ga + 1 && t.vertices[e.b as usize].parents.contains(&e.a)
                }
                EdgeKind::Sibling => ga == gb && p == FaceDegree::Finite(3),
                EdgeKind::Cousin => {
                    ga == gb && p.is_odd() && p.finite().unwrap_or(0) >= 5
                }
            };
            if !ok {
                self.flag(
                    "edge-kind",
                    vec![e.a, e.b],
                    vec![e.id],
                    format!("{:?} edge between generations {ga} and {gb}", e.kind),
                );
            }
            if e.kind != EdgeKind::ParentChild {
                let ring = &t.generations[ga as usize];
                let n = ring.len() as u32;
                let (pa, pb) = (t.vertices[e.a as usize].position, t.vertices[e.b as usize].position);
                if (pa + 1) % n != pb {
                    self.flag(
                        "edge-kind",
                        vec![e.a, e.b],
                        vec![e.id],
                        "same-generation edge joins non-consecutive vertices".into(),
                    );
                }
            }
        }
    }

    fn parent_order(&mut self) {
        let t = self.t;
        for (g, ring) in t.generations.iter().enumerate().skip(1) {
            let prev = &t.generations[g - 1];
            let m = prev.len() as u32;
            let mut seq: Vec<u32> = Vec::new();
            for &v in ring {
                let parents = &t.vertices[v as usize].parents;
                if parents.len() == 2 {
                    let (l, r) = (
                        t.vertices[parents[0] as usize].position,
                        t.vertices[parents[1] as usize].position,
                    );
                    if (l + 1) % m != r {
                        self.flag(
                            "parent-order",
                            vec![v, parents[0], parents[1]],
                            vec![],
                            "the two parents are not consecutive left-to-right".into(),
                        );
                    }
                }
                seq.extend(parents.iter().map(|&w| t.vertices[w as usize].position));
            }
            let descents = (0..seq.len())
                .filter(|&i| seq[(i + 1) % seq.len()] < seq[i])
                .count();
            if descents > 1 {
                self.flag(
                    "parent-order",
                    ring.clone(),
                    vec![],
                    format!("parents of generation {g} are not in cyclic order"),
                );
            }
        }
    }

    fn faces(&mut self) -> usize {
        let t = self.t;
        let faces = trace_faces(t);
        let f = faces.len();
        let v = t.vertices.len() as i64;
        let e = t.edges.len() as i64;
        if v - e + f as i64 != 2 {
            self.flag(
                "euler",
                vec![],
                vec![],
                format!("V - E + F = {v} - {e} + {f} != 2"),
            );
        }
        if let Some(want) = t.expected_face_degree() {
            let outer = faces
                .iter()
                .enumerate()
                .max_by_key(|(i, face)| (face.len(), usize::MAX - i))
                .map(|(i, _)| i);
            for (i, face) in faces.iter().enumerate() {
                if Some(i) != outer && face.len() != want {
                    self.flag(
                        "face-degree",
                        face.clone(),
                        vec![],
                        format!("closed face of degree {}, expected {want}", face.len()),
                    );
                }
            }
        }
        f
    }

    fn lemmas(&mut self) {
        let t = self.t;
        if t.sibling_free || t.spec.q == 2 {
            return;
        }
        let q = t.spec.q;
        let Some(p) = t.spec.p.finite() else { return };
        let class: Vec<VertexClass> = (0..t.vertices.len() as VertexId).map(|v| class_of(t, v)).collect();
        let two = |v: VertexId| class[v as usize] == VertexClass::TwoParent;
        let plain_one = |v: VertexId| class[v as usize] == VertexClass::OneParent { has_cousin: false };

        let spacing = if p % 2 == 0 && p >= 4 && q >= 5 {
            Some(("lemma-2.1", q - 4))
        } else if p == 3 && q >= 7 {
            Some(("lemma-2.2", q - 6))
        } else {
            None
        };
        if let Some((rule, min_gap)) = spacing {
            for ring in t.generations.iter().skip(1) {
                let n = ring.len();
                let idx: Vec<usize> = (0..n).filter(|&i| two(ring[i])).collect();
                for (k, &i) in idx.iter().enumerate() {
                    let j = idx[(k + 1) % idx.len()];
                    let between = if j > i { j - i - 1 } else { n - i + j - 1 };
                    if (between as u32) < min_gap {
                        self.flag(
                            rule,
                            vec![ring[i], ring[j]],
                            vec![],
                            format!("only {between} one-parent vertices between two-parent vertices, need {min_gap}"),
                        );
                    }
                }
            }
            if rule == "lemma-2.1" {
                for rec in &t.vertices {
                    if two(rec.id) && !rec.parents.iter().any(|&w| !two(w)) {
                        self.flag(rule, vec![rec.id], vec![], "both parents are two-parent vertices".into());
                    }
                }
            }
            if p == 3 && q >= 8 {
                for rec in &t.vertices {
                    if rec.generation == 0 || two(rec.id) || rec.peers().count() < 2 {
                        continue;
                    }
                    if rec.peers().all(two) {
                        self.flag(
                            "lemma-2.2",
                            vec![rec.id],
                            vec![],
                            "one-parent vertex whose siblings are both two-parent".into(),
                        );
                    }
                }
            }
        }

        if p >= 5 && q >= 5 {
            for rec in &t.vertices {
                let v = rec.id;
                if rec.generation == 0 {
                    continue;
                }
                let cousins = t.rotation(v)
                    .iter()
                    .filter(|&&(_, e)| t.edges[e as usize].kind == EdgeKind::Cousin)
                    .count();
                if rec.parents.len() + cousins > 2 {
                    self.flag(
                        "lemma-2.3",
                        vec![v],
                        vec![],
                        format!("{} parents and {cousins} cousins", rec.parents.len()),
                    );
                }
                if rec.interior && rec.children.len() < 3 {
                    self.flag(
                        "lemma-2.3",
                        vec![v],
                        vec![],
                        format!("only {} children", rec.children.len()),
                    );
                }
                if rec.interior && rec.parents.len() == 1 {
                    let k = rec.children.iter().filter(|&&c| two(c)).count();
                    if k > 1 {
                        self.flag(
                            "lemma-2.4",
                            vec![v],
                            vec![],
                            format!("one-parent vertex with {k} two-parent children"),
                        );
                    }
                }
                if two(v) {
                    for &w in &rec.parents {
                        if !plain_one(w) {
                            self.flag(
                                "lemma-2.5",
                                vec![v, w],
                                vec![],
                                format!("parent {w} of a two-parent vertex is {:?}", class[w as usize]),
                            );
                        }
                    }
                }
            }
            for e in &t.edges {
                if e.kind != EdgeKind::Cousin {
                    continue;
                }
                let pa = t.vertices[e.a as usize].parents.first().copied();
                let pb = t.vertices[e.b as usize].parents.first().copied();
                let ok = pa.into_iter().chain(pb).any(plain_one);
                if !ok {
                    self.flag(
                        "lemma-2.6",
                        vec![e.a, e.b],
                        vec![e.id],
                        "neither cousin has a non-cousin one-parent parent".into(),
                    );
                }
            }
        }
    }
}

/// Faces of the embedding given by the rotation system, as vertex cycles.
pub fn trace_faces(t: &Tessellation) -> Vec<Vec<VertexId>> {
    // dart 2e goes a->b, dart 2e+1 goes b->a
    let m = t.edges.len();
    let mut seen = vec![false; 2 * m];
    let mut faces = Vec::new();
    let dart = |from: VertexId, e: EdgeId| -> usize {
        if t.edges[e as usize].a == from {
            2 * e as usize
        } else {
            2 * e as usize + 1
        }
    };
    for start in 0..2 * m {
        if seen[start] {
            continue;
        }
        let mut face = Vec::new();
        let mut d = start;
        while !seen[d] {
            seen[d] = true;
            let e = &t.edges[d / 2];
            let (u, v) = if d % 2 == 0 { (e.a, e.b) } else { (e.b, e.a) };
            face.push(u);
            let rot = t.rotation(v);
            let j = rot.iter().position(|&(w, f)| w == u && f == e.id).expect("dart in rotation");
            let (w, f) = rot[(j + 1) % rot.len()];
            let _ = w;
            d = dart(v, f);
        }
        faces.push(face);
    }
    if m == 0 {
        faces.push(vec![t.origin]);
    }
    faces
}

pub fn audit_tessellation(t: &Tessellation) -> AuditReport {
    let mut a = Audit {
        t,
        violations: Vec::new(),
    };
    a.bfs_generations();
    a.degrees();
    a.edge_kinds();
    a.parent_order();
    let face_count = a.faces();
    a.lemmas();
    let mut class_counts = BTreeMap::new();
    for v in 0..t.vertices.len() as VertexId {
        let key = match class_of(t, v) {
            VertexClass::Origin => "origin",
            VertexClass::OneParent { has_cousin: false } => "one-parent",
            VertexClass::OneParent { has_cousin: true } => "cousin",
            VertexClass::TwoParent => "two-parent",
        };
        *class_counts.entry(key.to_string()).or_insert(0) += 1;
    }
    if let Ok(strength) = assign_strength(t) {
        for s in strength {
            *class_counts.entry(format!("{s:?}").to_lowercase()).or_insert(0) += 1;
        }
    }
    AuditReport {
        pass: a.violations.is_empty(),
        violations: a.violations,
        generation_sizes: t.generations.iter().map(Vec::len).collect(),
        class_counts,
        face_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(p: FaceDegree, q: u32, g: u32) -> Vec<usize> {
        let t = build_tessellation(&TessellationSpec::new(p, q, g)).unwrap();
        t.generations.iter().map(Vec::len).collect()
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(sizes(FaceDegree::Infinite, 3, 3), vec![1, 3, 6, 12]);
    }

    #[test]
    fn euclidean_sizes() {
        assert_eq!(sizes(FaceDegree::Finite(4), 4, 3), vec![1, 4, 8, 12]);
        assert_eq!(sizes(FaceDegree::Finite(6), 3, 3), vec![1, 3, 6, 9]);
        assert_eq!(sizes(FaceDegree::Finite(3), 6, 3), vec![1, 6, 12, 18]);
    }

    #[test]
    fn square_five() {
        let t = build_tessellation(&TessellationSpec::new(FaceDegree::Finite(4), 5, 2)).unwrap();
        assert_eq!(t.generations.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 5, 15]);
        let two = t.generations[2]
            .iter()
            .filter(|&&v| class_of(&t, v) == VertexClass::TwoParent)
            .count();
        assert_eq!(two, 5);
    }

    #[test]
    fn face_degree_parsing() {
        assert_eq!("inf".parse::<FaceDegree>().unwrap(), FaceDegree::Infinite);
        assert_eq!("7".parse::<FaceDegree>().unwrap(), FaceDegree::Finite(7));
        assert!("x".parse::<FaceDegree>().is_err());
    }

    #[test]
    fn spherical_rejected() {
        let spec = TessellationSpec::new(FaceDegree::Finite(3), 4, 2);
        assert!(matches!(build_tessellation(&spec), Err(Error::SphericalUnsupported { .. })));
    }

    #[test]
    fn spherical_patch_closes() {
        let mut spec = TessellationSpec::new(FaceDegree::Finite(3), 5, 3);
        spec.spherical_patch = true;
        assert!(matches!(build_tessellation(&spec), Err(Error::SphericalClosure { .. })));
        spec.max_generation = 2;
        let t = build_tessellation(&spec).unwrap();
        assert_eq!(t.vertex_count(), 11);
        assert!(audit_tessellation(&t).pass);
    }

    #[test]
    fn cycles_and_paths() {
        for p in 3..9 {
            let t = build_tessellation(&TessellationSpec::new(FaceDegree::Finite(p), 2, 10)).unwrap();
            assert_eq!(t.vertex_count(), p as usize);
            assert!(t.vertices.iter().all(|v| v.interior));
            let r = audit_tessellation(&t);
            assert!(r.pass, "{p}: {:?}", r.violations);
        }
        let t = build_tessellation(&TessellationSpec::new(FaceDegree::Infinite, 2, 4)).unwrap();
        assert_eq!(t.vertex_count(), 9);
        assert!(audit_tessellation(&t).pass);
    }

    #[test]
    fn budget() {
        let spec = TessellationSpec::new(FaceDegree::Finite(4), 5, 6).with_budget(30);
        let t = build_tessellation(&spec).unwrap();
        assert_eq!(t.generations_built, 2);
        let spec = TessellationSpec::new(FaceDegree::Finite(4), 5, 6).with_budget(5);
        assert!(matches!(build_tessellation(&spec), Err(Error::BudgetExceeded { .. })));
    }
}

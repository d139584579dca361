//! Edge colorings ("addressing schemes") whose color counts along shortest
//! paths from the origin do not depend on the path.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tessellation::{
    build_tessellation, strip_sibling_edges, trace_faces, EdgeId, EdgeKind, FaceDegree, Tessellation,
    TessellationSpec, VertexId,
};

pub type Color = u32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressingScheme {
    pub colors: u32,
    /// Indexed by edge id of the tessellation the scheme was built for.
    pub edge_colors: Vec<Option<Color>>,
}

impl AddressingScheme {
    pub fn color(&self, e: EdgeId) -> Option<Color> {
        self.edge_colors.get(e as usize).copied().flatten()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Turn {
    Clockwise,
    Counterclockwise,
}

/// Propagate colors generation by generation. At each vertex the uncolored
/// edges receive successive colors (mod l) continuing from the colored ones,
/// turning in the direction given for that generation.
fn propagate(t: &Tessellation, l: u32, turn: impl Fn(u32) -> Turn) -> Vec<Option<Color>> {
    let mut colors: Vec<Option<Color>> = vec![None; t.edge_count()];
    let origin_rot = t.rotation(t.origin);
    let d = origin_rot.len();
    // origin: color 0 on the edge to position 0, then 1, 2, ... counterclockwise
    for (i, &(_, e)) in origin_rot.iter().enumerate() {
        colors[e as usize] = Some(((d - i) % d) as Color);
    }
    for ring in t.generations.iter().skip(1) {
        for &v in ring {
            let rot = t.rotation(v);
            let d = rot.len();
            if d == 0 || rot.iter().all(|&(_, e)| colors[e as usize].is_some()) {
                continue;
            }
            let step: isize = match turn(t.generation(v)) {
                Turn::Clockwise => 1,
                Turn::Counterclockwise => -1,
            };
            let at = |i: isize| rot[i.rem_euclid(d as isize) as usize].1 as usize;
            let anchor = (0..d as isize).find(|&i| colors[at(i)].is_some() && colors[at(i + step)].is_none());
            let Some(a) = anchor else { continue };
            let base = colors[at(a)].expect("anchor colored");
            let mut k = 1;
            while colors[at(a + step * k)].is_none() {
                colors[at(a + step * k)] = Some((base + k as u32) % l);
                k += 1;
            }
        }
    }
    colors
}

/// Tree coloring with q colors.
pub fn color_tree(t: &Tessellation) -> Result<AddressingScheme> {
    if !t.p().is_infinite() || t.q() < 3 {
        return Err(Error::WrongFamily(format!(
            "color_tree needs {{inf,q}} with q >= 3, got {{{},{}}}",
            t.p(),
            t.q()
        )));
    }
    let q = t.q();
    Ok(AddressingScheme {
        colors: q,
        edge_colors: propagate(t, q, |_| Turn::Clockwise),
    })
}

fn square_colors(t: &Tessellation, l: u32) -> Vec<Option<Color>> {
    propagate(t, l, |g| {
        if g % 2 == 1 {
            Turn::Clockwise
        } else {
            Turn::Counterclockwise
        }
    })
}

/// Coloring of {4,q}, q >= 5, alternating turn direction by generation parity.
pub fn color_square(t: &Tessellation) -> Result<AddressingScheme> {
    if t.p() != FaceDegree::Finite(4) || t.q() < 5 || t.sibling_free {
        return Err(Error::WrongFamily(format!(
            "color_square needs {{4,q}} with q >= 5, got {{{},{}}}",
            t.p(),
            t.q()
        )));
    }
    Ok(AddressingScheme {
        colors: t.q(),
        edge_colors: square_colors(t, t.q()),
    })
}

/// Doubled cyclic position of a spoke in every generation (index = generation).
/// An even value 2x marks the vertex at position x; an odd value 2x+1 marks a
/// face straddled between positions x and x+1.
pub fn spoke_cuts(t: &Tessellation, first: VertexId) -> Result<Vec<Option<u32>>> {
    let top = t.generations_built as usize;
    let mut cuts = vec![None; top + 1];
    let pos = |v: VertexId| t.vertices[v as usize].position;
    let gen = |v: VertexId| t.generation(v) as usize;
    let bad = |msg: &str| Error::WrongFamily(format!("spoke walk: {msg}"));
    if top == 0 {
        return Ok(cuts);
    }
    cuts[1] = Some(2 * pos(first));
    let (mut prev, mut cur) = (t.origin, first);
    loop {
        if !t.is_interior(cur) {
            break;
        }
        let g = gen(cur);
        let rot = t.rotation(cur);
        let d = rot.len();
        let j = rot.iter().position(|&(w, _)| w == prev).ok_or_else(|| bad("lost predecessor"))?;
        if d.is_multiple_of(2) {
            let next = rot[(j + d / 2) % d].0;
            if gen(next) != g + 1 {
                return Err(bad("straight continuation is not a child"));
            }
            cuts[g + 1] = Some(2 * pos(next));
            prev = cur;
            cur = next;
            continue;
        }
        let w1 = rot[(j + (d - 1) / 2) % d].0;
        let w2 = rot[(j + d.div_ceil(2)) % d].0;
        if gen(w1) != g + 1 || gen(w2) != g + 1 {
            return Err(bad("straddled face does not open outward"));
        }
        let n = t.generations[g + 1].len() as u32;
        let left = if (pos(w1) + 1) % n == pos(w2) { w1 } else { w2 };
        cuts[g + 1] = Some(2 * pos(left) + 1);
        if !t.is_interior(w1) || !t.is_interior(w2) {
            break;
        }
        let x = t
            .neighbors(w1)
            .find(|&y| y != cur && gen(y) == g + 2 && t.edge_between(y, w2).is_some())
            .ok_or_else(|| bad("straddled face has no far vertex"))?;
        cuts[g + 2] = Some(2 * pos(x));
        if !t.is_interior(x) {
            break;
        }
        let rx = t.rotation(x);
        let dx = rx.len();
        let i1 = rx.iter().position(|&(w, _)| w == w1).expect("face edge");
        let i2 = rx.iter().position(|&(w, _)| w == w2).expect("face edge");
        let lo = if (i1 + 1) % dx == i2 { i1 } else { i2 };
        let next = rx[(lo + dx.div_ceil(2)) % dx].0;
        if gen(next) != g + 3 {
            return Err(bad("exit from straddled face is not outward"));
        }
        cuts[g + 3] = Some(2 * pos(next));
        prev = x;
        cur = next;
    }
    Ok(cuts)
}

/// Spokes and sectors of a four-faced tessellation. Spoke s leaves the origin
/// along `starts[s]`; sector s lies counterclockwise of spoke s, up to spoke s+1.
struct Sectors {
    cuts: Vec<Vec<u32>>,
    ring_len: Vec<u32>,
}

impl Sectors {
    fn new(t: &Tessellation, starts: &[VertexId]) -> Result<Sectors> {
        let top = t.generations_built as usize;
        let mut cuts = Vec::with_capacity(starts.len());
        for &s in starts {
            let c = spoke_cuts(t, s)?;
            let filled: Option<Vec<u32>> = c.into_iter().skip(1).collect();
            let filled = filled.ok_or_else(|| Error::WrongFamily("spoke does not reach the last generation".into()))?;
            let mut row = vec![0];
            row.extend(filled);
            debug_assert_eq!(row.len(), top + 1);
            cuts.push(row);
        }
        let ring_len = t.generations.iter().map(|r| 2 * r.len() as u32).collect();
        Ok(Sectors { cuts, ring_len })
    }

    fn count(&self) -> usize {
        self.cuts.len()
    }

    fn width(&self, s: usize, g: usize) -> u32 {
        let m = self.ring_len[g];
        let next = (s + 1) % self.count();
        (self.cuts[s][g] + m - self.cuts[next][g]) % m
    }

    /// Doubled distance clockwise-to-counterclockwise from spoke s.
    fn offset(&self, s: usize, g: usize, doubled: u32) -> u32 {
        let m = self.ring_len[g];
        (self.cuts[s][g] + m - doubled) % m
    }

    /// Closed sectors containing a vertex (one, or two for spoke vertices).
    fn closed(&self, t: &Tessellation, v: VertexId) -> Vec<usize> {
        let g = t.generation(v) as usize;
        let x = 2 * t.vertices[v as usize].position;
        let k = self.count();
        (0..k)
            .filter(|&s| {
                let w = self.width(s, g);
                let o = self.offset(s, g, x);
                o <= w && (w > 0 || o == 0)
            })
            .collect()
    }

    fn edge_sector(&self, t: &Tessellation, u: VertexId, v: VertexId) -> Option<usize> {
        let k = self.count();
        if u == t.origin || v == t.origin {
            let w = if u == t.origin { v } else { u };
            let x = 2 * t.vertices[w as usize].position;
            return (0..k).find(|&s| self.cuts[s][1] == x);
        }
        let a = self.closed(t, u);
        let b = self.closed(t, v);
        let both: Vec<usize> = a.iter().copied().filter(|s| b.contains(s)).collect();
        match both.len() {
            1 => Some(both[0]),
            2 => {
                // both endpoints on spoke s: closed sectors {s, s-1}
                let (x, y) = (both[0], both[1]);
                if (y + 1) % k == x {
                    Some(x)
                } else {
                    Some(y)
                }
            }
            _ => None,
        }
    }
}

/// Partial coloring of {3,q}, q >= 7, on parent-child edges, assembled from q
/// color-shifted copies of one sector of a colored {4,q-2}.
pub fn color_triangle(t: &Tessellation) -> Result<AddressingScheme> {
    if t.p() != FaceDegree::Finite(3) || t.q() < 7 || t.sibling_free {
        return Err(Error::WrongFamily(format!(
            "color_triangle needs {{3,q}} with q >= 7, got {{{},{}}}",
            t.p(),
            t.q()
        )));
    }
    let q = t.q();
    let top = t.generations_built;
    let stripped = strip_sibling_edges(t)?;
    let square = build_tessellation(&TessellationSpec::new(FaceDegree::Finite(4), q - 2, top))?;
    let square_scheme = AddressingScheme {
        colors: q - 2,
        edge_colors: square_colors(&square, q - 2),
    };
    if top == 0 {
        return Ok(AddressingScheme {
            colors: q,
            edge_colors: vec![None; t.edge_count()],
        });
    }

    let origin_edges = square.rotation(square.origin);
    let square_starts: Vec<VertexId> = (0..q - 2)
        .map(|s| {
            origin_edges
                .iter()
                .find(|&&(_, e)| square_scheme.color(e) == Some(s))
                .map(|&(w, _)| w)
                .expect("every origin color used")
        })
        .collect();
    let tri_ring = &stripped.generations[1];
    let tri_starts: Vec<VertexId> = (0..q).map(|s| tri_ring[((q - s) % q) as usize]).collect();
    let sq = Sectors::new(&square, &square_starts)?;
    let tri = Sectors::new(&stripped, &tri_starts)?;

    for g in 1..=top as usize {
        for s in 0..q as usize {
            if tri.width(s, g) != sq.width(0, g) {
                return Err(Error::WrongFamily(format!(
                    "sector {s} of {{3,{q}}}' has width {} in generation {g}, {{4,{}}} sector 0 has {}",
                    tri.width(s, g),
                    q - 2,
                    sq.width(0, g)
                )));
            }
        }
    }

    let image = |s: usize, v: VertexId| -> VertexId {
        if v == stripped.origin {
            return square.origin;
        }
        let g = stripped.generation(v) as usize;
        let o = tri.offset(s, g, 2 * stripped.vertices[v as usize].position);
        let m = sq.ring_len[g];
        let x = (sq.cuts[0][g] + m - o) % m;
        square.generations[g][(x / 2) as usize]
    };

    let mut colors = vec![None; t.edge_count()];
    for e in &stripped.edges {
        let s = tri
            .edge_sector(&stripped, e.a, e.b)
            .ok_or_else(|| Error::WrongFamily(format!("edge {}-{} straddles two sectors", e.a, e.b)))?;
        let (a, b) = (image(s, e.a), image(s, e.b));
        let f = square.edge_between(a, b).ok_or_else(|| {
            Error::WrongFamily(format!("sector image of edge {}-{} is not an edge", e.a, e.b))
        })?;
        let k = square_scheme.color(f).expect("square fully colored");
        let original = t.edge_between(e.a, e.b).expect("stripped edge exists in original");
        colors[original as usize] = Some((k + s as u32) % q);
    }
    Ok(AddressingScheme {
        colors: q,
        edge_colors: colors,
    })
}

/// Any of the three constructions, chosen by the tessellation family.
pub fn color_for(t: &Tessellation) -> Result<AddressingScheme> {
    match t.p() {
        FaceDegree::Infinite => color_tree(t),
        FaceDegree::Finite(4) => color_square(t),
        FaceDegree::Finite(3) => color_triangle(t),
        p => Err(Error::WrongFamily(format!("no addressing scheme for p = {p}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LocalViolation {
    RepeatedColor { vertex: VertexId, color: Color, edges: Vec<EdgeId> },
    OppositeEdges { face: Vec<VertexId>, edges: [EdgeId; 2] },
    Uncolored { edge: EdgeId },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalReport {
    pub pass: bool,
    pub violations: Vec<LocalViolation>,
}

/// Distinct colors around every vertex and equal colors on opposite edges of
/// every closed four-face (faces of {3,q}' for p = 3).
pub fn verify_local(t: &Tessellation, scheme: &AddressingScheme) -> LocalReport {
    let mut violations = Vec::new();
    for v in 0..t.vertex_count() as VertexId {
        let mut seen: HashMap<Color, EdgeId> = HashMap::new();
        for &(_, e) in t.rotation(v) {
            if let Some(c) = scheme.color(e) {
                if let Some(&f) = seen.get(&c) {
                    violations.push(LocalViolation::RepeatedColor {
                        vertex: v,
                        color: c,
                        edges: vec![f, e],
                    });
                } else {
                    seen.insert(c, e);
                }
            }
        }
    }
    let four = match t.p() {
        FaceDegree::Finite(3) if !t.sibling_free => strip_sibling_edges(t).ok(),
        FaceDegree::Finite(3) | FaceDegree::Finite(4) => Some(t.clone()),
        _ => None,
    };
    if let Some(f4) = four {
        let faces = trace_faces(&f4);
        let outer = faces
            .iter()
            .enumerate()
            .max_by_key(|(i, f)| (f.len(), usize::MAX - i))
            .map(|(i, _)| i);
        for (i, face) in faces.iter().enumerate() {
            if Some(i) == outer || face.len() != 4 {
                continue;
            }
            let edge = |k: usize| t.edge_between(face[k], face[(k + 1) % 4]).expect("face edge");
            let es = [edge(0), edge(1), edge(2), edge(3)];
            for k in 0..2 {
                let (a, b) = (es[k], es[k + 2]);
                match (scheme.color(a), scheme.color(b)) {
                    (Some(x), Some(y)) if x == y => {}
                    (Some(_), Some(_)) => violations.push(LocalViolation::OppositeEdges {
                        face: face.clone(),
                        edges: [a, b],
                    }),
                    (None, _) => violations.push(LocalViolation::Uncolored { edge: a }),
                    (_, None) => violations.push(LocalViolation::Uncolored { edge: b }),
                }
            }
        }
    }
    violations.dedup();
    LocalReport {
        pass: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpiViolation {
    pub vertex: VertexId,
    pub path_a: Vec<EdgeId>,
    pub path_b: Vec<EdgeId>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpiReport {
    pub pass: bool,
    pub violations: Vec<SpiViolation>,
    pub vertices_checked: usize,
}

const MAX_REPORTED: usize = 16;

type Entry = (Vec<u32>, Option<(VertexId, usize, EdgeId)>);

struct Distributions {
    /// Per vertex: (distribution, predecessor (vertex, index, edge)).
    sets: Vec<Vec<Entry>>,
}

/// Dynamic program over generations collecting the color distributions of
/// shortest paths (parent-child edges only). Uncolored edges count under an
/// extra bucket l.
fn distributions(t: &Tessellation, scheme: &AddressingScheme, cap: usize) -> Distributions {
    let l = scheme.colors as usize;
    let mut sets: Vec<Vec<Entry>> = vec![Vec::new(); t.vertex_count()];
    sets[t.origin as usize].push((vec![0; l + 1], None));
    for ring in t.generations.iter().skip(1) {
        for &v in ring {
            let mut here: Vec<Entry> = Vec::new();
            for &u in &t.vertices[v as usize].parents {
                let Some(e) = t.edge_between(u, v) else { continue };
                let c = scheme.color(e).map(|c| c as usize).unwrap_or(l).min(l);
                for (i, (d, _)) in sets[u as usize].iter().enumerate() {
                    let mut nd = d.clone();
                    nd[c] += 1;
                    if here.len() < cap && !here.iter().any(|(x, _)| *x == nd) {
                        here.push((nd, Some((u, i, e))));
                    }
                }
            }
            sets[v as usize] = here;
        }
    }
    Distributions { sets }
}

impl Distributions {
    fn path(&self, v: VertexId, idx: usize) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let (mut v, mut i) = (v, idx);
        while let Some((u, j, e)) = self.sets[v as usize][i].1 {
            out.push(e);
            v = u;
            i = j;
        }
        out.reverse();
        out
    }
}

/// Brute-force shortest-path invariance oracle.
pub fn verify_spi(t: &Tessellation, scheme: &AddressingScheme) -> SpiReport {
    let dist = distributions(t, scheme, 64);
    let mut violations = Vec::new();
    for v in 0..t.vertex_count() as VertexId {
        if dist.sets[v as usize].len() > 1 && violations.len() < MAX_REPORTED {
            violations.push(SpiViolation {
                vertex: v,
                path_a: dist.path(v, 0),
                path_b: dist.path(v, 1),
            });
        }
    }
    SpiReport {
        pass: violations.is_empty(),
        violations,
        vertices_checked: t.vertex_count(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Norms {
    pub colors: u32,
    /// ‖a‖ (the generation).
    pub total: Vec<u32>,
    /// ‖a‖ₖ, row-major by vertex.
    pub by_color: Vec<u32>,
}

impl Norms {
    pub fn norm(&self, v: VertexId) -> u32 {
        self.total[v as usize]
    }

    pub fn norm_k(&self, v: VertexId, k: u32) -> u32 {
        self.by_color[v as usize * self.colors as usize + k as usize]
    }

    pub fn row(&self, v: VertexId) -> &[u32] {
        let l = self.colors as usize;
        &self.by_color[v as usize * l..(v as usize + 1) * l]
    }

    /// ‖a‖ = Σₖ ‖a‖ₖ for every vertex.
    pub fn identity_holds(&self) -> bool {
        (0..self.total.len()).all(|v| self.row(v as VertexId).iter().sum::<u32>() == self.total[v])
    }
}

pub fn compute_norms(t: &Tessellation, scheme: &AddressingScheme) -> Result<Norms> {
    let dist = distributions(t, scheme, 2);
    let l = scheme.colors as usize;
    let mut by_color = Vec::with_capacity(t.vertex_count() * l);
    let mut total = Vec::with_capacity(t.vertex_count());
    for v in 0..t.vertex_count() {
        let set = &dist.sets[v];
        if set.len() != 1 {
            return Err(Error::NotInvariant { vertex: v as VertexId });
        }
        if set[0].0[l] != 0 {
            return Err(Error::WrongFamily(format!("shortest path to vertex {v} uses an uncolored edge")));
        }
        by_color.extend_from_slice(&set[0].0[..l]);
        total.push(t.generation(v as VertexId));
    }
    Ok(Norms {
        colors: scheme.colors,
        total,
        by_color,
    })
}

/// Edges a recoloring test may touch: both endpoints strictly inside the truncation.
pub fn mutable_edges(t: &Tessellation, scheme: &AddressingScheme) -> Vec<EdgeId> {
    t.edges
        .iter()
        .filter(|e| {
            e.kind == EdgeKind::ParentChild
                && scheme.color(e.id).is_some()
                && t.generation(e.b) < t.generations_built
        })
        .map(|e| e.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(p: FaceDegree, q: u32, g: u32) -> Tessellation {
        build_tessellation(&TessellationSpec::new(p, q, g)).unwrap()
    }

    #[test]
    fn origin_colors_counterclockwise() {
        let t = build(FaceDegree::Finite(4), 5, 3);
        let s = color_square(&t).unwrap();
        let got: Vec<Color> = t.rotation(t.origin).iter().map(|&(_, e)| s.color(e).unwrap()).collect();
        // clockwise listing of a counterclockwise 0..q-1 labeling
        assert_eq!(got, vec![0, 4, 3, 2, 1]);
    }

    #[test]
    fn square_scheme_is_local_and_invariant() {
        for q in 5..=7 {
            let t = build(FaceDegree::Finite(4), q, 5);
            let s = color_square(&t).unwrap();
            let r = verify_local(&t, &s);
            assert!(r.pass, "q={q}: {:?}", &r.violations[..r.violations.len().min(4)]);
            assert!(verify_spi(&t, &s).pass);
        }
    }

    #[test]
    fn triangle_scheme_is_local_and_invariant() {
        for q in 7..=9 {
            let t = build(FaceDegree::Finite(3), q, 5);
            let s = color_triangle(&t).unwrap();
            let r = verify_local(&t, &s);
            assert!(r.pass, "q={q}: {:?}", &r.violations[..r.violations.len().min(4)]);
            assert!(verify_spi(&t, &s).pass);
        }
    }

    #[test]
    fn wrong_family() {
        let t = build(FaceDegree::Finite(4), 5, 2);
        assert!(matches!(color_tree(&t), Err(Error::WrongFamily(_))));
        assert!(matches!(color_triangle(&t), Err(Error::WrongFamily(_))));
    }

    #[test]
    fn swapped_colors_detected() {
        let t = build(FaceDegree::Finite(4), 6, 3);
        let mut s = color_square(&t).unwrap();
        let rot = t.rotation(t.origin);
        let (a, b) = (rot[0].1 as usize, rot[1].1 as usize);
        s.edge_colors[a] = s.edge_colors[b];
        let r = verify_local(&t, &s);
        assert!(r.violations.iter().any(|v| matches!(v, LocalViolation::RepeatedColor { .. })));
    }
}

use std::collections::BTreeSet;

use tessvote::addressing::*;
use tessvote::tessellation::*;
use FaceDegree::{Finite, Infinite};

fn build(p: FaceDegree, q: u32, g: u32) -> Tessellation {
    build_tessellation(&TessellationSpec::new(p, q, g).with_budget(200_000)).unwrap()
}

/// Color histograms of every shortest path from the origin to v, by explicit enumeration.
fn path_histograms(t: &Tessellation, s: &AddressingScheme, v: VertexId) -> BTreeSet<Vec<u32>> {
    let l = s.colors as usize;
    let mut out = BTreeSet::new();
    let mut stack = vec![(v, vec![0u32; l + 1])];
    while let Some((u, h)) = stack.pop() {
        if u == t.origin {
            out.insert(h);
            continue;
        }
        let g = t.generation(u);
        for (w, e) in t.rotation(u).iter().copied() {
            if t.generation(w) + 1 == g {
                let mut h2 = h.clone();
                h2[s.color(e).map_or(l, |c| c as usize)] += 1;
                stack.push((w, h2));
            }
        }
    }
    out
}

fn check_against_enumeration(t: &Tessellation, s: &AddressingScheme) {
    let norms = compute_norms(t, s).unwrap();
    let l = s.colors as usize;
    for v in 0..t.vertex_count() as VertexId {
        let hs = path_histograms(t, s, v);
        assert_eq!(hs.len(), 1, "vertex {v} has {} distinct histograms", hs.len());
        let h = hs.into_iter().next().unwrap();
        assert_eq!(h[l], 0, "vertex {v} reached through an uncolored edge");
        assert_eq!(&h[..l], norms.row(v), "vertex {v}");
        assert_eq!(norms.norm(v), t.generation(v));
    }
    assert!(norms.identity_holds());
}

#[test]
fn schemes_agree_with_path_enumeration() {
    for q in 3..=5 {
        let t = build(Infinite, q, 4);
        check_against_enumeration(&t, &color_tree(&t).unwrap());
    }
    for q in 5..=7 {
        let t = build(Finite(4), q, 4);
        check_against_enumeration(&t, &color_square(&t).unwrap());
    }
    for q in 7..=9 {
        let t = build(Finite(3), q, 4);
        check_against_enumeration(&t, &color_triangle(&t).unwrap());
    }
}

#[test]
fn tree_origin_edges_use_every_color() {
    let t = build(Infinite, 3, 2);
    let s = color_tree(&t).unwrap();
    let colors: BTreeSet<u32> = t.rotation(t.origin).iter().map(|&(_, e)| s.color(e).unwrap()).collect();
    assert_eq!(colors, (0..3).collect());
    assert_eq!(s.colors, 3);
}

#[test]
fn square_faces_have_monochromatic_opposite_edges() {
    let t = build(Finite(4), 6, 4);
    let s = color_square(&t).unwrap();
    let mut closed = 0;
    for f in trace_faces(&t) {
        if f.len() != 4 || !f.iter().all(|&v| t.is_interior(v)) {
            continue;
        }
        closed += 1;
        let e = |i: usize| t.edge_between(f[i], f[(i + 1) % 4]).unwrap();
        assert_eq!(s.color(e(0)), s.color(e(2)));
        assert_eq!(s.color(e(1)), s.color(e(3)));
    }
    assert!(closed > 10);
}

#[test]
fn a_non_invariant_coloring_is_rejected() {
    let t = build(Finite(4), 5, 4);
    let mut s = color_square(&t).unwrap();
    let e = mutable_edges(&t, &s)[3];
    let old = s.color(e).unwrap();
    s.edge_colors[e as usize] = Some((old + 1) % s.colors);
    let spi = verify_spi(&t, &s);
    assert!(!spi.pass);
    let w = &spi.violations[0];
    assert_ne!(w.path_a, w.path_b);
    assert!(matches!(compute_norms(&t, &s), Err(tessvote::Error::NotInvariant { .. })));
    assert!(!verify_local(&t, &s).pass);
}

#[test]
fn scheme_json_round_trip() {
    let t = build(Finite(3), 7, 3);
    let s = color_for(&t).unwrap();
    let back: AddressingScheme = serde_json::from_str(&s.to_json().unwrap()).unwrap();
    assert_eq!(back, s);
    assert!(matches!(color_for(&build(Finite(5), 5, 2)), Err(tessvote::Error::WrongFamily(_))));
}

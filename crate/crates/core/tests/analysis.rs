use std::collections::BTreeSet;
use std::sync::Arc;

use tessvote::addressing::color_for;
use tessvote::analysis::*;
use tessvote::automaton::*;
use tessvote::faults::{FaultConfig, FaultTrace};
use tessvote::simulate::run_trajectory;
use tessvote::tessellation::*;
use FaceDegree::{Finite, Infinite};

fn tess(p: FaceDegree, q: u32, g: u32) -> Arc<Tessellation> {
    Arc::new(build_tessellation(&TessellationSpec::new(p, q, g).with_budget(200_000)).unwrap())
}

/// Guardians of v inside `set`, counted straight from the neighbor list.
fn support(t: &Tessellation, v: VertexId, set: &BTreeSet<VertexId>) -> usize {
    let own = usize::from(t.q().is_multiple_of(2) && set.contains(&v));
    own + t.neighbors(v).filter(|u| set.contains(u)).count()
}

fn majority(t: &Tessellation) -> usize {
    let n = t.q() as usize + usize::from(t.q().is_multiple_of(2));
    n.div_ceil(2)
}

#[test]
fn islands_have_majority_support() {
    for (p, q, g) in [(Finite(4), 4, 4), (Finite(6), 3, 4), (Finite(3), 6, 3), (Finite(7), 2, 2), (Infinite, 2, 3)] {
        let t = tess(p, q, g);
        let cert = make_island(&t, island_kind_for(p, q).unwrap()).unwrap();
        let set: BTreeSet<VertexId> = cert.vertices.iter().copied().collect();
        for &v in &cert.vertices {
            assert!(support(&t, v, &set) >= majority(&t), "{{{p},{q}}} vertex {v}");
        }
        let spec = build_automaton(t.clone(), None, 1).unwrap();
        assert!(verify_island(&spec, &cert.vertices).valid);
        // dropping a vertex breaks the island
        let smaller = &cert.vertices[1..];
        assert!(!verify_island(&spec, smaller).valid);
        assert!(!island_persists(&spec, smaller, 10).unwrap());
    }
    assert!(island_kind_for(Finite(4), 5).is_err());
}

#[test]
fn bridges_are_supported_by_their_piers() {
    for (p, q, g) in [(Infinite, 3, 6), (Finite(4), 5, 6), (Finite(4), 6, 6)] {
        let t = tess(p, q, g);
        let cert = make_bridge(&t, 3, 3).unwrap();
        let all: BTreeSet<VertexId> = cert.bridge.iter().chain(&cert.piers).copied().collect();
        assert_eq!(all.len(), cert.bridge.len() + cert.piers.len());
        for &v in &cert.bridge {
            assert!(support(&t, v, &all) >= majority(&t), "{{{p},{q}}} vertex {v}");
        }
        let spec = build_automaton(t.clone(), None, 1).unwrap();
        assert!(verify_bridge(&spec, &cert.bridge, &cert.piers).valid);
        assert!(bridge_persists(&spec, &cert.bridge, &cert.piers, 200).unwrap());
        // without piers the bridge dissolves
        assert!(!bridge_persists(&spec, &cert.bridge, &[], 200).unwrap());
    }
}

#[test]
fn opposite_edge_sets_are_closed() {
    let t = tess(Finite(4), 5, 5);
    let e = t.rotation(t.origin)[0].1;
    let set = opposite_edge_set(&t, e).unwrap();
    assert!(set.edges.contains(&e));
    let edges: BTreeSet<EdgeId> = set.edges.iter().copied().collect();
    // every closed 4-face touching the set contains exactly zero or two of its edges
    for f in trace_faces(&t) {
        if f.len() != 4 || !f.iter().all(|&v| t.is_interior(v)) {
            continue;
        }
        let k = (0..4).filter(|&i| edges.contains(&t.edge_between(f[i], f[(i + 1) % 4]).unwrap())).count();
        assert!(k == 0 || k == 2, "face {f:?} holds {k} edges of the set");
    }
    assert!(!set.boundary_edges.is_empty());
    assert!(opposite_edge_set(&tess(Finite(5), 5, 3), 0).is_err());
}

#[test]
fn flow_caps_reproduce_the_arithmetic() {
    let f = make_flow(Finite(4), 7).unwrap();
    let one = f.caps.iter().find(|c| c.class == "one-parent").unwrap();
    assert_eq!(one.min_out(3), Some(1 + 1 + 3));
    assert_eq!(one.max_in(), 3);
    let f = make_flow(Finite(3), 9).unwrap();
    let one = f.caps.iter().find(|c| c.class == "one-parent").unwrap();
    assert_eq!((one.min_out(2), one.max_in()), (Some(6), 5));
    let two = f.caps.iter().find(|c| c.class == "two-parent").unwrap();
    assert_eq!((two.min_out(3), two.max_in()), (Some(7), 6));
    assert_eq!(f.m(), 7.0);
    for (p, q) in [(Infinite, 5), (Finite(4), 8), (Finite(6), 5), (Finite(5), 5)] {
        let f = make_flow(p, q).unwrap();
        for c in &f.claims {
            assert_eq!(c.net, c.out_flow as i64 - c.in_flow as i64);
            assert!(c.net >= f.r as i64);
            assert!(c.in_flow <= f.s);
        }
    }
    assert!(make_flow(Finite(4), 5).is_err());
}

#[test]
fn flows_verify_on_weakened_automata() {
    for (p, q) in [(Infinite, 5), (Finite(4), 7), (Finite(6), 5), (Finite(5), 5)] {
        let t = tess(p, q, 4);
        let spec = build_automaton(t, Some(weakening_rule(p, q).unwrap()), 1).unwrap();
        let r = verify_flows(&spec, &make_flow(p, q).unwrap()).unwrap();
        assert!(r.pass, "{{{p},{q}}}: {:?}", r.classes);
        assert!(r.violations.is_empty());
        assert!(r.max_in_flow <= r.s);
    }
    let t = tess(Finite(4), 7, 3);
    let plain = build_automaton(t, None, 1).unwrap();
    assert!(verify_flows(&plain, &make_flow(Finite(4), 7).unwrap()).is_err());
}

#[test]
fn toom_witness_is_a_real_violation() {
    let t = tess(Finite(3), 7, 4);
    let spec = build_automaton(t.clone(), None, 1).unwrap();
    let pot = build_potential(&t, &color_for(&t).unwrap()).unwrap();
    let r = verify_toom(&spec, &pot, 1, 5, 1).unwrap();
    assert!(!r.condition3);
    let w = r.condition3_witnesses.iter().find(|w| w.class == VertexClass::TwoParent).unwrap();
    let sets: Vec<Vec<VertexId>> = minimal_error_sets(&spec, w.vertex).unwrap().collect();
    let mut ws = w.error_set.clone();
    ws.sort_unstable();
    assert!(sets.iter().any(|s| {
        let mut s = s.clone();
        s.sort_unstable();
        s == ws
    }));
    let j = w.component - 1;
    let la = pot.eval(w.vertex, 1)[j];
    for &b in &w.error_set {
        assert!(pot.eval(b, 0)[j] - la < 1, "cell {b} is not bad for component {}", w.component);
    }
    assert!(r.crosscheck.unwrap().agree);
}

#[test]
fn potential_components_sum_to_zero() {
    let t = tess(Finite(4), 5, 4);
    let pot = build_potential(&t, &color_for(&t).unwrap()).unwrap();
    assert_eq!(pot.components(), 6);
    for v in 0..t.vertex_count() as VertexId {
        for time in [0, 1, 7] {
            assert_eq!(pot.eval(v, time).iter().sum::<i64>(), 0);
        }
    }
    assert_eq!(pot.stated_bound(2), 14);
}

#[test]
fn explanation_graph_of_a_planted_error() {
    let t = tess(Finite(4), 7, 4);
    let spec = build_automaton(t.clone(), Some(WeakeningRule::Square), 1).unwrap();
    let a = 1.0 - 0.95f64.sqrt();
    let mut checked = 0;
    for seed in 0..40 {
        let trace = FaultTrace::new(&FaultConfig::new(a, a, seed).unwrap(), t.vertex_count());
        let traj = run_trajectory(&spec, &trace, 12, BoundaryPolicy::FrozenZero).unwrap();
        for time in 1..=12u32 {
            for cell in 0..t.vertex_count() as VertexId {
                if traj[time as usize][cell as usize] == 0 || !spec.is_complete(cell) || trace.is_faulty(cell, time - 1) {
                    continue;
                }
                let g = extract_explanation_graph(&spec, &trace, &traj, cell, time).unwrap();
                assert!(check_explanation_graph(&spec, &trace, &g).is_empty());
                assert!(g.n() > 1 && g.n() <= 4 * g.m());
                for term in &g.terminals {
                    assert!(trace.is_faulty(term.cell, term.time - 1));
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
    let trace = FaultTrace::new(&FaultConfig::new(0.0, 0.0, 0).unwrap(), t.vertex_count());
    let quiet = run_trajectory(&spec, &trace, 3, BoundaryPolicy::FrozenZero).unwrap();
    assert!(matches!(
        extract_explanation_graph(&spec, &trace, &quiet, t.origin, 2),
        Err(tessvote::Error::RootNotInError { .. })
    ));
}

#[test]
fn tampered_graphs_are_rejected() {
    let t = tess(Finite(4), 7, 4);
    let spec = build_automaton(t.clone(), Some(WeakeningRule::Square), 1).unwrap();
    let a = 1.0 - 0.9f64.sqrt();
    for seed in 0..50 {
        let trace = FaultTrace::new(&FaultConfig::new(a, a, seed).unwrap(), t.vertex_count());
        let traj = run_trajectory(&spec, &trace, 8, BoundaryPolicy::FrozenZero).unwrap();
        let Some(cell) = (0..t.vertex_count() as VertexId)
            .find(|&c| traj[8][c as usize] == 1 && spec.is_complete(c) && !trace.is_faulty(c, 7))
        else {
            continue;
        };
        let g = extract_explanation_graph(&spec, &trace, &traj, cell, 8).unwrap();
        let mut bad = g.clone();
        bad.arcs.pop();
        assert!(!check_explanation_graph(&spec, &trace, &bad).is_empty());
        let mut bad = g.clone();
        let moved = bad.terminals[0];
        bad.terminals[0].time = moved.time + 5;
        assert!(!check_explanation_graph(&spec, &trace, &bad).is_empty());
        return;
    }
    panic!("no non-trivial error event found");
}

#[test]
fn graph_count_bound() {
    assert!((log_graph_count_bound(7, 3) - 43.0 * 7f64.ln()).abs() < 1e-12);
}

#[test]
fn classification_and_bound() {
    assert_eq!(classify(Finite(4), 7).unwrap(), Classification::Combined);
    assert_eq!(classify(Finite(9999), 2).unwrap(), Classification::None);
    assert_eq!(classify(Finite(3), 8).unwrap(), Classification::TransientOnly);
    assert_eq!(classify(Infinite, 4).unwrap(), Classification::TransientOnly);
    assert!(classify(Finite(4), 1).is_err());
    let table = classify_table(6, 9).unwrap();
    assert_eq!(table.len(), 5);
    assert_eq!(table[4].0, Infinite);
    let row: String = table[1].1.iter().map(|c| c.symbol()).collect();
    assert_eq!(row, "...xx@@@");
    let b = error_bound(5, 2.0, 1e-20).unwrap();
    let direct = 5f64.powi(21) * 1e-20 / (1.0 - 5f64.powi(20) * 1e-20);
    assert!((b / direct - 1.0).abs() < 1e-12);
    assert!(error_bound(5, 2.0, 1.0).is_err());
}

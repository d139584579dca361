use std::sync::Arc;

use tessvote::automaton::*;
use tessvote::faults::{FaultConfig, FaultTrace};
use tessvote::simulate::*;
use tessvote::tessellation::*;
use FaceDegree::Finite;

fn auto(p: FaceDegree, q: u32, g: u32, rule: Option<WeakeningRule>) -> AutomatonSpec {
    let t = Arc::new(build_tessellation(&TessellationSpec::new(p, q, g)).unwrap());
    build_automaton(t, rule, 1).unwrap()
}

#[test]
fn trials_are_reproducible() {
    let spec = auto(Finite(4), 5, 5, None);
    let cfg = FaultConfig::new(0.03, 0.01, 77).unwrap();
    let a = run_trial(&spec, &cfg, 30, BoundaryPolicy::FrozenZero).unwrap();
    let b = run_trial(&spec, &cfg, 30, BoundaryPolicy::FrozenZero).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.origin_error.len(), 31);
    assert!(!a.origin_error[0]);
}

#[test]
fn trial_agrees_with_dense_trajectory() {
    let spec = auto(Finite(5), 5, 5, Some(WeakeningRule::OddFace));
    for seed in 0..5 {
        let cfg = FaultConfig::new(0.05, 0.02, seed).unwrap();
        let trace = FaultTrace::new(&cfg, spec.cell_count());
        for b in [BoundaryPolicy::FrozenZero, BoundaryPolicy::AdversarialBoundary] {
            let traj = run_trajectory(&spec, &trace, 25, b).unwrap();
            let r = run_trial(&spec, &cfg, 25, b).unwrap();
            let dense: Vec<bool> = traj.iter().map(|s| s[spec.tessellation().origin as usize] == 1).collect();
            assert_eq!(r.origin_error, dense, "seed {seed} {b:?}");
        }
    }
}

#[test]
fn frozen_zero_is_dominated_by_adversarial_boundary() {
    let spec = auto(Finite(4), 5, 5, None);
    for seed in 0..5 {
        let trace = FaultTrace::new(&FaultConfig::new(0.04, 0.01, seed).unwrap(), spec.cell_count());
        let lo = run_trajectory(&spec, &trace, 20, BoundaryPolicy::FrozenZero).unwrap();
        let hi = run_trajectory(&spec, &trace, 20, BoundaryPolicy::AdversarialBoundary).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            assert!(a.iter().zip(b).all(|(x, y)| x <= y));
        }
    }
}

#[test]
fn more_transient_faults_never_help() {
    let spec = auto(Finite(4), 6, 5, None);
    for seed in 0..5 {
        let low = run_trial(&spec, &FaultConfig::new(0.02, 0.0, seed).unwrap(), 30, BoundaryPolicy::FrozenZero).unwrap();
        let high = run_trial(&spec, &FaultConfig::new(0.08, 0.0, seed).unwrap(), 30, BoundaryPolicy::FrozenZero).unwrap();
        assert!(low.origin_error.iter().zip(&high.origin_error).all(|(a, b)| a <= b));
    }
}

#[test]
fn fault_free_curve_is_flat_zero() {
    let spec = auto(Finite(4), 5, 4, None);
    let curve = monte_carlo(&spec, &FaultConfig::new(0.0, 0.0, 1).unwrap(), 10, 8, BoundaryPolicy::FrozenZero, Some(1)).unwrap();
    assert!(curve.points.iter().all(|p| p.error_rate == 0.0 && p.ci_low == 0.0));
    let csv = curve.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,error_rate,ci_low,ci_high"));
    // upper Wilson bound at 0 of n successes is z^2 / (n + z^2)
    let z2 = 1.959_963_984_540_054f64.powi(2);
    assert_eq!(lines.next(), Some(format!("0,0.000000,0.000000,{:.6}", z2 / (8.0 + z2)).as_str()));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn curves_do_not_depend_on_worker_count() {
    let spec = auto(Finite(5), 5, 5, Some(WeakeningRule::OddFace));
    let cfg = FaultConfig::new(0.02, 0.02, 5).unwrap();
    let a = monte_carlo(&spec, &cfg, 20, 24, BoundaryPolicy::FrozenZero, Some(1)).unwrap();
    let b = monte_carlo(&spec, &cfg, 20, 24, BoundaryPolicy::FrozenZero, Some(3)).unwrap();
    let c = monte_carlo(&spec, &cfg, 20, 24, BoundaryPolicy::FrozenZero, None).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a, c);
    let manual: Vec<f64> = {
        let mut hits = [0u32; 21];
        for i in 0..24 {
            let r = run_trial(&spec, &cfg.with_seed(trial_seed(5, i)), 20, BoundaryPolicy::FrozenZero).unwrap();
            for (h, &e) in hits.iter_mut().zip(&r.origin_error) {
                *h += e as u32;
            }
        }
        hits.iter().map(|&h| h as f64 / 24.0).collect()
    };
    assert_eq!(a.points.iter().map(|p| p.error_rate).collect::<Vec<_>>(), manual);
}

#[test]
fn wilson_interval_reference_values() {
    // z = 1.96 reference: 10 of 100 gives [0.0552, 0.1744]
    let (lo, hi) = wilson_interval(10, 100);
    assert!((lo - 0.05522).abs() < 1e-4 && (hi - 0.17437).abs() < 1e-4);
    assert_eq!(wilson_interval(0, 50).0, 0.0);
    assert_eq!(wilson_interval(50, 50).1, 1.0);
}

#[test]
fn deterministic_island_persistence() {
    let spec = auto(Finite(4), 4, 5, None);
    let t = spec.tessellation();
    let o = t.origin;
    assert!(run_deterministic(&spec, &[], &[], true, 20).unwrap().iter().all(Vec::is_empty));
    let face = tessvote::analysis::make_island(t, tessvote::analysis::IslandKind::Face).unwrap().vertices;
    let traj = run_deterministic(&spec, &face, &[], true, 200).unwrap();
    assert!(traj.iter().all(|s| face.iter().all(|v| s.contains(v))));
    let lone = run_deterministic(&spec, &[o], &[], false, 3).unwrap();
    assert!(lone[1].is_empty());
}

#[test]
fn manifest_identifies_the_tessellation() {
    let spec = auto(Finite(4), 5, 3, None);
    let t = spec.tessellation();
    let m = RunManifest::new("simulate", serde_json::json!({"p": 4}), 9, 3, t).unwrap();
    assert_eq!(m.trial_seeds, (0..3).map(|i| trial_seed(9, i)).collect::<Vec<_>>());
    assert_eq!(m.tessellation_hash, tessellation_hash(t).unwrap());
    assert_eq!(m.tessellation_hash.len(), 64);
    let other = build_tessellation(&TessellationSpec::new(Finite(4), 5, 4)).unwrap();
    assert_ne!(tessellation_hash(&other).unwrap(), m.tessellation_hash);
}

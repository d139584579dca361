use tessvote::faults::*;
use tessvote::tessellation::*;

#[test]
fn combined_rate() {
    let c = FaultConfig::new(0.1, 0.2, 1).unwrap();
    assert!((epsilon(&c) - (0.1 + 0.2 - 0.02)).abs() < 1e-15);
    assert!(FaultConfig::new(1.0, 0.0, 1).is_err());
    assert!(FaultConfig::new(0.0, 1.5, 1).is_err());
    assert!(FaultConfig::new(-0.1, 0.0, 1).is_err());
}

#[test]
fn empirical_rates_match_configuration() {
    let (alpha, beta) = (0.03, 0.07);
    let cells = 20_000;
    let trace = FaultTrace::new(&FaultConfig::new(alpha, beta, 11).unwrap(), cells);
    let permanent = trace.permanent().iter().filter(|&&b| b).count() as f64;
    let sd = (cells as f64 * beta * (1.0 - beta)).sqrt();
    assert!((permanent - cells as f64 * beta).abs() < 5.0 * sd);
    let steps = 20;
    let transient: usize = (0..steps).map(|t| trace.transient_cells(t).len()).sum();
    let n = (cells * steps as usize) as f64;
    let sd = (n * alpha * (1.0 - alpha)).sqrt();
    assert!((transient as f64 - n * alpha).abs() < 5.0 * sd);
}

#[test]
fn trace_views_agree() {
    let cfg = FaultConfig::new(0.2, 0.1, 3).unwrap();
    let trace = FaultTrace::new(&cfg, 500);
    for t in 0..5 {
        let mask = trace.mask(t);
        let cells = trace.transient_cells(t);
        for c in 0..500u32 {
            assert_eq!(mask[c as usize], trace.is_faulty(c, t));
            assert_eq!(trace.is_faulty(c, t), trace.transient(c, t) || trace.is_permanent(c));
            assert_eq!(cells.contains(&c), trace.transient(c, t));
        }
        assert_eq!(sample_mask(&cfg, &trace, t).unwrap(), mask);
    }
    assert!(sample_mask(&cfg.with_seed(4), &trace, 0).is_err());
    let again = FaultTrace::new(&cfg, 500);
    assert_eq!(again.mask(3), trace.mask(3));
}

#[test]
fn raising_alpha_only_adds_faults() {
    let low = FaultTrace::new(&FaultConfig::new(0.05, 0.0, 9).unwrap(), 3000);
    let high = FaultTrace::new(&FaultConfig::new(0.2, 0.0, 9).unwrap(), 3000);
    for t in 0..10 {
        for c in 0..3000 {
            assert!(!low.transient(c, t) || high.transient(c, t));
        }
    }
}

#[test]
fn rate_translation_closed_form() {
    for &(xi, kappa, lambda) in &[(0.01, 2u32, 29u32), (1e-6, 1, 6), (0.3, 2, 7)] {
        let (eta, zeta) = rate_translation(xi, kappa, lambda).unwrap();
        assert!((eta - xi.powi(lambda as i32)).abs() <= 1e-15 * eta.max(1e-300));
        let n = kappa * lambda;
        let mut direct = 0.0;
        let mut c = 1.0;
        for k in 1..=n {
            c = c * (n - k + 1) as f64 / k as f64;
            direct += if k % 2 == 1 { 1.0 } else { -1.0 } * c * xi.powi(k as i32);
        }
        assert!((zeta - direct).abs() < 1e-12 * direct);
        let back = eta_from_zeta(zeta, kappa, lambda).unwrap();
        assert!((back - eta).abs() <= 1e-9 * eta);
    }
    assert!(rate_translation(1.5, 1, 1).is_err());
    assert!(rate_translation(0.5, 0, 1).is_err());
}

#[test]
fn lambda_counts_the_dependence_ball() {
    let t = build_tessellation(&TessellationSpec::new(FaceDegree::Finite(4), 5, 4)).unwrap();
    assert_eq!(lambda_for(&t, 1).unwrap(), 6);
    let tree = build_tessellation(&TessellationSpec::new(FaceDegree::Infinite, 3, 4)).unwrap();
    assert_eq!(lambda_for(&tree, 2).unwrap(), 1 + 3 + 6);
    assert!(lambda_for(&tree, 5).is_err());
}

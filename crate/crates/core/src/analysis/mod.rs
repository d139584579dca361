//! Certificates for and against fault tolerance, and the (p,q) classification.

mod certificates;
mod explanation;
mod flows;
mod toom;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tessellation::FaceDegree;

pub use certificates::{
    bridge_persists, island_kind_for, island_persists, make_bridge, make_island, opposite_edge_set, verify_bridge,
    verify_island, BridgeCertificate, CountCheck, IslandCertificate, IslandKind, OppositeEdgeSet, StaticReport,
};
pub use explanation::{
    check_explanation_graph, extract_explanation_graph, log_graph_count_bound, ExplanationGraph, Node, ProjectedGraph,
};
pub use flows::{
    arc_flow, flow_class, in_arcs, make_flow, out_arcs, verify_flows, BalanceViolation, ClassCaps, ClassClaim, ClassStat,
    FlowAssignment, FlowReport,
};
pub use toom::{build_potential, verify_toom, ArcWitness, CrossCheck, SetWitness, ToomPotential, ToomReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// Does not even tolerate transient faults.
    None,
    /// Tolerates transient faults but not combined faults.
    TransientOnly,
    /// Tolerates combined faults.
    Combined,
}

impl Classification {
    pub fn symbol(self) -> char {
        match self {
            Classification::None => '.',
            Classification::TransientOnly => 'x',
            Classification::Combined => '@',
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::None => "None",
            Classification::TransientOnly => "TransientOnly",
            Classification::Combined => "Combined",
        };
        f.write_str(s)
    }
}

/// Fault-tolerance class of the majority automaton on {p,q}.
pub fn classify(p: FaceDegree, q: u32) -> Result<Classification> {
    if q < 2 || p.finite().is_some_and(|n| n < 3) {
        return Err(Error::InvalidSpec(format!("{{{p},{q}}} needs p >= 3 and q >= 2")));
    }
    let c = match p {
        _ if q == 2 => Classification::None,
        FaceDegree::Finite(3) if q <= 6 => Classification::None,
        FaceDegree::Finite(_) if q <= 4 => Classification::None,
        FaceDegree::Finite(3) if q >= 9 => Classification::Combined,
        FaceDegree::Finite(4) if q >= 7 => Classification::Combined,
        FaceDegree::Finite(n) if n >= 5 && q >= 5 => Classification::Combined,
        FaceDegree::Infinite if q >= 5 => Classification::Combined,
        _ => Classification::TransientOnly,
    };
    Ok(c)
}

/// Rows p = 3..=pmax then infinity; columns q = 2..=qmax.
pub fn classify_table(pmax: u32, qmax: u32) -> Result<Vec<(FaceDegree, Vec<Classification>)>> {
    (3..=pmax)
        .map(FaceDegree::Finite)
        .chain(std::iter::once(FaceDegree::Infinite))
        .map(|p| Ok((p, (2..=qmax).map(|q| classify(p, q)).collect::<Result<Vec<_>>>()?)))
        .collect()
}

/// Natural log of q^{2qM+1} eps / (1 - q^{2qM} eps), without clamping.
pub fn log_error_bound(q: u32, m: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) || q < 2 || m < 1.0 {
        return Err(Error::DomainError(format!("bad arguments q={q}, M={m}, eps={eps}")));
    }
    if eps == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let lq = (q as f64).ln();
    let log_x = 2.0 * q as f64 * m * lq + eps.ln();
    let den = -log_x.exp_m1();
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::DomainError(format!(
            "q^(2qM) eps >= 1 for q={q}, M={m}, eps={eps}"
        )));
    }
    Ok(log_x + lq - den.ln())
}

/// Bound on the probability that a cell is in error: q^{2qM+1} eps / (1 - q^{2qM} eps), capped at 1.
pub fn error_bound(q: u32, m: f64, eps: f64) -> Result<f64> {
    Ok(log_error_bound(q, m, eps)?.exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_spot_checks() {
        let f = FaceDegree::Finite;
        assert_eq!(classify(f(3), 7).unwrap(), Classification::TransientOnly);
        assert_eq!(classify(f(4), 5).unwrap(), Classification::TransientOnly);
        assert_eq!(classify(FaceDegree::Infinite, 3).unwrap(), Classification::TransientOnly);
        assert_eq!(classify(f(5), 5).unwrap(), Classification::Combined);
        assert_eq!(classify(f(4), 7).unwrap(), Classification::Combined);
        assert_eq!(classify(f(3), 9).unwrap(), Classification::Combined);
        assert_eq!(classify(FaceDegree::Infinite, 5).unwrap(), Classification::Combined);
        assert_eq!(classify(f(4), 4).unwrap(), Classification::None);
        assert_eq!(classify(f(3), 6).unwrap(), Classification::None);
        assert_eq!(classify(f(9999), 2).unwrap(), Classification::None);
        assert!(classify(f(2), 5).is_err());
    }

    #[test]
    fn bound_basics() {
        assert_eq!(error_bound(5, 2.0, 0.0).unwrap(), 0.0);
        assert!(matches!(error_bound(7, 4.0, 0.5), Err(Error::DomainError(_))));
        assert_eq!(error_bound(3, 2.0, 1e-6).unwrap(), 1.0);
        let small = log_error_bound(5, 2.0, 1e-30).unwrap();
        let ratio = small - 1e-30f64.ln();
        assert!((ratio / (21.0 * 5f64.ln()) - 1.0).abs() < 1e-12);
    }
}

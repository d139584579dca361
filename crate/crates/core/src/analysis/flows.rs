//! Balance-of-payments flow assignments for weakened automata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::automaton::{weakening_rule, AutomatonSpec, WeakeningRule};
use crate::error::{Error, Result};
use crate::tessellation::{class_of, EdgeKind, FaceDegree, Strength, VertexClass, VertexId};

/// Worst-case balance claimed for one vertex class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassClaim {
    pub class: String,
    /// Lower bound on the out-flow of a non-terminal.
    pub out_flow: u32,
    /// Upper bound on the in-flow.
    pub in_flow: u32,
    pub net: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowAssignment {
    pub rule: WeakeningRule,
    /// Dollar amount per edge class, by name.
    pub edge_values: BTreeMap<String, u32>,
    pub r: u32,
    pub s: u32,
    pub claims: Vec<ClassClaim>,
    pub caps: Vec<ClassCaps>,
}

/// Structural limits on the arcs at a vertex of one class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCaps {
    pub class: String,
    pub in_degree: u32,
    /// (dollars, max number of in-arcs carrying that amount)
    pub in_arcs: Vec<(u32, u32)>,
    /// (dollars, max number of out-arcs carrying that amount, None if unlimited)
    pub out_arcs: Vec<(u32, Option<u32>)>,
}

impl ClassCaps {
    /// Largest in-flow allowed by the caps.
    pub fn max_in(&self) -> u32 {
        let mut opts = self.in_arcs.clone();
        opts.sort_by_key(|a| std::cmp::Reverse(a.0));
        let mut left = self.in_degree;
        let mut total = 0;
        for (f, cap) in opts {
            let n = cap.min(left);
            total += f * n;
            left -= n;
        }
        total
    }

    /// Smallest out-flow over `k` arcs allowed by the caps, None if k arcs cannot exist.
    pub fn min_out(&self, k: u32) -> Option<u32> {
        let mut opts = self.out_arcs.clone();
        opts.sort_by_key(|a| a.0);
        let mut left = k;
        let mut total = 0;
        for (f, cap) in opts {
            let n = cap.map_or(left, |c| c.min(left));
            total += f * n;
            left -= n;
        }
        (left == 0).then_some(total)
    }

    fn violations(&self, ins: &[(VertexId, u32)], outs: &[(VertexId, u32)]) -> Vec<String> {
        let mut out = Vec::new();
        if ins.len() as u32 > self.in_degree {
            out.push(format!("{} in-arcs, cap {}", ins.len(), self.in_degree));
        }
        let count = |arcs: &[(VertexId, u32)], f: u32| arcs.iter().filter(|a| a.1 == f).count() as u32;
        for &(_, f) in ins {
            match self.in_arcs.iter().find(|o| o.0 == f) {
                Some(&(_, cap)) if count(ins, f) > cap => out.push(format!("{} in-arcs of {f}, cap {cap}", count(ins, f))),
                None => out.push(format!("in-arc of {f} not admissible")),
                _ => {}
            }
        }
        for &(_, f) in outs {
            match self.out_arcs.iter().find(|o| o.0 == f) {
                Some(&(_, Some(cap))) if count(outs, f) > cap => {
                    out.push(format!("{} out-arcs of {f}, cap {cap}", count(outs, f)))
                }
                None => out.push(format!("out-arc of {f} not admissible")),
                _ => {}
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

fn caps(class: &str, in_degree: u32, in_arcs: &[(u32, u32)], out_arcs: &[(u32, Option<u32>)]) -> ClassCaps {
    ClassCaps {
        class: class.into(),
        in_degree,
        in_arcs: in_arcs.to_vec(),
        out_arcs: out_arcs.to_vec(),
    }
}

impl FlowAssignment {
    pub fn m(&self) -> f64 {
        1.0 + self.s as f64 / self.r as f64
    }
}

fn claim(class: &str, out_flow: u32, in_flow: u32) -> ClassClaim {
    ClassClaim {
        class: class.into(),
        out_flow,
        in_flow,
        net: out_flow as i64 - in_flow as i64,
    }
}

/// The flow assignment for {p,q} in the combined-tolerance region.
pub fn make_flow(p: FaceDegree, q: u32) -> Result<FlowAssignment> {
    let rule = weakening_rule(p, q)?;
    let values = |pairs: &[(&str, u32)]| pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    let inf = None;
    let f = match rule {
        WeakeningRule::Tree => FlowAssignment {
            rule,
            edge_values: values(&[("any", 1)]),
            r: 1,
            s: 1,
            claims: vec![claim("one-parent", 2, 1)],
            caps: vec![caps("one-parent", 1, &[(1, 1)], &[(1, inf)])],
        },
        WeakeningRule::Square => FlowAssignment {
            rule,
            edge_values: values(&[("special", 1), ("other", 3)]),
            r: 2,
            s: 6,
            claims: vec![claim("one-parent", 5, 3), claim("two-parent", 6, 4)],
            caps: vec![
                caps("one-parent", 1, &[(3, 1)], &[(1, Some(2)), (3, inf)]),
                caps("two-parent", 2, &[(3, 1), (1, 2)], &[(3, inf)]),
            ],
        },
        WeakeningRule::Triangle => FlowAssignment {
            rule,
            edge_values: values(&[("sibling", 2), ("other", 3)]),
            r: 1,
            s: 6,
            claims: vec![claim("one-parent", 6, 5), claim("two-parent", 7, 6)],
            caps: vec![
                caps("one-parent", 2, &[(3, 1), (2, 1)], &[(3, inf)]),
                caps("two-parent", 2, &[(3, 2)], &[(2, Some(2)), (3, inf)]),
            ],
        },
        WeakeningRule::EvenFace => FlowAssignment {
            rule,
            edge_values: values(&[("special", 1), ("other", 3)]),
            r: 1,
            s: 3,
            claims: vec![claim("one-parent", 4, 3), claim("two-parent", 3, 2)],
            caps: vec![
                caps("one-parent", 1, &[(3, 1)], &[(1, Some(1)), (3, inf)]),
                caps("two-parent", 2, &[(1, 2)], &[(3, inf)]),
            ],
        },
        WeakeningRule::OddFace => FlowAssignment {
            rule,
            edge_values: values(&[
                ("cousin", 2),
                ("into-two-parent", 4),
                ("into-weak-cousin-with-strong-cousin", 6),
                ("into-weak-cousin-with-weak-cousin", 8),
                ("other", 9),
            ]),
            r: 1,
            s: 9,
            claims: vec![
                claim("non-cousin one-parent", 10, 9),
                claim("two-parent", 9, 8),
                claim("strong cousin", 10, 9),
                claim("weak cousin with strong cousin", 9, 8),
                claim("weak cousin with weak cousin", 9, 8),
            ],
            caps: vec![
                caps("non-cousin one-parent", 1, &[(9, 1)], &[(4, Some(1)), (6, inf), (8, inf), (9, inf)]),
                caps("two-parent", 2, &[(4, 2)], &[(9, inf)]),
                caps("strong cousin", 1, &[(9, 1)], &[(2, Some(1)), (8, inf), (9, inf)]),
                caps("weak cousin with strong cousin", 2, &[(6, 1), (2, 1)], &[(9, inf)]),
                caps("weak cousin with weak cousin", 1, &[(8, 1)], &[(9, inf)]),
            ],
        },
    };
    Ok(f)
}

/// Flow class label of vertex v under `rule`.
pub fn flow_class(spec: &AutomatonSpec, v: VertexId) -> String {
    let t = spec.tessellation();
    let class = class_of(t, v);
    match class {
        VertexClass::Origin => "origin".into(),
        VertexClass::TwoParent => "two-parent".into(),
        VertexClass::OneParent { has_cousin: false } => match spec.weakening {
            Some(WeakeningRule::OddFace) => "non-cousin one-parent".into(),
            _ => "one-parent".into(),
        },
        VertexClass::OneParent { has_cousin: true } => {
            let strength = spec.strength().expect("odd p carries strengths");
            let cousin = t.vertices[v as usize].peers().next().expect("cousin present");
            match (strength[v as usize], strength[cousin as usize]) {
                (Strength::Strong, _) => "strong cousin".into(),
                (_, Strength::Strong) => "weak cousin with strong cousin".into(),
                _ => "weak cousin with weak cousin".into(),
            }
        }
    }
}

/// Dollars on the arc u -> w of the explanation graph (w a guardian that u does not ignore).
pub fn arc_flow(spec: &AutomatonSpec, u: VertexId, w: VertexId) -> u32 {
    let t = spec.tessellation();
    let kind = t.edge_between(u, w).map(|e| t.edges[e as usize].kind);
    match spec.weakening {
        None | Some(WeakeningRule::Tree) => 1,
        Some(WeakeningRule::Square) | Some(WeakeningRule::EvenFace) => {
            let special = matches!(class_of(t, u), VertexClass::OneParent { .. }) && class_of(t, w) == VertexClass::TwoParent;
            if special {
                1
            } else {
                3
            }
        }
        Some(WeakeningRule::Triangle) => {
            if kind == Some(EdgeKind::Sibling) {
                2
            } else {
                3
            }
        }
        Some(WeakeningRule::OddFace) => {
            if kind == Some(EdgeKind::Cousin) {
                return 2;
            }
            match flow_class(spec, w).as_str() {
                "two-parent" => 4,
                "weak cousin with strong cousin" => 6,
                "weak cousin with weak cousin" => 8,
                _ => 9,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStat {
    pub class: String,
    pub vertices: usize,
    /// Smallest reduced threshold seen in the class.
    pub min_reduced_threshold: u32,
    /// Worst case allowed by the structural caps.
    pub analytic_out: Option<u32>,
    pub analytic_in: Option<u32>,
    pub analytic_net: Option<i64>,
    /// Realized extremes over the region.
    pub min_out: u32,
    pub max_in: u32,
    pub min_net: i64,
    /// Vertex attaining `min_net`.
    pub worst_vertex: VertexId,
    /// Vertices whose arcs break the class caps.
    pub cap_violations: Vec<(VertexId, String)>,
    pub claim: Option<ClassClaim>,
    /// Analytic worst case equals the claim, the caps hold everywhere and realized nets stay above it.
    pub matches_claim: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceViolation {
    pub vertex: VertexId,
    pub class: String,
    pub out_flow: u32,
    pub in_flow: u32,
    pub out_arcs: Vec<(VertexId, u32)>,
    pub in_arcs: Vec<(VertexId, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub rule: WeakeningRule,
    pub r: u32,
    pub s: u32,
    pub m: f64,
    pub region_size: usize,
    pub max_in_flow: u32,
    pub classes: Vec<ClassStat>,
    pub violations: Vec<BalanceViolation>,
    pub pass: bool,
}

/// Arcs into v: (u, dollars) for every neighbor u that does not ignore v.
pub fn in_arcs(spec: &AutomatonSpec, v: VertexId) -> Vec<(VertexId, u32)> {
    spec.tessellation()
        .neighbors(v)
        .filter(|&u| {
            spec.guardians(u)
                .iter()
                .zip(spec.ignored_flags(u))
                .any(|(&w, &ig)| w == v && !ig)
        })
        .map(|u| (u, arc_flow(spec, u, v)))
        .collect()
}

/// Arcs out of v to the guardians it does not ignore, cheapest first.
pub fn out_arcs(spec: &AutomatonSpec, v: VertexId) -> Vec<(VertexId, u32)> {
    let mut arcs: Vec<(VertexId, u32)> = spec
        .active_guardians(v)
        .into_iter()
        .map(|w| (w, arc_flow(spec, v, w)))
        .collect();
    arcs.sort_by_key(|&(w, f)| (f, w));
    arcs
}

/// Check the balance for every interior vertex of the weakened automaton.
pub fn verify_flows(spec: &AutomatonSpec, flow: &FlowAssignment) -> Result<FlowReport> {
    if spec.weakening != Some(flow.rule) {
        return Err(Error::WeakeningNotApplicable {
            p: spec.tessellation().p().to_string(),
            q: spec.tessellation().q(),
        });
    }
    let mut stats: BTreeMap<String, ClassStat> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut max_in_flow = 0;
    let mut region = 0;
    for v in 0..spec.cell_count() as VertexId {
        if !spec.is_complete(v) {
            continue;
        }
        region += 1;
        let ins = in_arcs(spec, v);
        let outs = out_arcs(spec, v);
        let in_flow: u32 = ins.iter().map(|a| a.1).sum();
        let k = spec.reduced_threshold(v);
        let out_flow: u32 = outs.iter().take(k as usize).map(|a| a.1).sum();
        let net = out_flow as i64 - in_flow as i64;
        max_in_flow = max_in_flow.max(in_flow);
        let class = flow_class(spec, v);
        if net < flow.r as i64 || outs.len() < k as usize {
            violations.push(BalanceViolation {
                vertex: v,
                class: class.clone(),
                out_flow,
                in_flow,
                out_arcs: outs.clone(),
                in_arcs: ins.clone(),
            });
        }
        let rule = flow.caps.iter().find(|c| c.class == class);
        let e = stats.entry(class.clone()).or_insert_with(|| ClassStat {
            class: class.clone(),
            vertices: 0,
            min_reduced_threshold: u32::MAX,
            analytic_out: None,
            analytic_in: None,
            analytic_net: None,
            min_out: u32::MAX,
            max_in: 0,
            min_net: i64::MAX,
            worst_vertex: v,
            cap_violations: Vec::new(),
            claim: flow.claims.iter().find(|c| c.class == class).cloned(),
            matches_claim: false,
        });
        e.vertices += 1;
        e.min_reduced_threshold = e.min_reduced_threshold.min(k);
        e.min_out = e.min_out.min(out_flow);
        e.max_in = e.max_in.max(in_flow);
        if net < e.min_net {
            e.min_net = net;
            e.worst_vertex = v;
        }
        if let Some(rule) = rule {
            for problem in rule.violations(&ins, &outs) {
                if e.cap_violations.len() < 16 {
                    e.cap_violations.push((v, problem));
                }
            }
        }
    }
    let mut classes: Vec<ClassStat> = stats.into_values().collect();
    for c in &mut classes {
        if let Some(rule) = flow.caps.iter().find(|r| r.class == c.class) {
            c.analytic_in = Some(rule.max_in());
            c.analytic_out = rule.min_out(c.min_reduced_threshold);
            c.analytic_net = c.analytic_out.map(|o| o as i64 - rule.max_in() as i64);
        }
        c.matches_claim = match (&c.claim, c.analytic_out, c.analytic_in, c.analytic_net) {
            (Some(cl), Some(o), Some(i), Some(n)) => {
                o == cl.out_flow && i == cl.in_flow && n >= flow.r as i64 && c.cap_violations.is_empty() && c.min_net >= n
            }
            (Some(_), ..) => false,
            (None, ..) => c.min_net >= flow.r as i64,
        };
    }
    let pass = violations.is_empty() && max_in_flow <= flow.s && classes.iter().all(|c| c.matches_claim);
    Ok(FlowReport {
        rule: flow.rule,
        r: flow.r,
        s: flow.s,
        m: flow.m(),
        region_size: region,
        max_in_flow,
        classes,
        violations,
        pass,
    })
}

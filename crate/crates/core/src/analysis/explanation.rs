//! Explanation graphs: fault-rooted certificates for an observed error in a weakened automaton.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::automaton::AutomatonSpec;
use crate::error::{Error, Result};
use crate::faults::FaultTrace;
use crate::tessellation::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Node {
    pub cell: VertexId,
    pub time: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationGraph {
    pub root: Node,
    pub terminals: Vec<Node>,
    pub nonterminals: Vec<Node>,
    pub arcs: Vec<(Node, Node)>,
}

/// The graph with times forgotten: one vertex per cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectedGraph {
    pub vertices: Vec<VertexId>,
    pub terminals: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId)>,
}

impl ExplanationGraph {
    pub fn projected(&self) -> ProjectedGraph {
        let mut vertices: Vec<VertexId> = self.terminals.iter().chain(&self.nonterminals).map(|n| n.cell).collect();
        vertices.sort_unstable();
        let mut terminals: Vec<VertexId> = self.terminals.iter().map(|n| n.cell).collect();
        terminals.sort_unstable();
        let mut edges: Vec<(VertexId, VertexId)> = self.arcs.iter().map(|(a, b)| (a.cell, b.cell)).collect();
        edges.sort_unstable();
        edges.dedup();
        ProjectedGraph {
            vertices,
            terminals,
            edges,
        }
    }

    /// Number of vertices n of the projected graph.
    pub fn n(&self) -> usize {
        self.terminals.len() + self.nonterminals.len()
    }

    /// Number of terminals m.
    pub fn m(&self) -> usize {
        self.terminals.len()
    }
}

/// Cell b is at fault at time s when the adversary controlled the step producing time s.
fn faulted(trace: &FaultTrace, cell: VertexId, time: u32) -> bool {
    time > 0 && trace.is_faulty(cell, time - 1)
}

/// Build the explanation graph of the error of `root_cell` at `root_time`.
/// `trajectory[s]` is the state at time s; step s -> s+1 used the fault mask of time s.
/// Among qualifying error sets the lexicographically least (by cell id) is chosen.
pub fn extract_explanation_graph(
    spec: &AutomatonSpec,
    trace: &FaultTrace,
    trajectory: &[Vec<u8>],
    root_cell: VertexId,
    root_time: u32,
) -> Result<ExplanationGraph> {
    let in_error = |c: VertexId, s: u32| trajectory.get(s as usize).is_some_and(|st| st[c as usize] == 1);
    if !in_error(root_cell, root_time) {
        return Err(Error::RootNotInError {
            cell: root_cell,
            time: root_time,
        });
    }
    let root = Node {
        cell: root_cell,
        time: root_time,
    };
    let mut time_of: HashMap<VertexId, u32> = HashMap::new();
    let mut terminals = Vec::new();
    let mut nonterminals = Vec::new();
    let mut arcs = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        let Node { cell: b, time: s } = node;
        if time_of.contains_key(&b) {
            continue;
        }
        time_of.insert(b, s);
        if faulted(trace, b, s) {
            terminals.push(node);
            continue;
        }
        if !spec.is_complete(b) {
            return Err(Error::BoundaryVertex(b));
        }
        nonterminals.push(node);
        let k = spec.reduced_threshold(b) as usize;
        let mut chosen: Vec<VertexId> = spec.active_guardians(b).into_iter().filter(|&c| in_error(c, s - 1)).collect();
        chosen.sort_unstable();
        if chosen.len() < k {
            return Err(Error::DomainError(format!(
                "cell {b} is in error at time {s} without a fault or an erroneous error set"
            )));
        }
        for &c in &chosen[..k] {
            let child = Node { cell: c, time: s - 1 };
            arcs.push((node, child));
            queue.push_back(child);
        }
    }
    terminals.sort_unstable();
    nonterminals.sort_unstable();
    Ok(ExplanationGraph {
        root,
        terminals,
        nonterminals,
        arcs,
    })
}

/// Structural problems of an explanation graph (empty when it is well formed).
pub fn check_explanation_graph(spec: &AutomatonSpec, trace: &FaultTrace, g: &ExplanationGraph) -> Vec<String> {
    let mut problems = Vec::new();
    let mut cell_time: BTreeMap<VertexId, u32> = BTreeMap::new();
    for n in g.terminals.iter().chain(&g.nonterminals) {
        if let Some(prev) = cell_time.insert(n.cell, n.time) {
            problems.push(format!("cell {} appears at times {} and {}", n.cell, prev, n.time));
        }
    }
    if cell_time.get(&g.root.cell) != Some(&g.root.time) {
        problems.push("root is not a node".into());
    }
    let terminal: BTreeSet<Node> = g.terminals.iter().copied().collect();
    let mut out_degree: BTreeMap<Node, usize> = BTreeMap::new();
    for (a, b) in &g.arcs {
        *out_degree.entry(*a).or_default() += 1;
        if b.time + 1 != a.time {
            problems.push(format!("arc {a:?} -> {b:?} does not go back one step"));
        }
        if !spec.active_guardians(a.cell).contains(&b.cell) {
            problems.push(format!("arc {a:?} -> {b:?} does not follow an active guardian"));
        }
        if !cell_time.contains_key(&b.cell) {
            problems.push(format!("arc target cell {} is not in the graph", b.cell));
        }
    }
    for t in &g.terminals {
        if out_degree.get(t).copied().unwrap_or(0) != 0 {
            problems.push(format!("terminal {t:?} has outgoing arcs"));
        }
        if !faulted(trace, t.cell, t.time) {
            problems.push(format!("terminal {t:?} has no recorded fault"));
        }
    }
    for n in &g.nonterminals {
        if out_degree.get(n).copied().unwrap_or(0) < spec.reduced_threshold(n.cell) as usize {
            problems.push(format!("non-terminal {n:?} has fewer arcs than its reduced threshold"));
        }
        if faulted(trace, n.cell, n.time) {
            problems.push(format!("non-terminal {n:?} carries a fault"));
        }
    }
    if terminal.contains(&g.root) && !g.arcs.is_empty() {
        problems.push("terminal root with arcs".into());
    }
    // projected graph: acyclic, every vertex reachable from the root, root has no in-edges
    let p = g.projected();
    let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    let mut indeg: BTreeMap<VertexId, usize> = p.vertices.iter().map(|&v| (v, 0)).collect();
    for &(a, b) in &p.edges {
        adj.entry(a).or_default().push(b);
        *indeg.entry(b).or_default() += 1;
    }
    let sources: Vec<VertexId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    if sources != [g.root.cell] {
        problems.push(format!("projected graph sources {sources:?}, expected only the root"));
    }
    let mut queue: VecDeque<VertexId> = sources.into_iter().collect();
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        visited += 1;
        for &w in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indeg.get_mut(&w).expect("vertex");
            *d -= 1;
            if *d == 0 {
                queue.push_back(w);
            }
        }
    }
    if visited != p.vertices.len() {
        problems.push("projected graph has a cycle or unreachable vertices".into());
    }
    problems
}

/// Natural log of q^{2qn+1}, the bound on the number of explanation graphs with n vertices.
pub fn log_graph_count_bound(q: u32, n: u64) -> f64 {
    (2 * q as u64 * n + 1) as f64 * (q as f64).ln()
}

//! Directed-graph representation, structural preprocessing, and d-separation.
//!
//! A [`Dag`] preserves the order of its proposal: nodes in first-appearance
//! order, edges in the order they were listed. Every structural operation is
//! deterministic and returns what it removed, so transcripts can report exact
//! pruning counts.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::TemporalTag;

#[derive(Debug, Error)]
pub enum DagError {
    #[error("edge references unknown column `{name}`")]
    UnknownColumn { name: String },
    #[error("self-loop on `{name}`")]
    SelfLoop { name: String },
    #[error("duplicate edge `{parent}` -> `{child}`")]
    DuplicateEdge { parent: String, child: String },
    #[error("node `{name}` not in graph")]
    NodeNotFound { name: String },
    #[error("node `{name}` has no temporal tag")]
    MissingTag { name: String },
    #[error("invalid d-separation query: {reason}")]
    InvalidQuery { reason: String },
    #[error("graph contains a cycle")]
    Cyclic,
}

/// What structural preprocessing removed, and whether the graph is still
/// usable (treatment and outcome both present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub temporal_edges_pruned: Vec<(String, String)>,
    pub cycle_edges_pruned: Vec<(String, String)>,
    pub disconnected_nodes_pruned: Vec<String>,
    pub structurally_valid: bool,
}

#[derive(Debug, Clone)]
pub struct Dag {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    /// (parent, child) node indices, in proposal order.
    edges: Vec<(usize, usize)>,
}

impl Dag {
    /// Builds a graph from an ordered edge list. Node set is the union of
    /// endpoints; unknown names, self-loops and duplicate edges are rejected.
    pub fn from_edges<S: AsRef<str>>(
        edges: &[(S, S)],
        known_columns: &HashSet<String>,
    ) -> Result<Dag, DagError> {
        let mut dag = Dag {
            nodes: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
        };
        let mut seen = HashSet::new();
        for (p, c) in edges {
            let (p, c) = (p.as_ref(), c.as_ref());
            for name in [p, c] {
                if !known_columns.contains(name) {
                    return Err(DagError::UnknownColumn {
                        name: name.to_string(),
                    });
                }
            }
            if p == c {
                return Err(DagError::SelfLoop {
                    name: p.to_string(),
                });
            }
            let pi = dag.intern(p);
            let ci = dag.intern(c);
            if !seen.insert((pi, ci)) {
                return Err(DagError::DuplicateEdge {
                    parent: p.to_string(),
                    child: c.to_string(),
                });
            }
            dag.edges.push((pi, ci));
        }
        Ok(dag)
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges_named(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(p, c)| (self.nodes[p].clone(), self.nodes[c].clone()))
            .collect()
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        match (self.index.get(parent), self.index.get(child)) {
            (Some(&p), Some(&c)) => self.edges.contains(&(p, c)),
            _ => false,
        }
    }

    /// Parents of `child` in edge order.
    pub fn parents_of(&self, child: &str) -> Vec<String> {
        match self.index.get(child) {
            Some(&ci) => self
                .edges
                .iter()
                .filter(|&&(_, c)| c == ci)
                .map(|&(p, _)| self.nodes[p].clone())
                .collect(),
            None => Vec::new(),
        }
    }

    fn parent_idx(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, c)| c == v)
            .map(|&(p, _)| p)
            .collect()
    }

    fn child_idx(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(p, _)| p == v)
            .map(|&(_, c)| c)
            .collect()
    }

    fn idx(&self, name: &str) -> Result<usize, DagError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DagError::NodeNotFound {
                name: name.to_string(),
            })
    }

    /// Checks acyclicity via Kahn's algorithm.
    pub fn validate(&self) -> Result<(), DagError> {
        if self.topo_len() == self.nodes.len() {
            Ok(())
        } else {
            Err(DagError::Cyclic)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_len() == self.nodes.len()
    }

    fn topo_len(&self) -> usize {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, c) in &self.edges {
            indeg[c] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for c in self.child_idx(v) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        seen
    }

    /// Removes edges whose parent's effective time is strictly later than the
    /// child's. Contemporaneous edges are kept. The node set is unchanged.
    pub fn prune_temporal(
        &self,
        tags: &HashMap<String, TemporalTag>,
    ) -> Result<(Dag, Vec<(String, String)>), DagError> {
        for name in &self.nodes {
            if !tags.contains_key(name) {
                return Err(DagError::MissingTag { name: name.clone() });
            }
        }
        let mut pruned = Vec::new();
        let mut kept = Dag {
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            edges: Vec::new(),
        };
        for &(p, c) in &self.edges {
            let tp = tags[&self.nodes[p]].effective_time();
            let tc = tags[&self.nodes[c]].effective_time();
            if tp > tc {
                pruned.push((self.nodes[p].clone(), self.nodes[c].clone()));
            } else {
                kept.edges.push((p, c));
            }
        }
        Ok((kept, pruned))
    }

    /// Removes edges until acyclic. Each round finds one cycle and drops the
    /// edge on it that appears latest in the proposal's edge order, so the
    /// result is deterministic and reproducible from the transcript.
    pub fn break_cycles(&self) -> (Dag, Vec<(String, String)>) {
        let mut work = self.clone();
        let mut removed = Vec::new();
        while let Some(cycle_edges) = work.find_cycle() {
            let &victim = cycle_edges
                .iter()
                .max()
                .expect("a cycle has at least one edge");
            let (p, c) = work.edges[victim];
            removed.push((work.nodes[p].clone(), work.nodes[c].clone()));
            work.edges.remove(victim);
        }
        (work, removed)
    }

    /// Finds one cycle and returns the positions (in the current edge list)
    /// of the edges along it, or `None` if the graph is acyclic.
    fn find_cycle(&self) -> Option<Vec<usize>> {
        fn dfs(
            dag: &Dag,
            v: usize,
            state: &mut [u8], // 0 = unvisited, 1 = on path, 2 = done
            path_nodes: &mut Vec<usize>,
            path_edges: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            state[v] = 1;
            path_nodes.push(v);
            for (pos, &(p, c)) in dag.edges.iter().enumerate() {
                if p != v {
                    continue;
                }
                if state[c] == 1 {
                    let start = path_nodes.iter().position(|&u| u == c).unwrap();
                    let mut cycle = path_edges[start..].to_vec();
                    cycle.push(pos);
                    return Some(cycle);
                }
                if state[c] == 0 {
                    path_edges.push(pos);
                    if let Some(cycle) = dfs(dag, c, state, path_nodes, path_edges) {
                        return Some(cycle);
                    }
                    path_edges.pop();
                }
            }
            state[v] = 2;
            path_nodes.pop();
            None
        }

        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut path_nodes = Vec::new();
        let mut path_edges = Vec::new();
        for s in 0..n {
            if state[s] == 0 {
                if let Some(cycle) = dfs(self, s, &mut state, &mut path_nodes, &mut path_edges) {
                    return Some(cycle);
                }
            }
        }
        None
    }

    /// Removes nodes with no undirected connection to the treatment and none
    /// to the outcome, together with their incident edges.
    pub fn prune_disconnected(&self, treatment: &str, outcome: &str) -> (Dag, Vec<String>) {
        let n = self.nodes.len();
        let mut keep = vec![false; n];
        for name in [treatment, outcome] {
            if let Some(&s) = self.index.get(name) {
                self.mark_undirected_component(s, &mut keep);
            }
        }
        let removed: Vec<String> = (0..n)
            .filter(|&v| !keep[v])
            .map(|v| self.nodes[v].clone())
            .collect();
        if removed.is_empty() {
            return (self.clone(), removed);
        }
        let mut kept = Dag {
            nodes: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
        };
        let mut remap = vec![usize::MAX; n];
        for v in 0..n {
            if keep[v] {
                remap[v] = kept.intern(&self.nodes[v]);
            }
        }
        for &(p, c) in &self.edges {
            if keep[p] && keep[c] {
                kept.edges.push((remap[p], remap[c]));
            }
        }
        (kept, removed)
    }

    fn mark_undirected_component(&self, start: usize, keep: &mut [bool]) {
        if keep[start] {
            return;
        }
        let mut queue = VecDeque::from([start]);
        keep[start] = true;
        while let Some(v) = queue.pop_front() {
            for &(p, c) in &self.edges {
                let other = if p == v {
                    c
                } else if c == v {
                    p
                } else {
                    continue;
                };
                if !keep[other] {
                    keep[other] = true;
                    queue.push_back(other);
                }
            }
        }
    }

    /// All nodes reachable from `x` along directed paths, excluding `x`,
    /// in node order.
    pub fn descendants(&self, x: &str) -> Result<Vec<String>, DagError> {
        let start = self.idx(x)?;
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for c in self.child_idx(v) {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        Ok((0..self.nodes.len())
            .filter(|&v| seen[v] && v != start)
            .map(|v| self.nodes[v].clone())
            .collect())
    }

    /// d-separation of `x` and `y` given `z`, by reachability over active
    /// trails (ancestor-of-z bookkeeping plus an up/down traversal state).
    pub fn d_separated(&self, x: &str, y: &str, z: &[&str]) -> Result<bool, DagError> {
        if x == y {
            return Err(DagError::InvalidQuery {
                reason: "x equals y".into(),
            });
        }
        let xi = self.idx(x)?;
        let yi = self.idx(y)?;
        let mut zset = HashSet::new();
        for name in z {
            let i = self.idx(name)?;
            if i == xi || i == yi {
                return Err(DagError::InvalidQuery {
                    reason: format!("conditioning set contains `{name}`"),
                });
            }
            zset.insert(i);
        }

        // Ancestors of z (including z itself): these open colliders.
        let mut anc_z = zset.clone();
        let mut queue: VecDeque<usize> = zset.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for p in self.parent_idx(v) {
                if anc_z.insert(p) {
                    queue.push_back(p);
                }
            }
        }

        // Traversal state: (node, arrived-from-child?).
        const FROM_CHILD: usize = 0;
        const FROM_PARENT: usize = 1;
        let n = self.nodes.len();
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::from([(xi, FROM_CHILD)]);
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if v == yi {
                return Ok(false);
            }
            if dir == FROM_CHILD {
                if !zset.contains(&v) {
                    for p in self.parent_idx(v) {
                        queue.push_back((p, FROM_CHILD));
                    }
                    for c in self.child_idx(v) {
                        queue.push_back((c, FROM_PARENT));
                    }
                }
            } else {
                if !zset.contains(&v) {
                    for c in self.child_idx(v) {
                        queue.push_back((c, FROM_PARENT));
                    }
                }
                if anc_z.contains(&v) {
                    for p in self.parent_idx(v) {
                        queue.push_back((p, FROM_CHILD));
                    }
                }
            }
        }
        Ok(true)
    }

    /// Copy with all edges leaving `node` removed (used by the back-door
    /// check).
    pub fn without_outgoing(&self, node: &str) -> Result<Dag, DagError> {
        let v = self.idx(node)?;
        let mut out = self.clone();
        out.edges.retain(|&(p, _)| p != v);
        Ok(out)
    }

    /// Graphviz export. Treatment is drawn as a filled box, outcome as a
    /// filled double octagon; all names are quoted verbatim.
    pub fn to_dot(&self, treatment: Option<&str>, outcome: Option<&str>) -> String {
        let mut out = String::from("digraph dag {\n  rankdir=LR;\n");
        for name in &self.nodes {
            let attrs = if Some(name.as_str()) == treatment {
                " [shape=box, style=filled, fillcolor=lightblue]"
            } else if Some(name.as_str()) == outcome {
                " [shape=doubleoctagon, style=filled, fillcolor=lightsalmon]"
            } else {
                ""
            };
            out.push_str(&format!("  \"{}\"{};\n", escape_dot(name), attrs));
        }
        for &(p, c) in &self.edges {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                escape_dot(&self.nodes[p]),
                escape_dot(&self.nodes[c])
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(name: &str) -> String {
    name.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Rebuilds a graph from explicit node and edge lists (e.g. from a stored
/// diagnostics record). Nodes without edges are preserved.
pub fn dag_from_parts(nodes: &[String], edges: &[(String, String)]) -> Result<Dag, DagError> {
    let known: HashSet<String> = nodes.iter().cloned().collect();
    let mut dag = Dag::from_edges(
        &edges
            .iter()
            .map(|(p, c)| (p.as_str(), c.as_str()))
            .collect::<Vec<_>>(),
        &known,
    )?;
    for name in nodes {
        dag.intern(name);
    }
    Ok(dag)
}

//! Causal DAG representation and three-node structure classification.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{CausalError, TimeLaw};

/// Whether a cause's state change persists (steady) or must be captured as
/// it happens (transient). Transient causes each need a dedicated
/// interaction-time model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Steady,
    Transient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalNode {
    pub id: String,
    pub observable: bool,
    pub state_kind: StateKind,
}

/// Directed edge with its interaction-time law (serialized flat:
/// `{"cause", "effect", "mean", "low", "high"}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalEdge {
    pub cause: String,
    pub effect: String,
    #[serde(flatten)]
    pub law: TimeLaw,
}

/// The four basic three-node causal structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Chain,
    Fork,
    Collider,
    Confounder,
    Other,
}

/// A validated directed acyclic causal graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct CausalGraph {
    nodes: Vec<CausalNode>,
    edges: Vec<CausalEdge>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    nodes: Vec<CausalNode>,
    edges: Vec<CausalEdge>,
}

impl TryFrom<RawGraph> for CausalGraph {
    type Error = CausalError;
    fn try_from(raw: RawGraph) -> Result<Self, CausalError> {
        CausalGraph::new(raw.nodes, raw.edges)
    }
}

impl From<CausalGraph> for RawGraph {
    fn from(g: CausalGraph) -> RawGraph {
        RawGraph { nodes: g.nodes, edges: g.edges }
    }
}

impl CausalGraph {
    /// Build and validate: unique ids, resolvable edges, valid time laws,
    /// and acyclicity.
    pub fn new(nodes: Vec<CausalNode>, edges: Vec<CausalEdge>) -> Result<Self, CausalError> {
        let mut seen = HashSet::new();
        for n in &nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(CausalError::DuplicateNode(n.id.clone()));
            }
        }
        for e in &edges {
            for id in [&e.cause, &e.effect] {
                if !seen.contains(id.as_str()) {
                    return Err(CausalError::UnknownNode(id.clone()));
                }
            }
            e.law.validate()?;
        }
        let g = Self { nodes, edges };
        if g.has_cycle() {
            return Err(CausalError::Cyclic);
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &[CausalNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CausalEdge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Result<&CausalNode, CausalError> {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| CausalError::NodeNotFound(id.to_string()))
    }

    fn has_cycle(&self) -> bool {
        // Kahn's algorithm.
        let mut indeg: HashMap<&str, usize> =
            self.nodes.iter().map(|n| (n.id.as_str(), 0)).collect();
        for e in &self.edges {
            *indeg.get_mut(e.effect.as_str()).unwrap() += 1;
        }
        let mut queue: VecDeque<&str> =
            indeg.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut visited = 0;
        while let Some(id) = queue.pop_front() {
            visited += 1;
            for e in self.edges.iter().filter(|e| e.cause == id) {
                let d = indeg.get_mut(e.effect.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(e.effect.as_str());
                }
            }
        }
        visited != self.nodes.len()
    }

    /// Direct parents of `id`.
    pub fn parents(&self, id: &str) -> Vec<&str> {
        self.edges.iter().filter(|e| e.effect == id).map(|e| e.cause.as_str()).collect()
    }

    /// True if a directed path `from -> to` exists (including `from == to`).
    pub fn reaches(&self, from: &str, to: &str) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(id) = stack.pop() {
            if id == to {
                return true;
            }
            if seen.insert(id) {
                stack.extend(
                    self.edges.iter().filter(|e| e.cause == id).map(|e| e.effect.as_str()),
                );
            }
        }
        false
    }

    /// Enumerate every directed path `from -> to` as node-id sequences.
    pub fn paths(&self, from: &str, to: &str) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut current = vec![from.to_string()];
        self.paths_rec(from, to, &mut current, &mut out);
        out
    }

    fn paths_rec(&self, at: &str, to: &str, current: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if at == to {
            out.push(current.clone());
            return;
        }
        for e in self.edges.iter().filter(|e| e.cause == at) {
            current.push(e.effect.clone());
            self.paths_rec(&e.effect, to, current, out);
            current.pop();
        }
    }

    /// Time law attached to the edge `cause -> effect`, if present.
    pub fn edge_law(&self, cause: &str, effect: &str) -> Option<TimeLaw> {
        self.edges.iter().find(|e| e.cause == cause && e.effect == effect).map(|e| e.law)
    }

    /// Classify the causal structure induced by three nodes.
    pub fn classify_structure(&self, ids: [&str; 3]) -> Result<Structure, CausalError> {
        for id in ids {
            self.node(id)?;
        }
        let induced: Vec<(&str, &str)> = self
            .edges
            .iter()
            .filter(|e| {
                ids.contains(&e.cause.as_str()) && ids.contains(&e.effect.as_str())
            })
            .map(|e| (e.cause.as_str(), e.effect.as_str()))
            .collect();
        if !connected(&ids, &induced) {
            return Err(CausalError::Disconnected);
        }
        let outdeg = |id: &str| induced.iter().filter(|(c, _)| *c == id).count();
        let indeg = |id: &str| induced.iter().filter(|(_, f)| *f == id).count();
        let s = match induced.len() {
            2 => {
                if ids.iter().any(|&n| outdeg(n) == 2) {
                    Structure::Fork
                } else if ids.iter().any(|&n| indeg(n) == 2) {
                    Structure::Collider
                } else if ids.iter().any(|&n| indeg(n) == 1 && outdeg(n) == 1) {
                    Structure::Chain
                } else {
                    Structure::Other
                }
            }
            3 => {
                let root = ids.iter().find(|&&n| outdeg(n) == 2 && indeg(n) == 0);
                let sink = ids.iter().find(|&&n| indeg(n) == 2 && outdeg(n) == 0);
                let mid = ids.iter().find(|&&n| indeg(n) == 1 && outdeg(n) == 1);
                if root.is_some() && sink.is_some() && mid.is_some() {
                    Structure::Confounder
                } else {
                    Structure::Other
                }
            }
            _ => Structure::Other,
        };
        Ok(s)
    }
}

fn connected(ids: &[&str; 3], edges: &[(&str, &str)]) -> bool {
    let mut seen = HashSet::from([ids[0]]);
    let mut frontier = vec![ids[0]];
    while let Some(at) = frontier.pop() {
        for &(c, f) in edges {
            let next = if c == at {
                Some(f)
            } else if f == at {
                Some(c)
            } else {
                None
            };
            if let Some(n) = next {
                if seen.insert(n) {
                    frontier.push(n);
                }
            }
        }
    }
    seen.len() == 3
}

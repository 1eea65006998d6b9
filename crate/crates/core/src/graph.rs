//! Communication graphs. An edge `(i, j)` means agent `i` sends to agent `j`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CommGraph {
    num_agents: usize,
    edges: Vec<(usize, usize)>,
}

/// Outcome of the reciprocal-connectivity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reciprocity {
    /// The symmetric core, which spans and strongly connects all agents.
    Holds { witness: CommGraph },
    Fails { reason: String },
}

impl Reciprocity {
    pub fn holds(&self) -> bool {
        matches!(self, Reciprocity::Holds { .. })
    }
}

impl CommGraph {
    /// Duplicate edges are dropped; input order is otherwise kept.
    pub fn new(num_agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (i, j) in edges {
            if i >= num_agents || j >= num_agents {
                return Err(Error::Index { index: i.max(j), size: num_agents });
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !out.contains(&(i, j)) {
                out.push((i, j));
            }
        }
        Ok(CommGraph { num_agents, edges: out })
    }

    pub fn empty(num_agents: usize) -> Self {
        CommGraph { num_agents, edges: Vec::new() }
    }

    pub fn complete(num_agents: usize) -> Self {
        let edges = (0..num_agents)
            .flat_map(|i| (0..num_agents).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        CommGraph { num_agents, edges }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    /// In-neighbours of `i`, ascending.
    pub fn senders(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.num_agents {
            return Err(Error::Index { index: i, size: self.num_agents });
        }
        let mut s: Vec<usize> = self.edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect();
        s.sort_unstable();
        Ok(s)
    }

    /// Edges whose reverse is also present.
    pub fn symmetric_core(&self) -> CommGraph {
        let edges = self.edges.iter().copied().filter(|&(i, j)| self.has_edge(j, i)).collect();
        CommGraph { num_agents: self.num_agents, edges }
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges.iter().all(|&(i, j)| self.has_edge(j, i))
    }

    pub fn with_edge(&self, i: usize, j: usize) -> Result<CommGraph> {
        CommGraph::new(self.num_agents, self.edges.iter().copied().chain([(i, j)]))
    }

    /// Agents reachable from `start` along directed edges.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_agents];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &(i, j) in &self.edges {
                if i == v && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// A spanning subgraph that is symmetric and strongly connected exists
    /// exactly when the symmetric core connects every agent: any such subgraph
    /// uses only core edges, and a connected core is itself one.
    pub fn satisfies_reciprocity(&self) -> Reciprocity {
        let core = self.symmetric_core();
        if self.num_agents == 0 {
            return Reciprocity::Fails { reason: "no agents".into() };
        }
        let seen = core.reachable_from(0);
        match seen.iter().position(|&s| !s) {
            None => Reciprocity::Holds { witness: core },
            Some(missing) => Reciprocity::Fails {
                reason: if core.edges.is_empty() {
                    "symmetric core is empty".to_string()
                } else {
                    format!("agent {missing} is not reciprocally connected to agent 0")
                },
            },
        }
    }

    /// Deterministic DOT rendering; edges appear in input order.
    pub fn export_dot(&self, labels: &[String]) -> Result<String> {
        if labels.len() != self.num_agents {
            return Err(Error::LabelMismatch { expected: self.num_agents, got: labels.len() });
        }
        let mut out = String::from("digraph communication {\n");
        for l in labels {
            writeln!(out, "  \"{}\";", escape(l)).unwrap();
        }
        for &(i, j) in &self.edges {
            writeln!(out, "  \"{}\" -> \"{}\";", escape(&labels[i]), escape(&labels[j])).unwrap();
        }
        out.push_str("}\n");
        Ok(out)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

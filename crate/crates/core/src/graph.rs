//! Acyclic directed mixed graphs: directed edges carry causal mechanisms,
//! bidirected edges mark pairs confounded by an unobserved variable.
//!
//! Node identity is the declaration index; names are case-sensitive strings.
//! All derived orderings break ties by declaration order so downstream
//! reports are byte-stable.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("directed part has a cycle through node `{0}`")]
    Cycle(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} - {1}")]
    DuplicateEdge(String, String),
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("cardinality of `{0}` must be at least 2")]
    BadCardinality(String),
    #[error("nodes {0:?} are not distinct")]
    NotDistinct(Vec<String>),
    #[error("graph parse error: {0}")]
    Parse(String),
}

/// A declared variable: name plus number of states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    #[serde(default = "default_card", rename = "card")]
    pub cardinality: usize,
}

fn default_card() -> usize {
    2
}

/// Acyclic directed mixed graph over named discrete variables.
///
/// Immutable after construction; safe to share across concurrent solves.
#[derive(Debug, Clone, PartialEq)]
pub struct Admg {
    nodes: Vec<Node>,
    directed: Vec<(usize, usize)>,
    bidirected: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct AdmgWire {
    nodes: Vec<Node>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    bidirected: Vec<(String, String)>,
}

impl Admg {
    /// Validates and builds a graph. Edge endpoints are node names.
    pub fn new(
        nodes: Vec<Node>,
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.name.clone()) {
                return Err(GraphError::DuplicateNode(n.name.clone()));
            }
            if n.cardinality < 2 {
                return Err(GraphError::BadCardinality(n.name.clone()));
            }
        }
        let mut g = Admg { nodes, directed: Vec::new(), bidirected: Vec::new() };
        let mut dir_seen = BTreeSet::new();
        for &(a, b) in directed {
            let (i, j) = (g.index_of(a)?, g.index_of(b)?);
            if i == j {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            if !dir_seen.insert((i, j)) {
                return Err(GraphError::DuplicateEdge(a.to_string(), b.to_string()));
            }
            g.directed.push((i, j));
        }
        let mut bi_seen = BTreeSet::new();
        for &(a, b) in bidirected {
            let (i, j) = (g.index_of(a)?, g.index_of(b)?);
            if i == j {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            if !bi_seen.insert((i.min(j), i.max(j))) {
                return Err(GraphError::DuplicateEdge(a.to_string(), b.to_string()));
            }
            g.bidirected.push((i, j));
        }
        // Acyclicity is part of the type's contract, so check it eagerly.
        g.topological_order()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let wire: AdmgWire =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        let directed: Vec<(&str, &str)> =
            wire.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let bidirected: Vec<(&str, &str)> =
            wire.bidirected.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Admg::new(wire.nodes, &directed, &bidirected)
    }

    pub fn to_json(&self) -> String {
        let wire = AdmgWire {
            nodes: self.nodes.clone(),
            edges: self
                .directed
                .iter()
                .map(|&(i, j)| (self.nodes[i].name.clone(), self.nodes[j].name.clone()))
                .collect(),
            bidirected: self
                .bidirected
                .iter()
                .map(|&(i, j)| (self.nodes[i].name.clone(), self.nodes[j].name.clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&wire).expect("graph serialization cannot fail")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i].name
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.nodes[i].cardinality
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    /// Parents of `i` in declaration order.
    pub fn parents_of(&self, i: usize) -> Vec<usize> {
        let mut ps: Vec<usize> =
            self.directed.iter().filter(|&&(_, c)| c == i).map(|&(p, _)| p).collect();
        ps.sort_unstable();
        ps
    }

    pub fn children_of(&self, i: usize) -> Vec<usize> {
        let mut cs: Vec<usize> =
            self.directed.iter().filter(|&&(p, _)| p == i).map(|&(_, c)| c).collect();
        cs.sort_unstable();
        cs
    }

    /// Bidirected neighbours of `i` in declaration order.
    pub fn spouses_of(&self, i: usize) -> Vec<usize> {
        let mut ss: Vec<usize> = self
            .bidirected
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        ss.sort_unstable();
        ss
    }

    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.directed.contains(&(from, to))
    }

    pub fn has_bidirected(&self, a: usize, b: usize) -> bool {
        self.bidirected.contains(&(a, b)) || self.bidirected.contains(&(b, a))
    }

    /// Nodes reachable from `i` along directed edges, excluding `i` itself.
    pub fn descendants_of(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = self.children_of(i);
        while let Some(u) = stack.pop() {
            if seen.insert(u) {
                stack.extend(self.children_of(u));
            }
        }
        seen
    }

    /// Total order consistent with the directed edges, ties broken by
    /// declaration order (Kahn's algorithm with a smallest-index frontier).
    pub fn topological_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, c) in &self.directed {
            indeg[c] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        for _ in 0..n {
            let next = (0..n).find(|&i| !done[i] && indeg[i] == 0);
            match next {
                Some(i) => {
                    done[i] = true;
                    order.push(i);
                    for &(p, c) in &self.directed {
                        if p == i {
                            indeg[c] -= 1;
                        }
                    }
                }
                None => {
                    let stuck = (0..n).find(|&i| !done[i]).expect("some node remains");
                    return Err(GraphError::Cycle(self.nodes[stuck].name.clone()));
                }
            }
        }
        Ok(order)
    }

    /// Topological order as node names.
    pub fn topological_names(&self) -> Result<Vec<String>, GraphError> {
        Ok(self.topological_order()?.iter().map(|&i| self.nodes[i].name.clone()).collect())
    }

    /// Partition of the nodes into confounded components: connected
    /// components of the bidirected subgraph. Singletons for unconfounded
    /// nodes. Blocks and members are in declaration order.
    pub fn c_components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut comp = vec![usize::MAX; n];
        let mut cid = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = cid;
            while let Some(u) = stack.pop() {
                for w in self.spouses_of(u) {
                    if comp[w] == usize::MAX {
                        comp[w] = cid;
                        stack.push(w);
                    }
                }
            }
            cid += 1;
        }
        let mut blocks = vec![Vec::new(); cid];
        for (node, &c) in comp.iter().enumerate() {
            blocks[c].push(node);
        }
        blocks
    }

    /// The confounded component containing `i`.
    pub fn c_component_of(&self, i: usize) -> Vec<usize> {
        self.c_components()
            .into_iter()
            .find(|b| b.contains(&i))
            .expect("every node lies in a component")
    }

    /// Structural instrument test for `i` relative to treatment `x` and
    /// outcome `y`: `i -> x` present, no `i -> y`, no `i <-> y`, no `i <-> x`.
    pub fn is_structural_instrument(
        &self,
        i: &str,
        x: &str,
        y: &str,
    ) -> Result<bool, GraphError> {
        let (iv, tx, oy) = (self.index_of(i)?, self.index_of(x)?, self.index_of(y)?);
        if iv == tx || iv == oy || tx == oy {
            return Err(GraphError::NotDistinct(vec![
                i.to_string(),
                x.to_string(),
                y.to_string(),
            ]));
        }
        Ok(self.has_directed(iv, tx)
            && !self.has_directed(iv, oy)
            && !self.has_bidirected(iv, oy)
            && !self.has_bidirected(iv, tx))
    }
}

// ── Stock graphs used across tests and the harness ──────────────────────────

/// X -> Y with X <-> Y.
pub fn bow_graph() -> Admg {
    Admg::new(
        vec![
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("X", "Y")],
        &[("X", "Y")],
    )
    .expect("bow graph is valid")
}

/// I -> X -> Y with X <-> Y.
pub fn iv_graph() -> Admg {
    Admg::new(
        vec![
            Node { name: "I".into(), cardinality: 2 },
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("I", "X"), ("X", "Y")],
        &[("X", "Y")],
    )
    .expect("iv graph is valid")
}

/// Z -> X, Z -> Y, X -> Y with X <-> Y: an observed confounder on top of a bow.
pub fn bow_backdoor_graph() -> Admg {
    Admg::new(
        vec![
            Node { name: "Z".into(), cardinality: 2 },
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("Z", "X"), ("Z", "Y"), ("X", "Y")],
        &[("X", "Y")],
    )
    .expect("bow-backdoor graph is valid")
}

/// I1 -> X, I2 -> X, X -> Y with X <-> Y.
pub fn two_instrument_graph() -> Admg {
    Admg::new(
        vec![
            Node { name: "I1".into(), cardinality: 2 },
            Node { name: "I2".into(), cardinality: 2 },
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("I1", "X"), ("I2", "X"), ("X", "Y")],
        &[("X", "Y")],
    )
    .expect("two-instrument graph is valid")
}

/// Z1 -> X, Z2 -> X, Z1 -> Y, Z2 -> Y, X -> Y; no bidirected edges.
pub fn two_confounder_graph() -> Admg {
    Admg::new(
        vec![
            Node { name: "Z1".into(), cardinality: 2 },
            Node { name: "Z2".into(), cardinality: 2 },
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("Z1", "X"), ("Z2", "X"), ("Z1", "Y"), ("Z2", "Y"), ("X", "Y")],
        &[],
    )
    .expect("two-confounder graph is valid")
}

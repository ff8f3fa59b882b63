//! Router graph and price-weighted path search.
//!
//! The graph is undirected with dense integer node ids. Reservations buy
//! capacity in every router on a path, endpoints included, so the path
//! search minimizes the sum of *node* prices along the path.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("line {line}: duplicate edge {u} {v}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: node id {id} out of range (node count {n})")]
    NodeOutOfRange { line: usize, id: usize, n: usize },
    #[error("graph is disconnected (node {node} unreachable from node 0)")]
    Disconnected { node: usize },
}

/// Undirected router graph with nodes 0..N-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Result of a least-cost path search: the node sequence (src first,
/// dst last) and the estimated reservation cost at the quoted prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PathQuote {
    pub path: Vec<usize>,
    pub est_cost: f64,
}

impl Topology {
    /// Builds a topology from a node count and edge list, running the full
    /// validation used by the text loader.
    pub fn new(n: usize, raw_edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(raw_edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (idx, &(a, b)) in raw_edges.iter().enumerate() {
            let line = idx + 2; // header occupies line 1 in the text form
            if a >= n || b >= n {
                let id = if a >= n { a } else { b };
                return Err(TopologyError::NodeOutOfRange { line, id, n });
            }
            if a == b {
                return Err(TopologyError::SelfLoop { line, node: a });
            }
            let e = (a.min(b), a.max(b));
            if edges.contains(&e) {
                return Err(TopologyError::DuplicateEdge {
                    line,
                    u: e.0,
                    v: e.1,
                });
            }
            edges.push(e);
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        edges.sort_unstable();

        let topo = Topology { n, edges, adjacency };
        topo.check_connected()?;
        Ok(topo)
    }

    fn check_connected(&self) -> Result<(), TopologyError> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(node) => Err(TopologyError::Disconnected { node }),
            None => Ok(()),
        }
    }

    /// The default 10-router network: the Petersen graph (outer 5-cycle,
    /// spokes, inner pentagram). Connected, 3-regular, diameter 2.
    pub fn petersen() -> Self {
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 0),
            (0, 5),
            (1, 6),
            (2, 7),
            (3, 8),
            (4, 9),
            (5, 7),
            (7, 9),
            (9, 6),
            (6, 8),
            (8, 5),
        ];
        Topology::new(10, &edges).expect("default topology is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }
}

impl FromStr for Topology {
    type Err = TopologyError;

    /// Parses the edge-list text format: first line is the node count,
    /// each following line one "u v" pair. `#` starts a comment, blank
    /// lines are ignored.
    fn from_str(text: &str) -> Result<Self, TopologyError> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut edge_lines: Vec<usize> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            match n {
                None => {
                    if tokens.len() != 1 {
                        return Err(TopologyError::Parse {
                            line,
                            msg: format!("expected node count, found {:?}", content),
                        });
                    }
                    let count = tokens[0].parse::<usize>().map_err(|e| TopologyError::Parse {
                        line,
                        msg: format!("invalid node count {:?}: {e}", tokens[0]),
                    })?;
                    if count == 0 {
                        return Err(TopologyError::Parse {
                            line,
                            msg: "node count must be at least 1".into(),
                        });
                    }
                    n = Some(count);
                }
                Some(count) => {
                    if tokens.len() != 2 {
                        return Err(TopologyError::Parse {
                            line,
                            msg: format!("expected \"u v\" edge, found {:?}", content),
                        });
                    }
                    let mut ids = [0usize; 2];
                    for (slot, tok) in ids.iter_mut().zip(&tokens) {
                        *slot = tok.parse::<usize>().map_err(|e| TopologyError::Parse {
                            line,
                            msg: format!("invalid node id {:?}: {e}", tok),
                        })?;
                    }
                    let (a, b) = (ids[0], ids[1]);
                    if a >= count || b >= count {
                        let id = if a >= count { a } else { b };
                        return Err(TopologyError::NodeOutOfRange { line, id, n: count });
                    }
                    if a == b {
                        return Err(TopologyError::SelfLoop { line, node: a });
                    }
                    edges.push((a, b));
                    edge_lines.push(line);
                }
            }
        }

        let n = n.ok_or(TopologyError::Parse {
            line: 0,
            msg: "empty document".into(),
        })?;

        // Re-run the structural validation with real line numbers.
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (&(a, b), &line) in edges.iter().zip(&edge_lines) {
            let e = (a.min(b), a.max(b));
            if seen.contains(&e) {
                return Err(TopologyError::DuplicateEdge { line, u: e.0, v: e.1 });
            }
            seen.push(e);
        }
        Topology::new(n, &edges)
    }
}

impl fmt::Display for Topology {
    /// Serializes back to the edge-list text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for &(u, v) in &self.edges {
            writeln!(f, "{} {}", u, v)?;
        }
        Ok(())
    }
}

/// Loads a topology from its edge-list text form.
pub fn load_topology(text: &str) -> Result<Topology, TopologyError> {
    text.parse()
}

struct QueueEntry {
    cost: f64,
    path: Vec<usize>,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.path == other.path
    }
}
impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    // Reversed: BinaryHeap is a max-heap and we want the smallest
    // (cost, path) first, with the path comparison breaking cost ties
    // toward the lexicographically smallest node sequence.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.path.cmp(&self.path))
    }
}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Node-weighted least-cost path from `src` to `dst`, endpoints included.
///
/// `prices` supplies one positive quoted unit price per node; the returned
/// cost is `cap` times the sum of prices along the path. Cost ties resolve
/// to the lexicographically smallest node sequence, so results are
/// reproducible regardless of edge order in the input file.
pub fn least_cost_path(
    topo: &Topology,
    prices: &[f64],
    src: usize,
    dst: usize,
    cap: f64,
) -> PathQuote {
    let n = topo.node_count();
    assert_eq!(prices.len(), n, "one price per node required");
    assert!(
        prices.iter().all(|p| p.is_finite() && *p > 0.0),
        "prices must be positive and finite"
    );
    assert!(src < n && dst < n, "src/dst must be valid nodes");

    let mut finalized = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry {
        cost: prices[src],
        path: vec![src],
    });

    while let Some(QueueEntry { cost, path }) = heap.pop() {
        let tip = *path.last().expect("paths are non-empty");
        if finalized[tip] {
            continue;
        }
        finalized[tip] = true;
        if tip == dst {
            return PathQuote {
                path,
                est_cost: cap * cost,
            };
        }
        for &next in topo.neighbors(tip) {
            if !finalized[next] {
                let mut extended = path.clone();
                extended.push(next);
                heap.push(QueueEntry {
                    cost: cost + prices[next],
                    path: extended,
                });
            }
        }
    }
    unreachable!("topology is connected by construction");
}

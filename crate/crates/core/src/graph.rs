//! Finite connected graphs on dense vertex indices `0..n`.
//!
//! Every [`Graph`] handed out by this module is simple (no loops, no
//! multi-edges) and connected. Adjacency lists are kept sorted so that
//! breadth-first traversals visit neighbors in ascending index order.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Number of Erdős–Rényi samples drawn before giving up on connectivity.
pub const ER_RETRY_BUDGET: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),
    #[error("no connected Erdős–Rényi sample after {attempts} attempts")]
    ConnectivityRetryExhausted { attempts: u32 },
    #[error("self-loop at vertex {vertex} (line {line})")]
    SelfLoop { line: usize, vertex: usize },
    #[error("duplicate edge {u}-{v} (line {line})")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("no path between {x} and {y}")]
    NoPath { x: usize, y: usize },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Recipe for building a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { n: usize },
    Cycle { n: usize },
    Grid { w: usize, h: usize },
    ErdosRenyi { n: usize, p: f64 },
    FromFile { path: PathBuf },
}

impl GraphSpec {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidSpec(msg));
        match *self {
            GraphSpec::Complete { n } if n < 2 => bad(format!("complete graph needs n >= 2, got {n}")),
            GraphSpec::Cycle { n } if n < 3 => bad(format!("cycle needs n >= 3, got {n}")),
            GraphSpec::Grid { w, h } if w == 0 || h == 0 || w * h < 2 => {
                bad(format!("grid needs at least 2 vertices, got {w}x{h}"))
            }
            GraphSpec::ErdosRenyi { n, .. } if n < 2 => {
                bad(format!("erdos_renyi needs n >= 2, got {n}"))
            }
            GraphSpec::ErdosRenyi { p, .. } if !(p > 0.0 && p <= 1.0) => {
                bad(format!("erdos_renyi needs p in (0, 1], got {p}"))
            }
            _ => Ok(()),
        }
    }

    /// The same family resized to `n` vertices. Grids must be square.
    pub fn with_size(&self, n: usize) -> Result<GraphSpec, GraphError> {
        match self {
            GraphSpec::Complete { .. } => Ok(GraphSpec::Complete { n }),
            GraphSpec::Cycle { .. } => Ok(GraphSpec::Cycle { n }),
            GraphSpec::ErdosRenyi { p, .. } => Ok(GraphSpec::ErdosRenyi { n, p: *p }),
            GraphSpec::Grid { .. } => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(GraphError::InvalidSpec(format!(
                        "grid family needs a square vertex count, got {n}"
                    )));
                }
                Ok(GraphSpec::Grid { w: side, h: side })
            }
            GraphSpec::FromFile { .. } => Err(GraphError::InvalidSpec(
                "a graph file is not a size-parameterized family".into(),
            )),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Complete { n } => write!(f, "complete({n})"),
            GraphSpec::Cycle { n } => write!(f, "cycle({n})"),
            GraphSpec::Grid { w, h } => write!(f, "grid({w},{h})"),
            GraphSpec::ErdosRenyi { n, p } => write!(f, "erdos_renyi({n},{p})"),
            GraphSpec::FromFile { path } => write!(f, "from_file({})", path.display()),
        }
    }
}

/// Undirected simple connected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Unordered edges stored as `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    /// Both orientations of every edge; index `2k` is `u -> v`, `2k + 1` is `v -> u`.
    oriented: Vec<(u32, u32)>,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting loops, duplicates,
    /// out-of-range vertices and disconnected inputs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        let g = Graph::build(n, edges.iter().copied().enumerate().map(|(i, e)| (i + 1, e)))?;
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Structural checks only; connectivity is left to the caller.
    fn build(
        n: usize,
        edges: impl IntoIterator<Item = (usize, (usize, usize))>,
    ) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut seen = BTreeSet::new();
        for (line, (u, v)) in edges {
            for vertex in [u, v] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { vertex, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { line, vertex: u });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge { line, u, v });
            }
        }
        let edges: Vec<(usize, usize)> = seen.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        let mut oriented = Vec::with_capacity(2 * edges.len());
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
            oriented.push((u as u32, v as u32));
            oriented.push((v as u32, u as u32));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph { n, edges, adjacency, oriented })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_oriented_edges(&self) -> usize {
        self.oriented.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn oriented_edges(&self) -> &[(u32, u32)] {
        &self.oriented
    }

    /// Neighbors of `x` in ascending order.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(&self.adjacency)
    }

    /// Breadth-first shortest path from `x` to `y`, both endpoints included.
    pub fn shortest_path(&self, x: usize, y: usize) -> Result<Vec<usize>, GraphError> {
        for vertex in [x, y] {
            if vertex >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex, n: self.n });
            }
        }
        if x == y {
            return Ok(vec![x]);
        }
        let mut parent = vec![usize::MAX; self.n];
        parent[x] = x;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if parent[v] != usize::MAX {
                    continue;
                }
                parent[v] = u;
                if v == y {
                    let mut path = vec![y];
                    let mut cur = y;
                    while cur != x {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Ok(path);
                }
                queue.push_back(v);
            }
        }
        Err(GraphError::NoPath { x, y })
    }

    /// Edge-list text, one `u v` line per edge with `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// True iff every vertex is reachable from vertex 0.
pub fn is_connected(adjacency: &[Vec<usize>]) -> bool {
    let n = adjacency.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut reached = 1;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

/// Parses the whitespace-separated edge-list format. `#` starts a comment
/// line; blank lines are skipped. The vertex count is `1 + max index`.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                line,
                message: format!("expected two vertex indices, found {} fields", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| GraphError::Parse {
                line,
                message: format!("{s:?}: {e}"),
            })
        };
        edges.push((line, (parse(fields[0])?, parse(fields[1])?)));
    }
    let Some(max) = edges.iter().map(|&(_, (u, v))| u.max(v)).max() else {
        return Err(GraphError::EmptyGraph);
    };
    let g = Graph::build(max + 1, edges)?;
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(g)
}

/// Builds the graph described by `spec`. Only `erdos_renyi` consumes
/// randomness; attempt `k` samples from stream `k` of `seed`.
pub fn generate(spec: &GraphSpec, seed: u64) -> Result<Graph, GraphError> {
    spec.validate()?;
    match *spec {
        GraphSpec::Complete { n } => {
            let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            Graph::from_edges(n, &edges)
        }
        GraphSpec::Cycle { n } => {
            let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphSpec::Grid { w, h } => {
            let mut edges = Vec::new();
            for r in 0..h {
                for c in 0..w {
                    let id = r * w + c;
                    if c + 1 < w {
                        edges.push((id, id + 1));
                    }
                    if r + 1 < h {
                        edges.push((id, id + w));
                    }
                }
            }
            Graph::from_edges(w * h, &edges)
        }
        GraphSpec::ErdosRenyi { n, p } => {
            for attempt in 0..ER_RETRY_BUDGET {
                let mut rng = rng::stream(seed, u64::from(attempt));
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.gen::<f64>() < p {
                            edges.push((u, v));
                        }
                    }
                }
                match Graph::from_edges(n, &edges) {
                    Ok(g) => return Ok(g),
                    Err(GraphError::Disconnected) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(GraphError::ConnectivityRetryExhausted { attempts: ER_RETRY_BUDGET })
        }
        GraphSpec::FromFile { ref path } => {
            let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_edge_list(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn complete_four() {
        let g = generate(&GraphSpec::Complete { n: 4 }, 0).unwrap();
        assert_eq!(g.n_vertices(), 4);
        assert_eq!(g.n_edges(), 6);
        assert_eq!(g.n_oriented_edges(), 12);
    }

    #[test]
    fn cycle_five_is_two_regular() {
        let g = generate(&GraphSpec::Cycle { n: 5 }, 0).unwrap();
        assert_eq!(g.n_edges(), 5);
        assert!((0..5).all(|x| g.degree(x) == 2));
    }

    #[test]
    fn dense_erdos_renyi_is_complete() {
        let er = generate(&GraphSpec::ErdosRenyi { n: 10, p: 1.0 }, 99).unwrap();
        let k = generate(&GraphSpec::Complete { n: 10 }, 0).unwrap();
        assert_eq!(er.edges(), k.edges());
    }

    #[test]
    fn erdos_renyi_is_deterministic_and_connected() {
        let spec = GraphSpec::ErdosRenyi { n: 20, p: 0.2 };
        let a = generate(&spec, 7).unwrap();
        let b = generate(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
    }

    #[test]
    fn sparse_erdos_renyi_exhausts_retries() {
        let err = generate(&GraphSpec::ErdosRenyi { n: 60, p: 1e-4 }, 1).unwrap_err();
        assert_eq!(err, GraphError::ConnectivityRetryExhausted { attempts: ER_RETRY_BUDGET });
    }

    #[test]
    fn grid_shape() {
        let g = generate(&GraphSpec::Grid { w: 3, h: 3 }, 0).unwrap();
        assert_eq!(g.n_edges(), 12);
        assert_eq!(g.degree(4), 4);
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            GraphSpec::Complete { n: 1 },
            GraphSpec::Cycle { n: 2 },
            GraphSpec::Grid { w: 1, h: 1 },
            GraphSpec::ErdosRenyi { n: 5, p: 0.0 },
            GraphSpec::ErdosRenyi { n: 5, p: 1.5 },
        ] {
            assert!(matches!(generate(&spec, 0), Err(GraphError::InvalidSpec(_))), "{spec}");
        }
    }

    #[test]
    fn parse_path() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert!(g.is_connected());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_edge_list("0 1\n2 3").unwrap_err(), GraphError::Disconnected);
        assert!(matches!(parse_edge_list("0 0"), Err(GraphError::SelfLoop { vertex: 0, .. })));
        assert!(matches!(
            parse_edge_list("0 1\n1 0"),
            Err(GraphError::DuplicateEdge { line: 2, .. })
        ));
        assert!(matches!(parse_edge_list("0 1 2"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("0 x"), Err(GraphError::Parse { .. })));
        assert_eq!(parse_edge_list("# nothing\n\n").unwrap_err(), GraphError::EmptyGraph);
        // vertex 2 never appears, so it is isolated
        assert_eq!(parse_edge_list("0 1\n1 3\n").unwrap_err(), GraphError::Disconnected);
    }

    #[test]
    fn parse_skips_comments_and_blanks() {
        let g = parse_edge_list("# header\n\n  0   1 \n# mid\n2 1\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn connectivity_of_raw_adjacency() {
        assert!(is_connected(&[vec![1, 2], vec![0, 2], vec![0, 1]]));
        assert!(!is_connected(&[vec![1], vec![0], vec![3], vec![2]]));
        assert!(is_connected(&[vec![]]));
    }

    #[test]
    fn shortest_paths() {
        let c4 = generate(&GraphSpec::Cycle { n: 4 }, 0).unwrap();
        assert_eq!(c4.shortest_path(0, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(c4.shortest_path(3, 3).unwrap(), vec![3]);
        let path = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(path.shortest_path(0, 2).unwrap(), vec![0, 1, 2]);
        assert!(path.shortest_path(0, 9).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = GraphSpec> {
        prop_oneof![
            (2usize..12).prop_map(|n| GraphSpec::Complete { n }),
            (3usize..30).prop_map(|n| GraphSpec::Cycle { n }),
            (1usize..6, 2usize..6).prop_map(|(w, h)| GraphSpec::Grid { w, h }),
            (2usize..15, 0.3f64..=1.0).prop_map(|(n, p)| GraphSpec::ErdosRenyi { n, p }),
        ]
    }

    proptest! {
        #[test]
        fn generated_graphs_hold_invariants(spec in arb_spec(), seed in any::<u64>()) {
            let g = generate(&spec, seed).unwrap();
            prop_assert!(g.is_connected());
            prop_assert_eq!(g.n_oriented_edges(), 2 * g.n_edges());
            for &(u, v) in g.edges() {
                prop_assert!(u < v);
                prop_assert!(g.neighbors(u).contains(&v) && g.neighbors(v).contains(&u));
            }
            let degree_sum: usize = (0..g.n_vertices()).map(|x| g.degree(x)).sum();
            prop_assert_eq!(degree_sum, 2 * g.n_edges());
            let reparsed = parse_edge_list(&g.to_edge_list()).unwrap();
            prop_assert_eq!(reparsed, g);
        }

        #[test]
        fn shortest_path_steps_are_edges(n in 3usize..20, x in 0usize..20, y in 0usize..20) {
            let g = generate(&GraphSpec::Cycle { n }, 0).unwrap();
            let (x, y) = (x % n, y % n);
            let path = g.shortest_path(x, y).unwrap();
            let d = x.abs_diff(y);
            prop_assert_eq!(path.len() - 1, d.min(n - d));
            for w in path.windows(2) {
                prop_assert!(g.neighbors(w[0]).contains(&w[1]));
            }
        }
    }
}

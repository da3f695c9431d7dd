//! Undirected multigraphs with two terminals, used to build the
//! network-reliability oracle.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on edge count. Each edge becomes one scenario bit and one
/// decision bit.
pub const MAX_EDGES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    terminals: (usize, usize),
}

impl Graph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>, terminals: (usize, usize)) -> Result<Self> {
        let (u, v) = terminals;
        if u == v {
            return Err(Error::Input(format!("terminals must differ, got {u} and {v}")));
        }
        if u >= vertex_count || v >= vertex_count {
            return Err(Error::Input(format!(
                "terminal out of range for {vertex_count} vertices"
            )));
        }
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= vertex_count || b >= vertex_count) {
            return Err(Error::Input(format!(
                "edge ({a}, {b}) references a vertex outside 0..{vertex_count}"
            )));
        }
        Ok(Self { vertex_count, edges, terminals })
    }

    /// Triangle on vertices u=0, v=1, w=2 with edges ordered (uv, uw, wv).
    pub fn triangle() -> Self {
        Self::new(3, vec![(0, 1), (0, 2), (2, 1)], (0, 1)).expect("valid triangle")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn terminals(&self) -> (usize, usize) {
        self.terminals
    }

    /// Whether the terminals are connected using only the edges whose bit is
    /// set in `edge_mask` (bit j selects edge j).
    pub fn terminals_connected(&self, edge_mask: u64) -> bool {
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (j, &(a, b)) in self.edges.iter().enumerate() {
            if edge_mask >> j & 1 == 1 {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        let (u, v) = self.terminals;
        find(&mut parent, u) == find(&mut parent, v)
    }

    /// Exact two-terminal reliability with each edge failing independently
    /// with probability 1/2, by enumerating every failure pattern.
    pub fn reliability(&self) -> f64 {
        let patterns = 1u64 << self.edges.len();
        let connected = (0..patterns).filter(|&mask| self.terminals_connected(mask)).count();
        connected as f64 / patterns as f64
    }

    /// Parses the edge-list format:
    ///
    /// ```text
    /// terminals 0 1
    /// 0 1
    /// 0 2
    /// 2 1
    /// ```
    ///
    /// Blank lines and `#` comments are ignored. The vertex count is one more
    /// than the largest vertex index mentioned.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terminals = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_vertex = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad vertex `{s}`", lineno + 1)))
            };
            match fields.as_slice() {
                ["terminals", u, v] => {
                    if terminals.is_some() {
                        return Err(Error::Parse(format!("line {}: duplicate terminals line", lineno + 1)));
                    }
                    terminals = Some((parse_vertex(u)?, parse_vertex(v)?));
                }
                [a, b] => {
                    if terminals.is_none() {
                        return Err(Error::Parse(format!(
                            "line {}: edge before `terminals u v` header",
                            lineno + 1
                        )));
                    }
                    edges.push((parse_vertex(a)?, parse_vertex(b)?));
                }
                _ => {
                    return Err(Error::Parse(format!("line {}: expected `u v`, got `{line}`", lineno + 1)));
                }
            }
        }
        let terminals = terminals.ok_or_else(|| Error::Parse("missing `terminals u v` header".into()))?;
        let vertex_count = edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain([terminals.0, terminals.1])
            .max()
            .map_or(0, |m| m + 1);
        Self::new(vertex_count, edges, terminals)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "terminals {} {}", self.terminals.0, self.terminals.1)?;
        for (a, b) in &self.edges {
            writeln!(f, "{a} {b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graph_reliabilities() {
        let single = Graph::new(2, vec![(0, 1)], (0, 1)).unwrap();
        assert_eq!(single.reliability(), 0.5);
        let parallel = Graph::new(2, vec![(0, 1), (0, 1)], (0, 1)).unwrap();
        assert_eq!(parallel.reliability(), 0.75);
        // uv survives (4 of 8) or uv fails and both others survive (1 of 8)
        assert_eq!(Graph::triangle().reliability(), 5.0 / 8.0);
    }

    #[test]
    fn parse_round_trip() {
        let g = Graph::parse("# triangle\nterminals 0 1\n0 1\n0 2\n\n2 1\n").unwrap();
        assert_eq!(g, Graph::triangle());
        assert_eq!(Graph::parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Graph::parse("0 1\n"), Err(Error::Parse(_))));
        assert!(matches!(Graph::parse("terminals 0 1\n0 x\n"), Err(Error::Parse(_))));
        assert!(matches!(Graph::parse("terminals 0 1\n0 1 2\n"), Err(Error::Parse(_))));
        assert!(matches!(Graph::parse("terminals 1 1\n0 1\n"), Err(Error::Input(_))));
    }

    #[test]
    fn connectivity_uses_only_masked_edges() {
        let g = Graph::triangle();
        assert!(!g.terminals_connected(0));
        assert!(g.terminals_connected(0b001));
        assert!(g.terminals_connected(0b110));
        assert!(!g.terminals_connected(0b010));
    }
}

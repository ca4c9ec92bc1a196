//! Finite simple graphs, as induced from Cayley graphs or read from edge lists.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::groups::{Element, GroupBackend, SymmetricSet};

/// Undirected graph on `0..n` without multi-edges. Loops are tracked as a
/// count only; they never appear in the adjacency lists.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleGraph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    loops: usize,
}

impl SimpleGraph {
    /// Builds a graph from an edge list. Duplicate edges are merged; loops are
    /// counted separately.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        let mut loops = 0;
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!("edge ({u},{v}) out of range for {n} vertices")));
            }
            if u == v {
                loops += 1;
            } else {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(SimpleGraph { adjacency, edges: set.into_iter().collect(), loops })
    }

    /// Parses one `u v` pair per line; blank lines and `#` comments are skipped.
    /// The vertex count is one more than the largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Input(format!("line {}: expected `u v`", lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Input(format!("line {}: bad vertex `{s}`", lineno + 1)))
            };
            let (u, v) = (parse(parts[0])?, parse(parts[1])?);
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::from_edges(n, edges)
    }

    /// Subgraph of `Cay(G, S)` induced on `vertices` (vertex `i` is
    /// `vertices[i]`). Edges join `x` and `xs`.
    pub fn induced_cayley(backend: &GroupBackend, s: &SymmetricSet, vertices: &[Element]) -> Result<Self> {
        let index: std::collections::HashMap<&Element, usize> =
            vertices.iter().enumerate().map(|(i, x)| (x, i)).collect();
        if index.len() != vertices.len() {
            return Err(Error::Input("duplicate vertex".into()));
        }
        let mut edges = Vec::new();
        for (i, x) in vertices.iter().enumerate() {
            for g in s.elements() {
                if let Some(&j) = index.get(&backend.multiply(x, g)) {
                    if i <= j {
                        edges.push((i, j));
                    }
                }
            }
        }
        Self::from_edges(vertices.len(), edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn loop_count(&self) -> usize {
        self.loops
    }

    /// Position of edge `{u, v}` in [`Self::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_parsing() {
        let g = SimpleGraph::parse_edge_list("# square\n0 1\n1 2\n2 3\n3 0\n\n1 0\n").unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert!(g.is_connected());
        assert!(SimpleGraph::parse_edge_list("0 1 2\n").is_err());
        assert!(SimpleGraph::parse_edge_list("0 x\n").is_err());
    }

    #[test]
    fn cayley_cycle() {
        let z6 = GroupBackend::cyclic(6);
        let s = SymmetricSet::standard(&z6).unwrap();
        let verts = crate::groups::ball(&z6, &s, 3).elements().to_vec();
        let g = SimpleGraph::induced_cayley(&z6, &s, &verts).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!((0..6).all(|v| g.degree(v) == 2));
    }
}

//! Undirected weighted graphs and edge lists.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// An undirected edge with its length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, length: f64) -> Self {
        Edge { a, b, length }
    }

    /// Endpoints with the smaller id first.
    pub fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// Undirected graph on vertices `0..n` without self-loops or parallel
/// edges; all lengths are positive.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph, keeping the shortest copy of any repeated edge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut list: Vec<Edge> = Vec::new();
        for e in edges {
            if e.a >= n || e.b >= n {
                return invalid(format!("edge ({}, {}) outside 0..{n}", e.a, e.b));
            }
            if e.a == e.b {
                return invalid(format!("self-loop at {}", e.a));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return invalid(format!("edge ({}, {}) has non-positive length", e.a, e.b));
            }
            let (a, b) = e.key();
            list.push(Edge::new(a, b, e.length));
        }
        list.sort_by(|x, y| x.key().cmp(&y.key()).then(x.length.total_cmp(&y.length)));
        list.dedup_by(|x, y| x.key() == y.key());
        let mut adj = vec![Vec::new(); n];
        for e in &list {
            adj[e.a].push((e.b, e.length));
            adj[e.b].push((e.a, e.length));
        }
        Ok(WeightedGraph {
            n,
            edges: list,
            adj,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Edges sorted by endpoint pair.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Single-source shortest path lengths; unreachable vertices get
    /// infinity.
    pub fn shortest_paths(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.n];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            dist: 0.0,
            vertex: source,
        });
        while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, len) in &self.adj[v] {
                let t = d + len;
                if t < dist[w] {
                    dist[w] = t;
                    heap.push(HeapItem { dist: t, vertex: w });
                }
            }
        }
        dist
    }
}

/// Min-heap entry ordered by distance, then vertex id.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct HeapItem {
    pub dist: f64,
    pub vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_and_paths() {
        let g = WeightedGraph::new(
            3,
            [
                Edge::new(0, 1, 2.0),
                Edge::new(1, 0, 1.0),
                Edge::new(1, 2, 1.5),
            ],
        )
        .unwrap();
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.shortest_paths(0), vec![0.0, 1.0, 2.5]);
        assert!(g.is_connected());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(WeightedGraph::new(2, [Edge::new(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, [Edge::new(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(2, [Edge::new(0, 2, 1.0)]).is_err());
    }
}

//! Shortest path computation on the instance graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse undirected edge list with nonnegative costs.
#[derive(Debug, Clone, Default)]
pub struct EdgeCosts {
    pub vertices: usize,
    /// (u, v, cost) triples; parallel edges keep the cheapest.
    pub edges: Vec<(usize, usize, f64)>,
}

impl EdgeCosts {
    pub fn new(vertices: usize) -> Self {
        EdgeCosts {
            vertices,
            edges: Vec::new(),
        }
    }

    pub fn add(&mut self, u: usize, v: usize, cost: f64) {
        self.edges.push((u, v, cost));
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for &(u, v, c) in &self.edges {
            adj[u].push((v, c));
            adj[v].push((u, c));
        }
        adj
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance; ties broken by vertex id for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest paths by running Dijkstra from every vertex.
///
/// Rejects the instance if any vertex pair is unreachable.
pub fn shortest_paths(edge_costs: &EdgeCosts) -> Result<DMatrix<f64>> {
    let n = edge_costs.vertices;
    for &(u, v, c) in &edge_costs.edges {
        if u >= n || v >= n {
            return Err(Error::Dimension(format!("edge ({}, {}) out of range", u, v)));
        }
        if !c.is_finite() || c < 0.0 {
            return Err(Error::NonFinite(format!("edge cost ({}, {})", u, v)));
        }
    }
    let adj = edge_costs.adjacency();
    let mut matrix = DMatrix::from_element(n, n, f64::INFINITY);
    for source in 0..n {
        let dist = dijkstra(&adj, source);
        for (v, d) in dist.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::Disconnected {
                    from: source,
                    vertex: v,
                });
            }
            matrix[(source, v)] = *d;
        }
    }
    // Symmetrize exactly: undirected graphs can pick up tie-breaking noise.
    for i in 0..n {
        for j in (i + 1)..n {
            let d = matrix[(i, j)].min(matrix[(j, i)]);
            matrix[(i, j)] = d;
            matrix[(j, i)] = d;
        }
    }
    Ok(matrix)
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, c) in &adj[u] {
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapEntry { dist: nd, vertex: v });
            }
        }
    }
    dist
}

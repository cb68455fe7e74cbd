//! Dijkstra shortest paths over an undirected adjacency list, with
//! deterministic tie-breaking by vertex id.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Min-heap key ordered by (distance, vertex id) with total float ordering.
#[derive(Copy, Clone)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap on (dist, vertex)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Single-source shortest-path tree.
#[derive(Clone, Debug)]
pub struct ShortestPathTree {
    pub root: usize,
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
}

impl ShortestPathTree {
    pub fn reachable(&self, v: usize) -> bool {
        self.dist[v].is_finite()
    }

    /// Vertices root -> v, inclusive. Empty if unreachable.
    pub fn path(&self, v: usize) -> Vec<usize> {
        if !self.reachable(v) {
            return Vec::new();
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Leaves of the tree: reachable vertices that are nobody's parent.
    pub fn leaves(&self) -> Vec<usize> {
        let mut is_parent = vec![false; self.dist.len()];
        for (v, p) in self.parent.iter().enumerate() {
            if self.reachable(v) {
                if let Some(p) = p {
                    is_parent[*p] = true;
                }
            }
        }
        (0..self.dist.len())
            .filter(|&v| self.reachable(v) && !is_parent[v])
            .collect()
    }
}

/// Dijkstra over `adj` (undirected or directed adjacency list) from `root`.
/// Equal-distance pops resolve in ascending vertex id; relaxation is strict,
/// so the resulting tree is unique for a given input.
pub fn dijkstra(adj: &[Vec<(usize, f64)>], root: usize) -> ShortestPathTree {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(HeapEntry { dist: 0.0, vertex: root });
    while let Some(HeapEntry { dist: d, vertex: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            debug_assert!(w >= 0.0, "negative edge weight");
            let cand = d + w;
            if cand < dist[v] {
                dist[v] = cand;
                parent[v] = Some(u);
                heap.push(HeapEntry { dist: cand, vertex: v });
            }
        }
    }
    ShortestPathTree { root, dist, parent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::bellman_ford;
    use rand::Rng;

    #[test]
    fn single_vertex() {
        let tree = dijkstra(&[vec![]], 0);
        assert_eq!(tree.dist[0], 0.0);
        assert_eq!(tree.path(0), vec![0]);
        assert_eq!(tree.leaves(), vec![0]);
    }

    #[test]
    fn triangle_two_hops_beat_direct() {
        // weights: 0-1 = 1, 1-2 = 1, 0-2 = 3
        let adj = vec![
            vec![(1, 1.0), (2, 3.0)],
            vec![(0, 1.0), (2, 1.0)],
            vec![(0, 3.0), (1, 1.0)],
        ];
        let tree = dijkstra(&adj, 0);
        assert_eq!(tree.dist[2], 2.0);
        assert_eq!(tree.path(2), vec![0, 1, 2]);
    }

    /// Random connected graph with dyadic-rational weights so path sums are
    /// exact regardless of accumulation order.
    pub(crate) fn random_graph(n: usize, extra_edges: usize, seed: u64) -> Vec<Vec<(usize, f64)>> {
        let mut rng = crate::seeded_rng(seed, crate::stream::TEST, 0);
        let mut adj = vec![Vec::new(); n];
        let add = |adj: &mut Vec<Vec<(usize, f64)>>, u: usize, v: usize, w: f64| {
            adj[u].push((v, w));
            adj[v].push((u, w));
        };
        for v in 1..n {
            let u = rng.random_range(0..v);
            let w = (1 + rng.random_range(0..64)) as f64 / 8.0;
            add(&mut adj, u, v, w);
        }
        for _ in 0..extra_edges {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v {
                let w = (1 + rng.random_range(0..64)) as f64 / 8.0;
                add(&mut adj, u, v, w);
            }
        }
        adj
    }

    #[test]
    fn matches_bellman_ford_exactly() {
        for seed in 0..20u64 {
            let n = 50;
            let adj = random_graph(n, 120, seed);
            let tree = dijkstra(&adj, 0);
            let oracle = bellman_ford(&adj, 0);
            for v in 0..n {
                assert_eq!(tree.dist[v], oracle[v], "seed {seed} vertex {v}");
            }
        }
    }

    #[test]
    fn leaves_partition() {
        let adj = random_graph(30, 40, 3);
        let tree = dijkstra(&adj, 0);
        let leaves = tree.leaves();
        // no leaf is a parent of any vertex
        for v in 0..30 {
            if let Some(p) = tree.parent[v] {
                assert!(!leaves.contains(&p));
            }
        }
    }
}

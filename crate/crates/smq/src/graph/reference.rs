//! Plain sequential reference algorithms. These share nothing with the
//! scheduler-driven implementations except the graph type, and serve as the
//! correctness oracles for them.

use super::Graph;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

/// Distance value for unreachable vertices.
pub const UNREACHED: u64 = u64::MAX;

/// Textbook Dijkstra with a binary heap.
pub fn dijkstra(graph: &Graph, source: usize) -> Vec<u64> {
    let mut dist = vec![UNREACHED; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0u64, source as u32)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (u, w) in graph.edges(v as usize) {
            let nd = d + w as u64;
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    dist
}

/// Breadth-first levels (every edge counts 1).
pub fn bfs_levels(graph: &Graph, source: usize) -> Vec<u64> {
    let mut level = vec![UNREACHED; graph.vertex_count()];
    let mut queue = VecDeque::new();
    level[source] = 0;
    queue.push_back(source as u32);
    while let Some(v) = queue.pop_front() {
        let next = level[v as usize] + 1;
        for (u, _) in graph.edges(v as usize) {
            if level[u as usize] == UNREACHED {
                level[u as usize] = next;
                queue.push_back(u);
            }
        }
    }
    level
}

/// Result of a spanning-forest computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForestSummary {
    pub total_weight: u64,
    pub edges_used: usize,
    pub components: usize,
}

/// Kruskal over the graph's unique undirected edges, ties broken by edge id
/// so the chosen forest is unique.
pub fn kruskal(graph: &Graph) -> ForestSummary {
    let edges = graph.undirected_edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_unstable_by_key(|&i| (edges[i].2, i));
    let mut parent: Vec<u32> = (0..graph.vertex_count() as u32).collect();
    fn find(parent: &mut [u32], mut v: u32) -> u32 {
        while parent[v as usize] != v {
            parent[v as usize] = parent[parent[v as usize] as usize];
            v = parent[v as usize];
        }
        v
    }
    let mut total = 0u64;
    let mut used = 0usize;
    for i in order {
        let (a, b, w) = edges[i];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra as usize] = rb;
            total += w as u64;
            used += 1;
        }
    }
    ForestSummary {
        total_weight: total,
        edges_used: used,
        components: graph.vertex_count() - used,
    }
}

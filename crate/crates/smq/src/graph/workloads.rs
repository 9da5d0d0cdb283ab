//! The scheduler-driven graph algorithms.
//!
//! Every workload is a bag of prioritized tasks processed by worker threads:
//! a task is popped, checked for staleness (wasted work), and may relax
//! state and spawn follow-up tasks. Algorithm outputs are independent of the
//! scheduler and thread count; only the amount of wasted work varies.

use super::reference::UNREACHED;
use super::{Graph, GraphError};
use crate::task::Task;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Mutex;

/// One prioritized task-processing step; follow-up tasks go into `out`.
///
/// `useful_total`, read after a run, counts the pops whose effect survived
/// into the final state — one per reached vertex for the path algorithms,
/// one per union for the spanning forest. Everything else a scheduler popped
/// (stale distances, superseded relaxations, lock conflicts, finished
/// components) was wasted work, so `executed / useful_total` measures how
/// much the scheduler's ordering cost on top of the algorithmic minimum.
pub trait Workload: Sync {
    fn process(&self, task: Task, out: &mut Vec<Task>);

    fn useful_total(&self) -> u64;
}

fn fetch_min(cell: &AtomicU64, value: u64) -> bool {
    let mut current = cell.load(Ordering::Relaxed);
    while value < current {
        match cell.compare_exchange_weak(current, value, Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return true,
            Err(now) => current = now,
        }
    }
    false
}

/// Priority-relaxation shortest paths: task key is a tentative distance,
/// payload the vertex. A popped task whose distance is worse than the
/// current best for its vertex is wasted. With `unit_weights` every edge
/// counts 1, which turns the same machinery into breadth-first search.
pub struct ShortestPaths<'g> {
    graph: &'g Graph,
    unit_weights: bool,
    dist: Vec<AtomicU64>,
}

impl<'g> ShortestPaths<'g> {
    pub fn new(graph: &'g Graph, source: usize, unit_weights: bool) -> Self {
        let dist: Vec<AtomicU64> = (0..graph.vertex_count())
            .map(|_| AtomicU64::new(UNREACHED))
            .collect();
        dist[source].store(0, Ordering::Relaxed);
        ShortestPaths {
            graph,
            unit_weights,
            dist,
        }
    }

    pub fn initial_tasks(source: usize) -> Vec<Task> {
        vec![Task::new(0, source as u64)]
    }

    pub fn into_distances(self) -> Vec<u64> {
        self.dist.into_iter().map(AtomicU64::into_inner).collect()
    }
}

impl Workload for ShortestPaths<'_> {
    fn process(&self, task: Task, out: &mut Vec<Task>) {
        let v = task.payload as usize;
        let d = task.key();
        if d > self.dist[v].load(Ordering::Relaxed) {
            return; // stale pop: wasted work
        }
        for (u, w) in self.graph.edges(v) {
            let w = if self.unit_weights { 1 } else { w as u64 };
            let nd = d + w;
            if fetch_min(&self.dist[u as usize], nd) {
                out.push(Task::new(nd, u as u64));
            }
        }
    }

    /// One settled pop per reached vertex carries the final state.
    fn useful_total(&self) -> u64 {
        self.dist
            .iter()
            .filter(|d| d.load(Ordering::Relaxed) != UNREACHED)
            .count() as u64
    }
}

/// Point-to-point search guided by a distance-to-target estimate. The task
/// key is `g(v) + h(v)`; `h` is an equirectangular straight-line estimate
/// scaled by the smallest weight-per-length ratio over all edges, so it
/// never overestimates the remaining path weight and pruning at the current
/// best target distance is safe.
pub struct AStar<'g> {
    graph: &'g Graph,
    heuristic: Vec<u64>,
    g_value: Vec<AtomicU64>,
    best: AtomicU64,
    target: usize,
}

/// Equirectangular distance in coordinate units, with a fixed reference
/// latitude so the estimate is a true metric.
fn equirect(a: (i32, i32), b: (i32, i32), cos_ref_lat: f64) -> f64 {
    let x = (a.0 as f64 - b.0 as f64) * cos_ref_lat;
    let y = a.1 as f64 - b.1 as f64;
    (x * x + y * y).sqrt()
}

impl<'g> AStar<'g> {
    pub fn new(graph: &'g Graph, source: usize, target: usize) -> Result<Self, GraphError> {
        let coords = graph.coords().ok_or(GraphError::MissingCoordinates)?;
        let mean_lat = coords.iter().map(|c| c.1 as f64).sum::<f64>() / coords.len().max(1) as f64;
        let cos_ref_lat = (mean_lat * 1e-6).to_radians().cos();
        // Admissibility scale: no edge is cheaper per unit of straight-line
        // length than this, so `scale * distance` lower-bounds every path.
        let mut scale = f64::INFINITY;
        for v in 0..graph.vertex_count() {
            for (u, w) in graph.edges(v) {
                let len = equirect(coords[v], coords[u as usize], cos_ref_lat);
                if len > 0.0 {
                    scale = scale.min(w as f64 / len);
                }
            }
        }
        if !scale.is_finite() {
            scale = 0.0; // no usable geometry: the estimate degenerates to 0
        }
        let heuristic = (0..graph.vertex_count())
            .map(|v| (equirect(coords[v], coords[target], cos_ref_lat) * scale).floor() as u64)
            .collect();
        let g_value: Vec<AtomicU64> = (0..graph.vertex_count())
            .map(|_| AtomicU64::new(UNREACHED))
            .collect();
        g_value[source].store(0, Ordering::Relaxed);
        Ok(AStar {
            graph,
            heuristic,
            g_value,
            best: AtomicU64::new(UNREACHED),
            target,
        })
    }

    pub fn initial_tasks(&self, source: usize) -> Vec<Task> {
        if source == self.target {
            self.best.store(0, Ordering::Relaxed);
        }
        vec![Task::new(self.heuristic[source], source as u64)]
    }

    /// Best source-to-target distance found; the sentinel when unreachable.
    pub fn result(&self) -> u64 {
        self.best.load(Ordering::Relaxed)
    }
}

impl Workload for AStar<'_> {
    fn process(&self, task: Task, out: &mut Vec<Task>) {
        let v = task.payload as usize;
        let f = task.key();
        if f >= self.best.load(Ordering::Relaxed) {
            return; // cannot improve the target distance: wasted
        }
        let g = f - self.heuristic[v];
        if g > self.g_value[v].load(Ordering::Relaxed) {
            return; // stale pop: wasted
        }
        for (u, w) in self.graph.edges(v) {
            let ng = g + w as u64;
            if fetch_min(&self.g_value[u as usize], ng) {
                if u as usize == self.target {
                    fetch_min(&self.best, ng);
                }
                out.push(Task::new(ng + self.heuristic[u as usize], u as u64));
            }
        }
    }

    fn useful_total(&self) -> u64 {
        self.g_value
            .iter()
            .filter(|g| g.load(Ordering::Relaxed) != UNREACHED)
            .count() as u64
    }
}

struct Component {
    /// Ids into the shared undirected edge list; pruned lazily.
    edges: Vec<u32>,
}

/// Concurrent Boruvka: tasks are contraction attempts keyed by the degree
/// (candidate edge count) of the component, components live in a
/// compare-and-swap union-find, and each component's candidate edges sit
/// behind a mutex taken in root-id order. Conflicts re-insert the task and
/// count as wasted work.
pub struct Boruvka {
    edges: Vec<(u32, u32, u32)>,
    parent: Vec<AtomicU32>,
    components: Vec<Mutex<Component>>,
    total_weight: AtomicU64,
    edges_used: AtomicU64,
}

impl Boruvka {
    pub fn new(graph: &Graph) -> Self {
        let edges = graph.undirected_edges();
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); graph.vertex_count()];
        for (id, &(a, b, _)) in edges.iter().enumerate() {
            incident[a as usize].push(id as u32);
            incident[b as usize].push(id as u32);
        }
        Boruvka {
            edges,
            parent: (0..graph.vertex_count() as u32)
                .map(AtomicU32::new)
                .collect(),
            components: incident
                .into_iter()
                .map(|edges| Mutex::new(Component { edges }))
                .collect(),
            total_weight: AtomicU64::new(0),
            edges_used: AtomicU64::new(0),
        }
    }

    pub fn initial_tasks(&self) -> Vec<Task> {
        (0..self.components.len())
            .map(|v| {
                let deg = self.components[v].lock().unwrap().edges.len();
                Task::new(deg as u64, v as u64)
            })
            .collect()
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight.load(Ordering::Relaxed)
    }

    pub fn edges_used(&self) -> u64 {
        self.edges_used.load(Ordering::Relaxed)
    }

    pub fn components_left(&self) -> usize {
        self.parent.len() - self.edges_used.load(Ordering::Relaxed) as usize
    }

    fn find(&self, mut v: u32) -> u32 {
        loop {
            let p = self.parent[v as usize].load(Ordering::Acquire);
            if p == v {
                return v;
            }
            let gp = self.parent[p as usize].load(Ordering::Acquire);
            if gp != p {
                // Path halving; losing the race is fine.
                let _ = self.parent[v as usize].compare_exchange_weak(
                    p,
                    gp,
                    Ordering::Relaxed,
                    Ordering::Relaxed,
                );
            }
            v = p;
        }
    }

    /// Minimum external edge of the locked root's component, pruning
    /// internal edges. Ties break on edge id, making the chosen forest
    /// unique for a fixed input.
    fn min_external(&self, comp: &mut Component, root: u32) -> Option<(u32, u32)> {
        let mut best: Option<(u32, u32, u32)> = None; // (weight, id, other root)
        let mut i = 0;
        while i < comp.edges.len() {
            let id = comp.edges[i];
            let (a, b, w) = self.edges[id as usize];
            let ra = self.find(a);
            let rb = self.find(b);
            if ra == rb {
                comp.edges.swap_remove(i);
                continue;
            }
            let other = if ra == root { rb } else { ra };
            match best {
                Some((bw, bid, _)) if (bw, bid) <= (w, id) => {}
                _ => best = Some((w, id, other)),
            }
            i += 1;
        }
        best.map(|(_, id, other)| (id, other))
    }

    /// Union under both held component locks. The heavier edge list keeps
    /// its root so list moves stay cheap.
    fn merge(
        &self,
        r: u32,
        s: u32,
        edge_id: u32,
        comp_r: &mut Component,
        comp_s: &mut Component,
        out: &mut Vec<Task>,
    ) {
        let (_, _, w) = self.edges[edge_id as usize];
        let (winner, win_comp, lose_comp) = if comp_r.edges.len() >= comp_s.edges.len() {
            (r, comp_r, comp_s)
        } else {
            (s, comp_s, comp_r)
        };
        let loser = if winner == r { s } else { r };
        win_comp.edges.append(&mut lose_comp.edges);
        self.parent[loser as usize].store(winner, Ordering::Release);
        self.total_weight.fetch_add(w as u64, Ordering::Relaxed);
        self.edges_used.fetch_add(1, Ordering::Relaxed);
        out.push(Task::new(win_comp.edges.len() as u64, winner as u64));
    }

    fn roots_of_edge(&self, edge_id: u32) -> (u32, u32) {
        let (a, b, _) = self.edges[edge_id as usize];
        (self.find(a), self.find(b))
    }
}

impl Workload for Boruvka {
    fn process(&self, task: Task, out: &mut Vec<Task>) {
        let r = self.find(task.payload as u32);
        let Ok(mut comp_r) = self.components[r as usize].try_lock() else {
            out.push(task); // contended root: retry later
            return;
        };
        if self.find(r) != r {
            return; // absorbed while we waited; the winner has a task
        }
        let Some((edge_id, s)) = self.min_external(&mut comp_r, r) else {
            return; // component finished
        };
        if s > r {
            // Blocking acquisitions always go up in root id, so no cycles.
            let mut comp_s = self.components[s as usize].lock().unwrap();
            let roots = self.roots_of_edge(edge_id);
            if self.find(s) != s || (roots != (r, s) && roots != (s, r)) {
                let degree = comp_r.edges.len() as u64;
                drop(comp_s);
                drop(comp_r);
                out.push(Task::new(degree, r as u64));
                return;
            }
            self.merge(r, s, edge_id, &mut comp_r, &mut comp_s, out);
        } else {
            // Must take `s` first: release, relock in id order, revalidate.
            drop(comp_r);
            let mut comp_s = self.components[s as usize].lock().unwrap();
            let mut comp_r = self.components[r as usize].lock().unwrap();
            let roots = self.roots_of_edge(edge_id);
            if self.find(r) != r || self.find(s) != s || (roots != (r, s) && roots != (s, r)) {
                drop(comp_r);
                drop(comp_s);
                out.push(task);
                return;
            }
            self.merge(r, s, edge_id, &mut comp_r, &mut comp_s, out);
        }
    }

    /// Useful pops are exactly the ones that performed a union.
    fn useful_total(&self) -> u64 {
        self.edges_used()
    }
}

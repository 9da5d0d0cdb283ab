//! Graph ingestion and the scheduler-driven benchmark workloads.

pub mod bench;
pub mod dimacs;
pub mod gen;
pub mod reference;
pub mod workloads;

pub use bench::{run_once, Algo, AlgoOutput, BenchResult};
pub use gen::GenSpec;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("arc count mismatch: header declares {declared}, file has {found}")]
    ArcCountMismatch { declared: usize, found: usize },
    #[error("file contains no problem line")]
    MissingHeader,
    #[error("vertex {vertex} out of range 1..={max}")]
    VertexOutOfRange { vertex: usize, max: usize },
    #[error("graph size must be positive")]
    ZeroSize,
    #[error("coordinate table has {coords} entries for {vertices} vertices")]
    CoordCountMismatch { coords: usize, vertices: usize },
    #[error("operation requires vertex coordinates")]
    MissingCoordinates,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Directed graph in compressed adjacency form with non-negative 32-bit
/// weights and optional vertex coordinates (longitude, latitude in 1e-6
/// degrees).
#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<u32>,
    targets: Vec<u32>,
    weights: Vec<u32>,
    coords: Option<Vec<(i32, i32)>>,
}

impl Graph {
    /// Builds the compressed form from arc triples `(from, to, weight)`.
    pub fn from_arcs(vertices: usize, arcs: &[(u32, u32, u32)]) -> Graph {
        let mut offsets = vec![0u32; vertices + 1];
        for &(from, _, _) in arcs {
            offsets[from as usize + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut targets = vec![0u32; arcs.len()];
        let mut weights = vec![0u32; arcs.len()];
        let mut cursor = offsets.clone();
        for &(from, to, w) in arcs {
            let at = cursor[from as usize] as usize;
            targets[at] = to;
            weights[at] = w;
            cursor[from as usize] += 1;
        }
        Graph {
            offsets,
            targets,
            weights,
            coords: None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    /// Outgoing `(target, weight)` pairs of `v`.
    pub fn edges(&self, v: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
        let lo = self.offsets[v] as usize;
        let hi = self.offsets[v + 1] as usize;
        self.targets[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    pub fn coords(&self) -> Option<&[(i32, i32)]> {
        self.coords.as_deref()
    }

    pub fn set_coords(&mut self, coords: Vec<(i32, i32)>) -> Result<(), GraphError> {
        if coords.len() != self.vertex_count() {
            return Err(GraphError::CoordCountMismatch {
                coords: coords.len(),
                vertices: self.vertex_count(),
            });
        }
        self.coords = Some(coords);
        Ok(())
    }

    /// Unique undirected edges `(min, max, weight)`, self-loops dropped and
    /// exact duplicates (including the reverse arcs of symmetric graphs)
    /// collapsed. Edge ids are indices into this list, giving every
    /// spanning-tree computation the same tie-breaking order.
    pub fn undirected_edges(&self) -> Vec<(u32, u32, u32)> {
        let mut edges: Vec<(u32, u32, u32)> = Vec::with_capacity(self.arc_count() / 2);
        for v in 0..self.vertex_count() {
            for (u, w) in self.edges(v) {
                let a = (v as u32).min(u);
                let b = (v as u32).max(u);
                if a != b {
                    edges.push((a, b, w));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

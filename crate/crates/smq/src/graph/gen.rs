//! Deterministic graph generators for desk-scale benchmarking.

use super::{Graph, GraphError};
use crate::rng::RngStream;

/// What to generate. Grid and road-like graphs carry planar coordinates and
/// are connected by construction; `Gnm` gives no such guarantees (unreached
/// vertices simply keep the unreachable sentinel in the algorithms).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenSpec {
    Grid { width: usize, height: usize },
    Gnm { vertices: usize, edges: usize },
    RoadLike { width: usize, height: usize },
}

/// Spacing of generated coordinates in 1e-6 degree units.
const COORD_STEP: i32 = 1000;

/// Generates a graph with weights drawn uniformly from
/// `weight_lo..=weight_hi` (road-like graphs draw distance-correlated
/// weights inside the same range). Deterministic for a fixed seed.
pub fn generate(
    spec: GenSpec,
    weight_lo: u32,
    weight_hi: u32,
    seed: u64,
) -> Result<Graph, GraphError> {
    assert!(weight_lo <= weight_hi);
    let mut rng = RngStream::new(seed, 0x6e67);
    let weight_span = (weight_hi - weight_lo) as usize + 1;
    match spec {
        GenSpec::Grid { width, height } => {
            if width == 0 || height == 0 {
                return Err(GraphError::ZeroSize);
            }
            let v = width * height;
            let mut arcs = Vec::new();
            let id = |x: usize, y: usize| (y * width + x) as u32;
            for y in 0..height {
                for x in 0..width {
                    let w_right = (weight_lo as usize + rng.next_index(weight_span)) as u32;
                    if x + 1 < width {
                        arcs.push((id(x, y), id(x + 1, y), w_right));
                        arcs.push((id(x + 1, y), id(x, y), w_right));
                    }
                    let w_down = (weight_lo as usize + rng.next_index(weight_span)) as u32;
                    if y + 1 < height {
                        arcs.push((id(x, y), id(x, y + 1), w_down));
                        arcs.push((id(x, y + 1), id(x, y), w_down));
                    }
                }
            }
            let mut g = Graph::from_arcs(v, &arcs);
            let coords = (0..v)
                .map(|i| {
                    let x = (i % width) as i32;
                    let y = (i / width) as i32;
                    (x * COORD_STEP, y * COORD_STEP)
                })
                .collect();
            g.set_coords(coords)?;
            Ok(g)
        }
        GenSpec::Gnm { vertices, edges } => {
            if vertices == 0 {
                return Err(GraphError::ZeroSize);
            }
            let mut arcs = Vec::with_capacity(edges * 2);
            for _ in 0..edges {
                let a = rng.next_index(vertices) as u32;
                let mut b = rng.next_index(vertices) as u32;
                if vertices > 1 {
                    while b == a {
                        b = rng.next_index(vertices) as u32;
                    }
                }
                let w = (weight_lo as usize + rng.next_index(weight_span)) as u32;
                arcs.push((a, b, w));
                arcs.push((b, a, w));
            }
            Ok(Graph::from_arcs(vertices, &arcs))
        }
        GenSpec::RoadLike { width, height } => {
            if width == 0 || height == 0 {
                return Err(GraphError::ZeroSize);
            }
            let v = width * height;
            // Jittered grid positions, weights proportional to geometric
            // length so the distance heuristic has something to work with.
            let jitter = COORD_STEP / 3;
            let coords: Vec<(i32, i32)> = (0..v)
                .map(|i| {
                    let x = (i % width) as i32 * COORD_STEP;
                    let y = (i / width) as i32 * COORD_STEP;
                    let dx = rng.next_index(2 * jitter as usize) as i32 - jitter;
                    let dy = rng.next_index(2 * jitter as usize) as i32 - jitter;
                    (x + dx, y + dy)
                })
                .collect();
            let span = (weight_hi - weight_lo).max(1) as f64;
            // The longest possible jittered edge is sqrt(2) grid steps plus
            // both jitters; map length linearly into the weight range.
            let max_len = COORD_STEP as f64 * 2.0;
            let mut arcs = Vec::new();
            let id = |x: usize, y: usize| y * width + x;
            let mut connect = |a: usize, b: usize, rng: &mut RngStream| {
                let (ax, ay) = coords[a];
                let (bx, by) = coords[b];
                let len = (((ax - bx) as f64).powi(2) + ((ay - by) as f64).powi(2)).sqrt();
                let noise = 0.9 + 0.2 * rng.next_f64();
                let w = weight_lo + ((len * noise / max_len) * span).min(span) as u32;
                arcs.push((a as u32, b as u32, w));
                arcs.push((b as u32, a as u32, w));
            };
            for y in 0..height {
                for x in 0..width {
                    if x + 1 < width {
                        connect(id(x, y), id(x + 1, y), &mut rng);
                    }
                    if y + 1 < height {
                        connect(id(x, y), id(x, y + 1), &mut rng);
                    }
                }
            }
            let mut g = Graph::from_arcs(v, &arcs);
            g.set_coords(coords)?;
            Ok(g)
        }
    }
}

/// Parses a generator spec string: `grid:WxH`, `gnm:V:E`, `road:WxH`.
pub fn parse_spec(text: &str) -> Option<GenSpec> {
    let (kind, rest) = text.split_once(':')?;
    match kind {
        "grid" | "road" => {
            let (w, h) = rest.split_once('x')?;
            let width = w.parse().ok()?;
            let height = h.parse().ok()?;
            Some(if kind == "grid" {
                GenSpec::Grid { width, height }
            } else {
                GenSpec::RoadLike { width, height }
            })
        }
        "gnm" => {
            let (v, e) = rest.split_once(':')?;
            Some(GenSpec::Gnm {
                vertices: v.parse().ok()?,
                edges: e.parse().ok()?,
            })
        }
        _ => None,
    }
}

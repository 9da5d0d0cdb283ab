//! Node-aware weighted queue sampling.
//!
//! Threads preferentially pick queues that live on their own node: a queue on
//! the caller's node has weight 1, every remote queue has weight `1/K`. The
//! layout here is logical, so the scheme is testable on any machine; pinning
//! threads to sockets is up to the embedder.

use crate::rng::RngStream;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("layout needs at least one node with at least one thread")]
    Empty,
    #[error("node {0} has zero threads")]
    EmptyNode(usize),
    #[error("weight divisor K must be at least 1, got {0}")]
    BadK(f64),
}

/// Assignment of threads (and therefore queues) to logical nodes. Queues of
/// one node occupy a contiguous index block; node `i` owns `threads[i] * c`
/// queues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLayout {
    threads_per_node: Vec<usize>,
    thread_to_node: Vec<usize>,
}

impl NodeLayout {
    pub fn new(threads_per_node: Vec<usize>) -> Result<Self, LayoutError> {
        if threads_per_node.is_empty() {
            return Err(LayoutError::Empty);
        }
        let mut thread_to_node = Vec::new();
        for (node, &t) in threads_per_node.iter().enumerate() {
            if t == 0 {
                return Err(LayoutError::EmptyNode(node));
            }
            thread_to_node.extend(std::iter::repeat_n(node, t));
        }
        Ok(NodeLayout {
            threads_per_node,
            thread_to_node,
        })
    }

    /// Everything on one node; weighted sampling degenerates to uniform.
    pub fn single_node(threads: usize) -> Self {
        NodeLayout::new(vec![threads]).expect("threads >= 1")
    }

    /// Splits `threads` as evenly as possible over `nodes` logical nodes.
    pub fn split_even(threads: usize, nodes: usize) -> Result<Self, LayoutError> {
        if nodes == 0 || threads < nodes {
            return Err(LayoutError::Empty);
        }
        let base = threads / nodes;
        let extra = threads % nodes;
        NodeLayout::new((0..nodes).map(|i| base + usize::from(i < extra)).collect())
    }

    pub fn nodes(&self) -> usize {
        self.threads_per_node.len()
    }

    pub fn total_threads(&self) -> usize {
        self.thread_to_node.len()
    }

    pub fn threads_on(&self, node: usize) -> usize {
        self.threads_per_node[node]
    }

    pub fn node_of_thread(&self, thread: usize) -> usize {
        self.thread_to_node[thread]
    }
}

/// O(1) weighted draw over all queues for a caller on a given node: local
/// queues carry weight 1, remote ones `1/K`. Since the weights take only two
/// values, the draw first picks the local or remote segment by its total
/// mass, then picks uniformly inside the segment.
#[derive(Clone, Debug)]
pub struct WeightedSampler {
    layout: NodeLayout,
    queues_per_thread: usize,
    k: f64,
    /// Per node: (first local queue index, local queue count, local mass / total mass).
    per_node: Vec<(usize, usize, f64)>,
    total_queues: usize,
}

impl WeightedSampler {
    /// `queues_per_thread` is the multiplier C (1 for per-thread queues as in
    /// the stealing scheduler).
    pub fn new(layout: NodeLayout, queues_per_thread: usize, k: f64) -> Result<Self, LayoutError> {
        if !k.is_finite() || k < 1.0 {
            return Err(LayoutError::BadK(k));
        }
        let total_queues = layout.total_threads() * queues_per_thread;
        let mut per_node = Vec::with_capacity(layout.nodes());
        let mut start = 0usize;
        for node in 0..layout.nodes() {
            let local = layout.threads_on(node) * queues_per_thread;
            let remote = total_queues - local;
            let w = local as f64 + remote as f64 / k;
            per_node.push((start, local, local as f64 / w));
            start += local;
        }
        Ok(WeightedSampler {
            layout,
            queues_per_thread,
            k,
            per_node,
            total_queues,
        })
    }

    pub fn total_queues(&self) -> usize {
        self.total_queues
    }

    pub fn node_of_thread(&self, thread: usize) -> usize {
        self.layout.node_of_thread(thread)
    }

    /// Queue index of a weighted draw made by `thread`.
    pub fn sample(&self, thread: usize, rng: &mut RngStream) -> usize {
        let node = self.layout.node_of_thread(thread);
        let (start, local, p_local) = self.per_node[node];
        if local == self.total_queues || rng.next_f64() < p_local {
            start + rng.next_index(local)
        } else {
            // Uniform over the remote block, skipping the local one.
            let r = rng.next_index(self.total_queues - local);
            if r < start {
                r
            } else {
                r + local
            }
        }
    }

    /// True when `queue` lives on the caller's node.
    pub fn is_local(&self, thread: usize, queue: usize) -> bool {
        let (start, local, _) = self.per_node[self.layout.node_of_thread(thread)];
        (start..start + local).contains(&queue)
    }

    /// Expected number of same-node choices per round of one draw by every
    /// thread: `E = sum_i T_i^2 * C / W_i`.
    pub fn expected_internal_ratio(&self) -> f64 {
        expected_internal_ratio(&self.layout, self.queues_per_thread, self.k)
    }
}

/// `E = sum_i T_i^2 * C / W_i` with `W_i = T_i*C + (m - T_i*C)/K`; divide by
/// the thread count for the per-draw local-choice rate.
pub fn expected_internal_ratio(layout: &NodeLayout, queues_per_thread: usize, k: f64) -> f64 {
    let c = queues_per_thread as f64;
    let m = (layout.total_threads() * queues_per_thread) as f64;
    (0..layout.nodes())
        .map(|i| {
            let t_i = layout.threads_on(i) as f64;
            let w_i = t_i * c + (m - t_i * c) / k;
            t_i * t_i * c / w_i
        })
        .sum()
}

/// Scales the weight divisor linearly with the thread count so the internal
/// ratio stays roughly constant: `K(T) = base_k * T / base_t`.
pub fn scale_k(threads: usize, base_k: f64, base_threads: usize) -> f64 {
    assert!(base_k > 0.0 && base_threads > 0);
    base_k * threads as f64 / base_threads as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_layout() -> NodeLayout {
        // 2 nodes x 2 threads, C = 4, K = 2: P(local) = 8/12 = 2/3.
        NodeLayout::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn layout_validation() {
        assert_eq!(NodeLayout::new(vec![]), Err(LayoutError::Empty));
        assert_eq!(NodeLayout::new(vec![2, 0]), Err(LayoutError::EmptyNode(1)));
        let l = NodeLayout::new(vec![1, 3]).unwrap();
        assert_eq!(l.total_threads(), 4);
        assert_eq!(l.node_of_thread(0), 0);
        assert_eq!(l.node_of_thread(3), 1);
    }

    #[test]
    fn k_one_is_uniform() {
        let s = WeightedSampler::new(worked_layout(), 4, 1.0).unwrap();
        let m = s.total_queues();
        let mut rng = RngStream::new(5, 0);
        let draws = 200_000;
        let mut counts = vec![0u32; m];
        for _ in 0..draws {
            counts[s.sample(0, &mut rng)] += 1;
        }
        let expect = draws as f64 / m as f64;
        let sigma = (draws as f64 * (1.0 / m as f64) * (1.0 - 1.0 / m as f64)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - expect).abs() < 5.0 * sigma,
                "count {c} vs {expect}"
            );
        }
    }

    #[test]
    fn single_node_is_uniform_for_any_k() {
        let s = WeightedSampler::new(NodeLayout::single_node(4), 2, 64.0).unwrap();
        let mut rng = RngStream::new(6, 0);
        let mut counts = vec![0u32; s.total_queues()];
        for _ in 0..80_000 {
            counts[s.sample(2, &mut rng)] += 1;
        }
        let expect = 80_000.0 / 8.0;
        for &c in &counts {
            assert!((c as f64 - expect).abs() < 5.0 * (expect * (1.0 - 1.0 / 8.0)).sqrt());
        }
    }

    #[test]
    fn worked_local_probability() {
        // Exact formula T_i*C/W_i = 2/3 for the worked layout.
        let s = WeightedSampler::new(worked_layout(), 4, 2.0).unwrap();
        let mut rng = RngStream::new(7, 0);
        let draws = 1_000_000u32;
        let local = (0..draws)
            .filter(|_| s.is_local(0, s.sample(0, &mut rng)))
            .count() as f64;
        let freq = local / draws as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn worked_expected_internal_ratio() {
        // E = 2 * (4 * 4 / 12) = 8/3 exactly.
        let e = expected_internal_ratio(&worked_layout(), 4, 2.0);
        assert!((e - 8.0 / 3.0).abs() < 1e-12, "E {e}");
    }

    #[test]
    fn k_one_ratio_collapses_to_uniform_rate() {
        // K = 1: E = sum T_i^2 / T.
        let layout = NodeLayout::new(vec![1, 3]).unwrap();
        let e = expected_internal_ratio(&layout, 4, 1.0);
        assert!((e - (1.0 + 9.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn approximation_regime() {
        // Two equal nodes with K well above N: the exact E/T = K/(K+N-1)
        // sits close to the 1 - 1/K shorthand.
        let layout = NodeLayout::split_even(32, 2).unwrap();
        let e = expected_internal_ratio(&layout, 4, 8.0);
        let ratio = e / 32.0;
        assert!((ratio - 8.0 / 9.0).abs() < 1e-12, "exact ratio {ratio}");
        assert!((ratio - (1.0 - 1.0 / 8.0)).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn scale_k_is_linear() {
        assert_eq!(scale_k(128, 8.0, 128), 8.0);
        assert_eq!(scale_k(256, 8.0, 128), 16.0);
        assert_eq!(scale_k(64, 8.0, 128), 4.0);
    }

    #[test]
    fn sampler_matches_weights_chi_square() {
        // Empirical per-queue frequencies for an asymmetric layout.
        let layout = NodeLayout::new(vec![1, 3]).unwrap();
        let s = WeightedSampler::new(layout.clone(), 2, 4.0).unwrap();
        let m = s.total_queues();
        let caller = 0; // node 0, local block = queues 0..2
        let mut rng = RngStream::new(8, 0);
        let draws = 1_000_000usize;
        let mut counts = vec![0u64; m];
        for _ in 0..draws {
            counts[s.sample(caller, &mut rng)] += 1;
        }
        let local = 2.0;
        let w = local + (m as f64 - local) / 4.0;
        for (q, &c) in counts.iter().enumerate() {
            let weight = if q < 2 { 1.0 } else { 0.25 };
            let p = weight / w;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (c as f64 - draws as f64 * p).abs() < 5.0 * sigma,
                "queue {q}: {c} vs {}",
                draws as f64 * p
            );
        }
    }
}

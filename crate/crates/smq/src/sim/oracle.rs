//! Exact rank queries over the multiset of remaining labels.
//!
//! Labels are the integers `0..n` and only ever get removed, so a Fenwick
//! tree over presence bits answers "how many remaining labels are strictly
//! smaller" in O(log n).

pub struct RankOracle {
    tree: Vec<u32>,
    remaining: u64,
}

impl RankOracle {
    /// Oracle with every label in `0..n` present. O(n) build: with all
    /// counts 1, each node's range sum is just its range length.
    pub fn all_present(n: usize) -> Self {
        assert!(n < u32::MAX as usize);
        let mut tree = vec![0u32; n + 1];
        for (i, node) in tree.iter_mut().enumerate().skip(1) {
            *node = (i & i.wrapping_neg()) as u32;
        }
        RankOracle {
            tree,
            remaining: n as u64,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    /// Number of still-present labels strictly smaller than `label`.
    pub fn rank(&self, label: usize) -> u64 {
        let mut i = label; // prefix sum over labels 0..label
        let mut sum = 0u64;
        while i > 0 {
            sum += self.tree[i] as u64;
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Marks `label` removed. Must be present.
    pub fn remove(&mut self, label: usize) {
        let mut i = label + 1;
        while i < self.tree.len() {
            debug_assert!(self.tree[i] > 0);
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        self.remaining -= 1;
    }
}

//! Sequential d-ary min-heap, the building block of every queue here.
//!
//! Strictly single-threaded; callers provide the synchronization (a lock or
//! plain ownership).

use crate::task::Task;

/// Min-heap over [`Task`] keys with configurable arity (default 4).
#[derive(Clone, Debug)]
pub struct DaryHeap {
    arity: usize,
    items: Vec<Task>,
}

impl Default for DaryHeap {
    fn default() -> Self {
        Self::new()
    }
}

impl DaryHeap {
    pub const DEFAULT_ARITY: usize = 4;

    pub fn new() -> Self {
        Self::with_arity(Self::DEFAULT_ARITY)
    }

    pub fn with_arity(arity: usize) -> Self {
        assert!(arity >= 2, "heap arity must be at least 2");
        DaryHeap {
            arity,
            items: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, task: Task) {
        self.items.push(task);
        self.sift_up(self.items.len() - 1);
    }

    /// Removes and returns the minimum-key task, or `None` when empty.
    pub fn extract_top(&mut self) -> Option<Task> {
        if self.items.is_empty() {
            return None;
        }
        let top = self.items.swap_remove(0);
        if !self.items.is_empty() {
            self.sift_down(0);
        }
        Some(top)
    }

    /// Minimum key without removing it.
    pub fn peek_top(&self) -> Option<Task> {
        self.items.first().copied()
    }

    fn sift_up(&mut self, mut idx: usize) {
        while idx > 0 {
            let parent = (idx - 1) / self.arity;
            if self.items[idx].key() >= self.items[parent].key() {
                break;
            }
            self.items.swap(idx, parent);
            idx = parent;
        }
    }

    fn sift_down(&mut self, mut idx: usize) {
        let len = self.items.len();
        loop {
            let first = idx * self.arity + 1;
            if first >= len {
                break;
            }
            let mut min = first;
            let end = (first + self.arity).min(len);
            for child in first + 1..end {
                if self.items[child].key() < self.items[min].key() {
                    min = child;
                }
            }
            if self.items[min].key() >= self.items[idx].key() {
                break;
            }
            self.items.swap(idx, min);
            idx = min;
        }
    }
}

//! The task vocabulary shared by every scheduler in this crate.

use std::fmt;

/// Ordering key of a task. Smaller keys are higher priority and are meant to
/// be removed earlier; this matches SSSP where the key is a tentative
/// distance.
///
/// `u64::MAX` is reserved as the internal "no priority" sentinel of the
/// concurrent queues, so user keys must stay below it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Priority(pub u64);

impl Priority {
    /// Largest key usable by callers.
    pub const MAX_KEY: u64 = u64::MAX - 1;

    pub fn new(key: u64) -> Self {
        debug_assert!(key <= Self::MAX_KEY, "priority key {key} is reserved");
        Priority(key)
    }

    pub fn key(self) -> u64 {
        self.0
    }
}

impl fmt::Debug for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A schedulable unit: an ordering key plus an opaque payload (a vertex id,
/// a label index, whatever the workload needs). Immutable once created.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct Task {
    pub priority: Priority,
    pub payload: u64,
}

impl Task {
    pub fn new(key: u64, payload: u64) -> Self {
        Task {
            priority: Priority::new(key),
            payload,
        }
    }

    pub fn key(&self) -> u64 {
        self.priority.0
    }
}

//! The behavioral contract every scheduler variant implements, plus a
//! string-keyed factory for the benchmark harness.
//!
//! A scheduler is split into a shared core and one handle per thread. The
//! handle owns all thread-private state (buffers, sticky queue indices, the
//! random stream), so the owner paths need no synchronization at all; the
//! shared core holds the queues and a global pending-task counter used for
//! drain detection.
//!
//! Relaxed semantics: `delete` may return any previously inserted task, and
//! `None` from `delete` does not mean the scheduler is empty — check
//! [`SchedulerHandle::pending`] for that. No task is ever lost or duplicated:
//! after a full drain the multiset of returned tasks equals the multiset of
//! inserted ones.

use crate::config::{ConfigError, SchedulerConfig};
use crate::task::Task;
use std::sync::atomic::{AtomicU64, Ordering};

/// Per-thread view of a scheduler. A handle is created for a fixed thread id
/// and must stay on one thread at a time (it is `Send`, not `Sync`).
pub trait SchedulerHandle: Send {
    /// Makes `task` retrievable by some future `delete` on some handle.
    /// Always succeeds; buffering variants may defer visibility until a flush.
    fn insert(&mut self, task: Task);

    /// Inserts several tasks produced together. Variants with batching or
    /// sticky queues override this to amortize queue accesses.
    fn insert_batch(&mut self, tasks: &[Task]) {
        for &t in tasks {
            self.insert(t);
        }
    }

    /// Returns a previously inserted, not yet returned task, or `None`.
    /// `None` is a normal outcome and does not imply global emptiness.
    fn delete(&mut self) -> Option<Task>;

    /// Makes any privately buffered tasks visible to other threads. The
    /// harness calls this when a thread idles so a drain can finish.
    fn flush(&mut self) {}

    /// Tasks inserted and not yet returned, across all threads (buffered
    /// tasks included). Zero means a drain is complete.
    fn pending(&self) -> u64;

    /// Stable id of the thread this handle belongs to.
    fn thread_id(&self) -> usize;
}

/// Shared insert/return accounting. Incremented on insert, decremented when a
/// delete hands a task back to the caller.
#[derive(Debug, Default)]
pub struct PendingCounter(AtomicU64);

impl PendingCounter {
    pub fn new() -> Self {
        PendingCounter(AtomicU64::new(0))
    }

    pub fn inserted(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn returned(&self) {
        self.0.fetch_sub(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Acquire)
    }
}

/// The scheduler variants the harness knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerKind {
    /// One strict, globally ordered priority queue behind a lock.
    Seq,
    /// Classic multi-queue: random insert, two-choice delete.
    Mq,
    /// Multi-queue with insert and delete task batching.
    MqBatch,
    /// Multi-queue with sticky (temporally local) insert and delete queues.
    MqTl,
    /// Random enqueue, local dequeue.
    Reld,
    /// Stealing multi-queue.
    Smq,
    /// Stealing multi-queue with node-aware victim sampling.
    SmqNuma,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 7] = [
        SchedulerKind::Seq,
        SchedulerKind::Mq,
        SchedulerKind::MqBatch,
        SchedulerKind::MqTl,
        SchedulerKind::Reld,
        SchedulerKind::Smq,
        SchedulerKind::SmqNuma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Seq => "seq",
            SchedulerKind::Mq => "mq",
            SchedulerKind::MqBatch => "mq-batch",
            SchedulerKind::MqTl => "mq-tl",
            SchedulerKind::Reld => "reld",
            SchedulerKind::Smq => "smq",
            SchedulerKind::SmqNuma => "smq-numa",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds one handle per thread for the requested variant. Handle `i` belongs
/// to thread id `i`.
pub fn build_scheduler(
    kind: SchedulerKind,
    cfg: &SchedulerConfig,
) -> Result<Vec<Box<dyn SchedulerHandle>>, ConfigError> {
    use crate::mq::{DeletePolicy, InsertPolicy, MultiQueue};
    fn boxed<H: SchedulerHandle + 'static>(handles: Vec<H>) -> Vec<Box<dyn SchedulerHandle>> {
        handles
            .into_iter()
            .map(|h| Box::new(h) as Box<dyn SchedulerHandle>)
            .collect()
    }
    match kind {
        SchedulerKind::Seq => Ok(boxed(crate::seq::SeqScheduler::handles(cfg)?)),
        SchedulerKind::Mq => Ok(boxed(MultiQueue::handles(
            cfg,
            InsertPolicy::Direct,
            DeletePolicy::Direct,
        )?)),
        SchedulerKind::MqBatch => Ok(boxed(MultiQueue::handles(
            cfg,
            InsertPolicy::Batch,
            DeletePolicy::Batch,
        )?)),
        SchedulerKind::MqTl => Ok(boxed(MultiQueue::handles(
            cfg,
            InsertPolicy::Temporal,
            DeletePolicy::Temporal,
        )?)),
        SchedulerKind::Reld => Ok(boxed(crate::reld::Reld::handles(cfg)?)),
        SchedulerKind::Smq => Ok(boxed(crate::smq::Smq::handles(cfg, false)?)),
        SchedulerKind::SmqNuma => Ok(boxed(crate::smq::Smq::handles(cfg, true)?)),
    }
}

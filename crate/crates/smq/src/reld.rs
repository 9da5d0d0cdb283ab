//! Random enqueue, local dequeue: the cheapest baseline with any locality.
//!
//! One queue per thread. Inserts go to a uniformly random queue; a delete
//! only ever pops the caller's own queue and returns `None` when it is empty,
//! even if other queues hold work (the drain loop keeps polling, so nothing
//! is lost). This trades all ordering between threads for zero search cost.

use crate::config::{ConfigError, SchedulerConfig};
use crate::mq::{LockedQueue, TryPop};
use crate::rng::RngStream;
use crate::scheduler::{PendingCounter, SchedulerHandle};
use crate::task::Task;
use std::sync::Arc;

pub struct Reld {
    queues: Box<[LockedQueue]>,
    pending: PendingCounter,
}

impl Reld {
    pub fn handles(cfg: &SchedulerConfig) -> Result<Vec<ReldHandle>, ConfigError> {
        cfg.validate_common()?;
        let shared = Arc::new(Reld {
            queues: (0..cfg.threads).map(|_| LockedQueue::new()).collect(),
            pending: PendingCounter::new(),
        });
        Ok((0..cfg.threads)
            .map(|thread| ReldHandle {
                shared: shared.clone(),
                thread,
                rng: RngStream::new(cfg.rng_seed, thread as u64),
                scratch: Vec::new(),
            })
            .collect())
    }

    pub fn queue(&self, idx: usize) -> &LockedQueue {
        &self.queues[idx]
    }
}

pub struct ReldHandle {
    shared: Arc<Reld>,
    thread: usize,
    rng: RngStream,
    scratch: Vec<Task>,
}

impl ReldHandle {
    pub fn shared(&self) -> &Reld {
        &self.shared
    }
}

impl SchedulerHandle for ReldHandle {
    fn insert(&mut self, task: Task) {
        self.shared.pending.inserted(1);
        loop {
            let q = self.rng.next_index(self.shared.queues.len());
            if self.shared.queues[q].try_push(&[task]) {
                return;
            }
        }
    }

    fn delete(&mut self) -> Option<Task> {
        loop {
            self.scratch.clear();
            match self.shared.queues[self.thread].try_pop(1, &mut self.scratch) {
                // Only inserters ever hold our lock, and only briefly.
                TryPop::Busy => std::hint::spin_loop(),
                TryPop::Done(0) => return None,
                TryPop::Done(_) => {
                    self.shared.pending.returned();
                    return Some(self.scratch[0]);
                }
            }
        }
    }

    fn pending(&self) -> u64 {
        self.shared.pending.get()
    }

    fn thread_id(&self) -> usize {
        self.thread
    }
}

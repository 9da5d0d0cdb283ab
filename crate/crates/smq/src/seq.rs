//! Strict sequential baseline: one globally ordered heap behind a mutex.
//!
//! Every delete returns the true global minimum. This is the ordering anchor
//! the relaxed schedulers are compared against in the harness.

use crate::config::{ConfigError, SchedulerConfig};
use crate::heap::DaryHeap;
use crate::scheduler::{PendingCounter, SchedulerHandle};
use crate::task::Task;
use std::sync::{Arc, Mutex};

pub struct SeqScheduler {
    heap: Mutex<DaryHeap>,
    pending: PendingCounter,
}

impl SeqScheduler {
    pub fn handles(cfg: &SchedulerConfig) -> Result<Vec<SeqHandle>, ConfigError> {
        cfg.validate_common()?;
        let shared = Arc::new(SeqScheduler {
            heap: Mutex::new(DaryHeap::new()),
            pending: PendingCounter::new(),
        });
        Ok((0..cfg.threads)
            .map(|thread| SeqHandle {
                shared: shared.clone(),
                thread,
            })
            .collect())
    }
}

pub struct SeqHandle {
    shared: Arc<SeqScheduler>,
    thread: usize,
}

impl SchedulerHandle for SeqHandle {
    fn insert(&mut self, task: Task) {
        self.shared.pending.inserted(1);
        self.shared.heap.lock().unwrap().push(task);
    }

    fn delete(&mut self) -> Option<Task> {
        let got = self.shared.heap.lock().unwrap().extract_top();
        if got.is_some() {
            self.shared.pending.returned();
        }
        got
    }

    fn pending(&self) -> u64 {
        self.shared.pending.get()
    }

    fn thread_id(&self) -> usize {
        self.thread
    }
}

//! Relaxed concurrent priority scheduling.
//!
//! This crate implements the Multi-Queue family of relaxed priority
//! schedulers: `m` sequential priority queues share the load, inserts pick a
//! queue at random, and deletes compare two random tops and take the better
//! one. On top of the classic design it provides the task-batching and
//! temporal-locality optimizations, the random-enqueue/local-dequeue (RELD)
//! baseline, and the Stealing Multi-Queue (SMQ): one owner-private d-ary heap
//! per thread plus a lock-free stealing buffer guarded by a single
//! (epoch, stolen) word, with probabilistic batch stealing.
//!
//! A `delete` on any of these schedulers may return a task that is not the
//! global best, and may return nothing while tasks remain elsewhere. That is
//! the point: callers trade strict ordering for scalability and get
//! probabilistic rank guarantees instead.
//!
//! Two more subsystems support evaluation:
//!
//! * [`sim`] — a sequential balls-into-bins simulator with an exact rank
//!   oracle, plus the closed-form selection probabilities and the potential
//!   function used to study the rank behavior of these schedulers.
//! * [`graph`] — a benchmark harness running SSSP, BFS, A* and Boruvka MST on
//!   DIMACS or generated graphs, parameterized by any scheduler, reporting
//!   wall time and wasted work.

pub mod config;
pub mod graph;
pub mod heap;
pub mod mq;
pub mod numa;
pub mod reld;
pub mod rng;
pub mod scheduler;
pub mod seq;
pub mod sim;
pub mod smq;
pub mod task;

pub use config::SchedulerConfig;
pub use scheduler::{build_scheduler, SchedulerHandle, SchedulerKind};
pub use task::{Priority, Task};

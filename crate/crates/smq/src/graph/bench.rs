//! Running a workload on a scheduler and measuring it.
//!
//! Workers loop on `delete`; an idle worker flushes its buffers and exits
//! once the pending counter reaches zero *and* no worker is mid-task (a
//! worker holding a task may still insert follow-ups, so pending alone is
//! not a safe exit signal). A watchdog deadline fails the run if the drain
//! ever stops progressing.

use super::workloads::{AStar, Boruvka, ShortestPaths, Workload};
use super::{Graph, GraphError};
use crate::config::SchedulerConfig;
use crate::scheduler::{build_scheduler, SchedulerHandle, SchedulerKind};
use crate::task::Task;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Sssp,
    Bfs,
    Astar,
    Mst,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Sssp, Algo::Bfs, Algo::Astar, Algo::Mst];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Sssp => "sssp",
            Algo::Bfs => "bfs",
            Algo::Astar => "astar",
            Algo::Mst => "mst",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|a| a.name() == name)
    }
}

/// Per-run measurements. `checksum` is a function of the algorithm output
/// only, so it must agree across schedulers and thread counts.
#[derive(Clone, Debug)]
pub struct BenchResult {
    pub algo: String,
    pub scheduler: String,
    pub threads: usize,
    pub wall_seconds: f64,
    pub tasks_executed: u64,
    pub tasks_useful: u64,
    pub checksum: u64,
}

impl BenchResult {
    /// `tasks_executed / tasks_useful`, at least 1 in any meaningful run.
    pub fn work_increase(&self) -> f64 {
        self.tasks_executed as f64 / self.tasks_useful.max(1) as f64
    }
}

/// Algorithm output kept for oracle comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlgoOutput {
    Distances(Vec<u64>),
    Levels(Vec<u64>),
    PathLength(u64),
    Forest { weight: u64, edges_used: u64 },
}

pub fn fnv1a(values: impl IntoIterator<Item = u64>) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for v in values {
        for byte in v.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

struct DriveTotals {
    executed: u64,
    wall: Duration,
}

/// Runs every handle in its own thread until the task bag drains.
///
/// `outstanding` counts tasks that are queued in the scheduler or held by a
/// worker mid-processing. A held task's follow-ups are counted before the
/// task itself is retired, so the counter can only reach zero when no task
/// exists anywhere and none can appear — a stable exit signal readable in
/// one load.
fn drive<W: Workload>(
    workload: &W,
    handles: Vec<Box<dyn SchedulerHandle>>,
    initial: Vec<Task>,
    timeout: Duration,
) -> DriveTotals {
    let mut handles = handles;
    let outstanding = AtomicU64::new(initial.len() as u64);
    handles[0].insert_batch(&initial);
    let deadline = Instant::now() + timeout;
    let start = Instant::now();
    let mut executed = 0u64;
    std::thread::scope(|scope| {
        let mut joins = Vec::new();
        for mut handle in handles {
            let outstanding = &outstanding;
            joins.push(scope.spawn(move || {
                let mut out: Vec<Task> = Vec::new();
                let mut executed = 0u64;
                let mut idle_rounds = 0u32;
                loop {
                    match handle.delete() {
                        Some(task) => {
                            idle_rounds = 0;
                            executed += 1;
                            out.clear();
                            workload.process(task, &mut out);
                            if !out.is_empty() {
                                outstanding.fetch_add(out.len() as u64, Ordering::AcqRel);
                                handle.insert_batch(&out);
                            }
                            outstanding.fetch_sub(1, Ordering::AcqRel);
                        }
                        None => {
                            handle.flush();
                            if outstanding.load(Ordering::Acquire) == 0 {
                                break;
                            }
                            idle_rounds += 1;
                            if idle_rounds.is_multiple_of(1024) && Instant::now() > deadline {
                                panic!("drain watchdog expired on thread {}", handle.thread_id());
                            }
                            std::hint::spin_loop();
                        }
                    }
                }
                executed
            }));
        }
        for join in joins {
            executed += join.join().expect("worker panicked");
        }
    });
    DriveTotals {
        executed,
        wall: start.elapsed(),
    }
}

/// Runs one algorithm once on one scheduler configuration.
pub fn run_once(
    graph: &Graph,
    algo: Algo,
    kind: SchedulerKind,
    cfg: &SchedulerConfig,
    source: usize,
    target: usize,
    timeout: Duration,
) -> Result<(BenchResult, AlgoOutput), GraphError> {
    let handles = build_scheduler(kind, cfg)
        .unwrap_or_else(|e| panic!("scheduler configuration rejected: {e}"));
    let (totals, useful, output) = match algo {
        Algo::Sssp => {
            let w = ShortestPaths::new(graph, source, false);
            let totals = drive(&w, handles, ShortestPaths::initial_tasks(source), timeout);
            (
                totals,
                w.useful_total(),
                AlgoOutput::Distances(w.into_distances()),
            )
        }
        Algo::Bfs => {
            let w = ShortestPaths::new(graph, source, true);
            let totals = drive(&w, handles, ShortestPaths::initial_tasks(source), timeout);
            (
                totals,
                w.useful_total(),
                AlgoOutput::Levels(w.into_distances()),
            )
        }
        Algo::Astar => {
            let w = AStar::new(graph, source, target)?;
            let initial = w.initial_tasks(source);
            let totals = drive(&w, handles, initial, timeout);
            (totals, w.useful_total(), AlgoOutput::PathLength(w.result()))
        }
        Algo::Mst => {
            let w = Boruvka::new(graph);
            let initial = w.initial_tasks();
            let totals = drive(&w, handles, initial, timeout);
            if w.components_left() > 1 {
                eprintln!(
                    "warning: graph is disconnected ({} components); reporting forest weight",
                    w.components_left()
                );
            }
            (
                totals,
                w.useful_total(),
                AlgoOutput::Forest {
                    weight: w.total_weight(),
                    edges_used: w.edges_used(),
                },
            )
        }
    };
    let checksum = match &output {
        AlgoOutput::Distances(d) | AlgoOutput::Levels(d) => fnv1a(d.iter().copied()),
        AlgoOutput::PathLength(d) => fnv1a([*d]),
        AlgoOutput::Forest { weight, .. } => fnv1a([*weight]),
    };
    Ok((
        BenchResult {
            algo: algo.name().to_string(),
            scheduler: kind.name().to_string(),
            threads: cfg.threads,
            wall_seconds: totals.wall.as_secs_f64(),
            tasks_executed: totals.executed,
            tasks_useful: useful,
            checksum,
        },
        output,
    ))
}

/// Stable machine-readable schema for benchmark rows.
pub fn csv_header() -> String {
    "algo,graph,scheduler,threads,trial,wall_s,tasks_executed,tasks_useful,work_increase,checksum,\
     c,steal_size,p_steal,p_change_insert,p_change_delete,batch_insert,batch_delete,numa_k,numa_layout,seed"
        .to_string()
}

pub fn csv_row(
    result: &BenchResult,
    graph_name: &str,
    trial: &str,
    cfg: &SchedulerConfig,
) -> String {
    let layout = match &cfg.numa_layout {
        Some(l) => (0..l.nodes())
            .map(|n| l.threads_on(n).to_string())
            .collect::<Vec<_>>()
            .join("+"),
        None => "single".to_string(),
    };
    format!(
        "{},{},{},{},{},{:.6},{},{},{:.6},{:#018x},{},{},{},{},{},{},{},{},{},{}",
        result.algo,
        graph_name,
        result.scheduler,
        result.threads,
        trial,
        result.wall_seconds,
        result.tasks_executed,
        result.tasks_useful,
        result.work_increase(),
        result.checksum,
        cfg.queue_multiplier,
        cfg.steal_size,
        cfg.p_steal,
        cfg.p_change_insert,
        cfg.p_change_delete,
        cfg.batch_insert,
        cfg.batch_delete,
        cfg.numa_k,
        layout,
        cfg.rng_seed,
    )
}

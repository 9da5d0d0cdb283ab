//! Graph-algorithm benchmark harness: runs SSSP / BFS / A* / MST on a DIMACS
//! or generated graph under any of the schedulers and emits one CSV row per
//! trial.

use clap::Parser;
use smq::config::SchedulerConfig;
use smq::graph::bench::{csv_header, csv_row, run_once, Algo};
use smq::graph::{dimacs, gen, Graph};
use smq::numa::NodeLayout;
use smq::scheduler::SchedulerKind;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

const USAGE_ERROR: u8 = 2;
const IO_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "smq-bench",
    about = "Priority-scheduler benchmark on graph algorithms",
    disable_help_flag = false
)]
struct Args {
    /// Algorithm: sssp | bfs | astar | mst
    #[arg(long)]
    algo: Option<String>,
    /// Graph input: a .gr file path or a generator spec
    /// (grid:WxH | gnm:V:E | road:WxH)
    #[arg(long)]
    graph: Option<String>,
    /// Optional DIMACS .co coordinate file (for astar on .gr graphs)
    #[arg(long)]
    coords: Option<PathBuf>,
    /// Scheduler: seq | mq | mq-batch | mq-tl | reld | smq | smq-numa
    #[arg(long, default_value = "smq")]
    scheduler: String,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Queue multiplier C (multi-queue variants run C*T queues)
    #[arg(long, default_value_t = 4)]
    c: usize,
    #[arg(long, default_value_t = 4)]
    steal_size: usize,
    #[arg(long, default_value_t = 0.125)]
    p_steal: f64,
    #[arg(long, default_value_t = 0.25)]
    p_change_insert: f64,
    #[arg(long, default_value_t = 0.25)]
    p_change_delete: f64,
    #[arg(long, default_value_t = 8)]
    batch_insert: usize,
    #[arg(long, default_value_t = 8)]
    batch_delete: usize,
    #[arg(long, default_value_t = 8.0)]
    numa_k: f64,
    /// Logical node layout: threads per node joined by '+', or NxM
    /// (e.g. 4+4 or 2x4)
    #[arg(long)]
    numa_layout: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    source: usize,
    /// Target vertex for astar (defaults to the last vertex)
    #[arg(long)]
    target: Option<usize>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the known scheduler names and exit
    #[arg(long, default_value_t = false)]
    list_schedulers: bool,
    /// Append one aggregate row (mean over trials, trial column "mean")
    #[arg(long, default_value_t = false)]
    aggregate: bool,
    /// Generated-graph weight range lower bound
    #[arg(long, default_value_t = 0)]
    weight_min: u32,
    /// Generated-graph weight range upper bound
    #[arg(long, default_value_t = 255)]
    weight_max: u32,
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(USAGE_ERROR)
}

fn io_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(IO_ERROR)
}

fn parse_layout(text: &str) -> Option<NodeLayout> {
    if let Some((n, m)) = text.split_once('x') {
        let nodes: usize = n.parse().ok()?;
        let per: usize = m.parse().ok()?;
        return NodeLayout::new(vec![per; nodes]).ok();
    }
    let parts: Result<Vec<usize>, _> = text.split('+').map(str::parse).collect();
    NodeLayout::new(parts.ok()?).ok()
}

fn load_graph(args: &Args, spec: &str) -> Result<Graph, ExitCode> {
    if spec.ends_with(".gr") {
        let mut graph = dimacs::load_gr(std::path::Path::new(spec))
            .map_err(|e| io_error(&format!("loading {spec}: {e}")))?;
        if let Some(co) = &args.coords {
            let coords = dimacs::load_co(co)
                .map_err(|e| io_error(&format!("loading {}: {e}", co.display())))?;
            graph
                .set_coords(coords)
                .map_err(|e| io_error(&format!("coordinates: {e}")))?;
        }
        Ok(graph)
    } else {
        let gen_spec = gen::parse_spec(spec)
            .ok_or_else(|| usage_error(&format!("unknown graph spec {spec:?}")))?;
        gen::generate(gen_spec, args.weight_min, args.weight_max, args.seed)
            .map_err(|e| usage_error(&format!("generating {spec}: {e}")))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();

    if args.list_schedulers {
        for kind in SchedulerKind::ALL {
            println!("{}", kind.name());
        }
        return ExitCode::SUCCESS;
    }

    let Some(algo_name) = &args.algo else {
        return usage_error("--algo is required (sssp | bfs | astar | mst)");
    };
    let Some(algo) = Algo::parse(algo_name) else {
        return usage_error(&format!("unknown algorithm {algo_name:?}"));
    };
    let Some(kind) = SchedulerKind::parse(&args.scheduler) else {
        return usage_error(&format!(
            "unknown scheduler {:?}; try --list-schedulers",
            args.scheduler
        ));
    };
    let Some(graph_spec) = &args.graph else {
        return usage_error("--graph is required (path.gr or generator spec)");
    };
    let graph = match load_graph(&args, graph_spec) {
        Ok(g) => g,
        Err(code) => return code,
    };
    if args.source >= graph.vertex_count() {
        return usage_error(&format!(
            "source {} out of range (graph has {} vertices)",
            args.source,
            graph.vertex_count()
        ));
    }
    let target = args.target.unwrap_or(graph.vertex_count() - 1);
    if target >= graph.vertex_count() {
        return usage_error(&format!("target {target} out of range"));
    }

    let layout = match &args.numa_layout {
        Some(text) => match parse_layout(text) {
            Some(l) => Some(l),
            None => return usage_error(&format!("bad layout spec {text:?}")),
        },
        None => None,
    };

    let mut rows = vec![csv_header()];
    let mut results = Vec::new();
    for trial in 0..args.trials {
        let cfg = SchedulerConfig {
            threads: args.threads,
            queue_multiplier: args.c,
            steal_size: args.steal_size,
            p_steal: args.p_steal,
            batch_insert: args.batch_insert,
            batch_delete: args.batch_delete,
            p_change_insert: args.p_change_insert,
            p_change_delete: args.p_change_delete,
            tl_uniform_reselect: false,
            numa_k: args.numa_k,
            numa_layout: layout.clone(),
            rng_seed: args.seed.wrapping_add(trial as u64),
        };
        match run_once(
            &graph,
            algo,
            kind,
            &cfg,
            args.source,
            target,
            Duration::from_secs(60),
        ) {
            Ok((result, _)) => {
                rows.push(csv_row(&result, graph_spec, &trial.to_string(), &cfg));
                results.push((result, cfg));
            }
            Err(e) => return usage_error(&format!("run failed: {e}")),
        }
    }
    if args.aggregate && !results.is_empty() {
        let n = results.len() as f64;
        let mean = smq::graph::bench::BenchResult {
            algo: results[0].0.algo.clone(),
            scheduler: results[0].0.scheduler.clone(),
            threads: args.threads,
            wall_seconds: results.iter().map(|(r, _)| r.wall_seconds).sum::<f64>() / n,
            tasks_executed: (results.iter().map(|(r, _)| r.tasks_executed).sum::<u64>() as f64 / n)
                as u64,
            tasks_useful: (results.iter().map(|(r, _)| r.tasks_useful).sum::<u64>() as f64 / n)
                as u64,
            checksum: results[0].0.checksum,
        };
        rows.push(csv_row(&mean, graph_spec, "mean", &results[0].1));
    }

    let body = rows.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                return io_error(&format!("writing {}: {e}", path.display()));
            }
        }
        None => {
            if std::io::stdout().write_all(body.as_bytes()).is_err() {
                return ExitCode::from(IO_ERROR);
            }
        }
    }
    ExitCode::SUCCESS
}

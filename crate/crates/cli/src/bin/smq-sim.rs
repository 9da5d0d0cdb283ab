//! Sweep runner for the balls-into-bins rank simulators. Emits one CSV row
//! per (process, n, B, p_steal, gamma, seed) combination.

use clap::Parser;
use smq::sim::{
    run_continuous, run_discrete_smq_auto, run_one_plus_beta, ProcessParams, RankStats,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "smq-sim", about = "Rank-process sweep runner")]
struct Args {
    /// Which processes to run (comma list of: discrete, continuous,
    /// one-plus-beta)
    #[arg(long, default_value = "discrete")]
    process: String,
    /// Bin counts, comma separated
    #[arg(long, default_value = "64")]
    n: String,
    /// Batch sizes B, comma separated
    #[arg(long, default_value = "1")]
    b: String,
    /// Stealing probabilities, comma separated
    #[arg(long, default_value = "0.5")]
    p_steal: String,
    /// Scheduler-unfairness bounds, comma separated (non-zero values need
    /// even n)
    #[arg(long, default_value = "0")]
    gamma: String,
    /// Override beta for the one-plus-beta process (defaults to
    /// p_steal / (2 (1+gamma)))
    #[arg(long)]
    beta: Option<f64>,
    /// Initial labels for the discrete process (auto-doubled on underflow)
    #[arg(long, default_value_t = 1_000_000)]
    t_init: u64,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    /// Number of seeds; runs use seeds seed_base..seed_base+seeds
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Potential exponent (defaults to beta/8)
    #[arg(long)]
    alpha: Option<f64>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| format!("bad {what} value {s:?}"))
        })
        .collect()
}

fn params_for(
    args: &Args,
    n: usize,
    b: usize,
    p_steal: f64,
    gamma: f64,
) -> Result<ProcessParams, String> {
    let mut params = ProcessParams::uniform(n, p_steal, b, args.t_init, args.steps);
    params.alpha = args.alpha;
    if gamma > 0.0 {
        params.pi = ProcessParams::two_level_pi(n, gamma).map_err(|e| e.to_string())?;
        params.gamma = gamma;
    }
    Ok(params)
}

#[allow(clippy::too_many_arguments)]
fn row(
    process: &str,
    n: usize,
    b: usize,
    p_steal: f64,
    gamma: f64,
    seed: u64,
    t_init: u64,
    steps: u64,
    stats: &RankStats,
) -> String {
    format!(
        "{process},{n},{b},{p_steal},{gamma},{seed},{t_init},{steps},{:.6},{},{:.6},{},{:.6}",
        stats.avg_rank,
        stats.max_rank,
        stats.avg_top_rank,
        stats.max_top_rank,
        stats.final_potential_over_n
    )
}

fn main() -> ExitCode {
    let args = Args::parse();
    let run = || -> Result<String, String> {
        let processes: Vec<String> = args
            .process
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let ns: Vec<usize> = parse_list(&args.n, "n")?;
        let bs: Vec<usize> = parse_list(&args.b, "b")?;
        let ps: Vec<f64> = parse_list(&args.p_steal, "p_steal")?;
        let gammas: Vec<f64> = parse_list(&args.gamma, "gamma")?;
        let mut rows = vec![
            "process,n,b,p_steal,gamma,seed,t_init,steps,avg_rank,max_rank,avg_top_rank,max_top_rank,final_potential_over_n"
                .to_string(),
        ];
        for process in &processes {
            for &n in &ns {
                for &b in &bs {
                    for &p in &ps {
                        for &gamma in &gammas {
                            for seed in args.seed_base..args.seed_base + args.seeds {
                                let params = params_for(&args, n, b, p, gamma)?;
                                let (stats, used_init) = match process.as_str() {
                                    "discrete" => run_discrete_smq_auto(&params, seed)
                                        .map_err(|e| e.to_string())?,
                                    "continuous" => (
                                        run_continuous(&params, seed).map_err(|e| e.to_string())?,
                                        0,
                                    ),
                                    "one-plus-beta" => {
                                        let beta = args
                                            .beta
                                            .unwrap_or_else(|| smq::sim::beta_for(p, gamma));
                                        (
                                            run_one_plus_beta(&params, beta, seed)
                                                .map_err(|e| e.to_string())?,
                                            0,
                                        )
                                    }
                                    other => return Err(format!("unknown process {other:?}")),
                                };
                                rows.push(row(
                                    process, n, b, p, gamma, seed, used_init, args.steps, &stats,
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(rows.join("\n") + "\n")
    };
    let body = match run() {
        Ok(body) => body,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => {
            if std::io::stdout().write_all(body.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
        }
    }
    ExitCode::SUCCESS
}

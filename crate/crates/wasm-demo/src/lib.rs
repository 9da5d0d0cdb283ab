//! Browser bindings for the rank simulators: run the stealing process, plot
//! the one-step selection probabilities, and trace the potential function,
//! all parameter-explorable from a static page.

use smq::sim::{
    beta_for, check_majorization, run_continuous_traced, run_discrete_smq_auto, s_beta, s_c,
    Majorization, ProcessParams,
};
use wasm_bindgen::prelude::*;

fn params(
    n: usize,
    batch: usize,
    p_steal: f64,
    gamma: f64,
    t_init: u64,
    steps: u64,
) -> Result<ProcessParams, String> {
    if n == 0 || batch == 0 || steps == 0 {
        return Err("n, batch and steps must be positive".into());
    }
    let mut p = ProcessParams::uniform(n, p_steal, batch, t_init, steps);
    if gamma > 0.0 {
        p.pi = ProcessParams::two_level_pi(n, gamma).map_err(|e| e.to_string())?;
        p.gamma = gamma;
    }
    Ok(p)
}

/// Runs the discrete stealing process and returns
/// `[avg_rank, max_rank, avg_top_rank, max_top_rank, final_potential_over_n,
/// used_t_init]`. `t_init` grows automatically if a bin runs dry.
#[wasm_bindgen]
pub fn rank_simulation(
    n: usize,
    batch: usize,
    p_steal: f64,
    gamma: f64,
    t_init: u64,
    steps: u64,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let p = params(n, batch, p_steal, gamma, t_init, steps)?;
    let (stats, used) = run_discrete_smq_auto(&p, seed).map_err(|e| e.to_string())?;
    Ok(vec![
        stats.avg_rank,
        stats.max_rank as f64,
        stats.avg_top_rank,
        stats.max_top_rank as f64,
        stats.final_potential_over_n,
        used as f64,
    ])
}

/// One-step selection probabilities for bins sorted by top label, flattened
/// as `[S_c(1..=n), S_beta(1..=n), min_margin]`. `S_c` uses the worst-case
/// scheduling distribution for the given gamma; beta is derived as
/// `p_steal / (2 (1+gamma))`. The final element is the smallest
/// `S_c - S_beta` margin (NaN when the hypothesis
/// `gamma (1/p_steal - 1) <= 1/(2n)` fails).
#[wasm_bindgen]
pub fn selection_curves(n: usize, p_steal: f64, gamma: f64) -> Result<Vec<f64>, String> {
    if n == 0 {
        return Err("n must be positive".into());
    }
    if !(p_steal > 0.0 && p_steal <= 1.0) {
        return Err("p_steal must be in (0, 1]".into());
    }
    if !(0.0..=0.5).contains(&gamma) {
        return Err("gamma must be in [0, 1/2]".into());
    }
    let beta = beta_for(p_steal, gamma);
    let mut out = Vec::with_capacity(2 * n + 1);
    for i in 1..=n {
        let prefix = if i == n {
            1.0
        } else {
            i as f64 / ((1.0 + gamma) * n as f64)
        };
        out.push(s_c(i, n, p_steal, prefix));
    }
    for i in 1..=n {
        out.push(s_beta(i, n, beta));
    }
    out.push(match check_majorization(n, p_steal, gamma) {
        Majorization::Checked { min_margin, .. } => min_margin,
        Majorization::HypothesisViolated { .. } => f64::NAN,
    });
    Ok(out)
}

/// Normalized potential (Gamma(t)/n) of a continuous stealing run, uniformly
/// downsampled to at most `max_points` values.
#[wasm_bindgen]
pub fn potential_trace(
    n: usize,
    batch: usize,
    p_steal: f64,
    gamma: f64,
    steps: u64,
    seed: u64,
    max_points: usize,
) -> Result<Vec<f64>, String> {
    let p = params(n, batch, p_steal, gamma, 0, steps)?;
    let (_, trace) = run_continuous_traced(&p, seed).map_err(|e| e.to_string())?;
    let max_points = max_points.max(2);
    if trace.len() <= max_points {
        return Ok(trace);
    }
    let stride = trace.len() as f64 / max_points as f64;
    Ok((0..max_points)
        .map(|i| trace[(i as f64 * stride) as usize])
        .collect())
}

//! The removal processes themselves.
//!
//! All three processes share the same shape: `n` bins hold increasing
//! labels; a deletion step picks a bin by some rule and removes the `B`
//! smallest labels from it. What differs is the rule:
//!
//! * discrete / continuous stealing process — the "local" bin is drawn from
//!   the scheduling distribution `pi`; with probability `p_steal` one
//!   uniform victim's top is compared against the local top and the better
//!   bin loses its labels;
//! * (1+beta)-choice — with probability `beta` the better of two uniform
//!   bins, otherwise one uniform bin.
//!
//! The discrete process materializes `initial_tasks` integer labels and
//! reports exact global ranks through [`RankOracle`]; the continuous
//! processes keep only the bin tops and advance them lazily by exponential
//! gaps, so their rank statistics are measured among the current tops.

use crate::rng::RngStream;
use crate::sim::closed_form::{beta_for, potential_gamma};
use crate::sim::oracle::RankOracle;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("bin {bin} ran out of labels at step {step}; initial_tasks is too small")]
    BinUnderflow { bin: usize, step: u64 },
}

/// Configuration and state sizes of one simulated run.
#[derive(Clone, Debug)]
pub struct ProcessParams {
    /// Number of bins (queues / threads of the modeled scheduler).
    pub bins: usize,
    /// Scheduling distribution; must sum to 1.
    pub pi: Vec<f64>,
    /// Declared unfairness bound; `pi` must satisfy
    /// `1 - gamma <= 1/(pi_i n) <= 1 + gamma` for every bin.
    pub gamma: f64,
    pub p_steal: f64,
    /// Labels removed per deletion step (B).
    pub batch: usize,
    /// Labels inserted up front (discrete process only).
    pub initial_tasks: u64,
    /// Deletion steps to perform.
    pub steps: u64,
    /// Potential exponent; defaults to `beta/8` with
    /// `beta = p_steal / (2 (1+gamma))`.
    pub alpha: Option<f64>,
}

impl ProcessParams {
    pub fn uniform(
        bins: usize,
        p_steal: f64,
        batch: usize,
        initial_tasks: u64,
        steps: u64,
    ) -> Self {
        ProcessParams {
            bins,
            pi: vec![1.0 / bins as f64; bins],
            gamma: 0.0,
            p_steal,
            batch,
            initial_tasks,
            steps,
            alpha: None,
        }
    }

    /// A maximally unfair two-level distribution for even `bins`: half the
    /// bins at the lower bound `1/((1+gamma) n)`, half raised to keep the
    /// sum at 1 (still inside the declared band).
    pub fn two_level_pi(bins: usize, gamma: f64) -> Result<Vec<f64>, SimError> {
        if !bins.is_multiple_of(2) {
            return Err(SimError::BadParams(
                "two-level distribution needs an even bin count".into(),
            ));
        }
        let n = bins as f64;
        let low = 1.0 / ((1.0 + gamma) * n);
        let high = 2.0 / n - low;
        Ok((0..bins)
            .map(|i| if i % 2 == 0 { low } else { high })
            .collect())
    }

    pub fn alpha_value(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| beta_for(self.p_steal, self.gamma) / 8.0)
    }

    fn validate(&self) -> Result<(), SimError> {
        let n = self.bins;
        if n == 0 {
            return Err(SimError::BadParams("need at least one bin".into()));
        }
        if self.pi.len() != n {
            return Err(SimError::BadParams(format!(
                "pi has {} entries for {} bins",
                self.pi.len(),
                n
            )));
        }
        let sum: f64 = self.pi.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::BadParams(format!("pi sums to {sum}")));
        }
        if !(0.0..=0.5).contains(&self.gamma) {
            return Err(SimError::BadParams(format!(
                "gamma {} not in [0, 1/2]",
                self.gamma
            )));
        }
        for (i, &p) in self.pi.iter().enumerate() {
            let inv = 1.0 / (p * n as f64);
            if inv < 1.0 - self.gamma - 1e-9 || inv > 1.0 + self.gamma + 1e-9 {
                return Err(SimError::BadParams(format!(
                    "pi[{i}] = {p} violates the gamma = {} band",
                    self.gamma
                )));
            }
        }
        if !(self.p_steal > 0.0 && self.p_steal <= 1.0) {
            return Err(SimError::BadParams(format!("p_steal {}", self.p_steal)));
        }
        if self.batch == 0 || self.steps == 0 {
            return Err(SimError::BadParams(
                "batch and steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Rank statistics of one run. Global ranks count all remaining labels
/// (discrete process); top ranks count only the bins' current tops. The
/// continuous processes have no finite global label set, so there the two
/// pairs coincide and both report top ranks.
#[derive(Clone, Copy, Debug)]
pub struct RankStats {
    pub removed: u64,
    pub avg_rank: f64,
    pub max_rank: u64,
    pub avg_top_rank: f64,
    pub max_top_rank: u64,
    pub final_potential_over_n: f64,
}

/// Scheduling-distribution sampler over the cumulative sums of `pi`.
struct PiSampler {
    cumulative: Vec<f64>,
}

impl PiSampler {
    fn new(pi: &[f64]) -> Self {
        let mut cumulative = Vec::with_capacity(pi.len());
        let mut acc = 0.0;
        for &p in pi {
            acc += p;
            cumulative.push(acc);
        }
        PiSampler { cumulative }
    }

    fn sample(&self, rng: &mut RngStream) -> usize {
        let u = rng.next_f64();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

struct RankRecorder {
    removed: u64,
    rank_sum: u64,
    max_rank: u64,
    top_rank_sum: u64,
    max_top_rank: u64,
}

impl RankRecorder {
    fn new() -> Self {
        RankRecorder {
            removed: 0,
            rank_sum: 0,
            max_rank: 0,
            top_rank_sum: 0,
            max_top_rank: 0,
        }
    }

    fn record(&mut self, rank: u64, top_rank: u64) {
        self.removed += 1;
        self.rank_sum += rank;
        self.max_rank = self.max_rank.max(rank);
        self.top_rank_sum += top_rank;
        self.max_top_rank = self.max_top_rank.max(top_rank);
    }

    fn finish(self, final_potential_over_n: f64) -> RankStats {
        let removed = self.removed.max(1);
        RankStats {
            removed: self.removed,
            avg_rank: self.rank_sum as f64 / removed as f64,
            max_rank: self.max_rank,
            avg_top_rank: self.top_rank_sum as f64 / removed as f64,
            max_top_rank: self.max_top_rank,
            final_potential_over_n,
        }
    }
}

/// Sorted multiset of the current top labels, generic over the label type.
/// n stays small, so binary search plus O(n) shifts beat anything fancier.
struct SortedTops<T> {
    values: Vec<T>,
}

impl<T: PartialOrd + Copy> SortedTops<T> {
    fn new(mut values: Vec<T>) -> Self {
        values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        SortedTops { values }
    }

    /// Number of tops strictly smaller than `v`.
    fn rank(&self, v: T) -> u64 {
        self.values.partition_point(|&x| x < v) as u64
    }

    fn replace(&mut self, old: T, new: T) {
        let pos = self.values.partition_point(|&x| x < old);
        debug_assert!(pos < self.values.len());
        self.values.remove(pos);
        let ins = self.values.partition_point(|&x| x < new);
        self.values.insert(ins, new);
    }
}

/// The discrete stealing process with exact global ranks.
///
/// Inserts labels `0..initial_tasks` (each into bin `i` with probability
/// `pi_i`), then performs `steps` deletions. Fails with
/// [`SimError::BinUnderflow`] when a bin runs dry; see
/// [`run_discrete_smq_auto`] for the enlarging wrapper.
pub fn run_discrete_smq(params: &ProcessParams, seed: u64) -> Result<RankStats, SimError> {
    params.validate()?;
    if params.initial_tasks > u32::MAX as u64 {
        return Err(SimError::BadParams(
            "initial_tasks exceeds u32 range".into(),
        ));
    }
    let n = params.bins;
    let mut rng = RngStream::new(seed, 0);
    let sampler = PiSampler::new(&params.pi);

    let total = params.initial_tasks as usize;
    let mut bins: Vec<VecDeque<u32>> = vec![VecDeque::new(); n];
    for label in 0..total {
        bins[sampler.sample(&mut rng)].push_back(label as u32);
    }
    for (i, bin) in bins.iter().enumerate() {
        if bin.is_empty() {
            return Err(SimError::BinUnderflow { bin: i, step: 0 });
        }
    }
    let mut oracle = RankOracle::all_present(total);
    let mut tops = SortedTops::new(bins.iter().map(|b| *b.front().unwrap()).collect());
    let mut recorder = RankRecorder::new();

    for step in 0..params.steps {
        let local = sampler.sample(&mut rng);
        let mut target = local;
        if rng.next_coin(params.p_steal) {
            let victim = rng.next_index(n);
            if bins[victim].front().unwrap() < bins[local].front().unwrap() {
                target = victim;
            }
        }
        for _ in 0..params.batch {
            let label = bins[target].pop_front().unwrap();
            let next = match bins[target].front() {
                Some(&next) => next,
                None => return Err(SimError::BinUnderflow { bin: target, step }),
            };
            recorder.record(oracle.rank(label as usize), tops.rank(label));
            oracle.remove(label as usize);
            tops.replace(label, next);
        }
    }

    let scale = (params.batch * n) as f64;
    let xs: Vec<f64> = bins
        .iter()
        .map(|b| *b.front().unwrap() as f64 / scale)
        .collect();
    Ok(recorder.finish(potential_gamma(&xs, params.alpha_value()) / n as f64))
}

/// Doubles `initial_tasks` until the run completes without underflow.
/// Returns the stats and the size that worked.
pub fn run_discrete_smq_auto(
    params: &ProcessParams,
    seed: u64,
) -> Result<(RankStats, u64), SimError> {
    let mut p = params.clone();
    loop {
        match run_discrete_smq(&p, seed) {
            Ok(stats) => return Ok((stats, p.initial_tasks)),
            Err(SimError::BinUnderflow { .. }) => {
                p.initial_tasks = p.initial_tasks.saturating_mul(2);
            }
            Err(e) => return Err(e),
        }
    }
}

enum Choice {
    Stealing,
    OnePlusBeta(f64),
}

/// Continuous bins: only the tops exist; removing a label from bin `i`
/// advances its top by an exponential gap whose rate is proportional to
/// `pi_i` (mean `1/(pi_i n^2)`, which is `1/n` per label under a uniform
/// distribution).
fn run_continuous_inner(
    params: &ProcessParams,
    seed: u64,
    choice: Choice,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<RankStats, SimError> {
    params.validate()?;
    let n = params.bins;
    let mut rng = RngStream::new(seed, 0);
    let sampler = PiSampler::new(&params.pi);
    let means: Vec<f64> = params
        .pi
        .iter()
        .map(|&p| 1.0 / (p * (n * n) as f64))
        .collect();

    let mut tops = vec![0.0f64; n];
    let mut sorted = SortedTops::new(tops.clone());
    let mut recorder = RankRecorder::new();
    let alpha = params.alpha_value();
    let scale = (params.batch * n) as f64;
    let mut xs = vec![0.0f64; n];

    for _ in 0..params.steps {
        let target = match choice {
            Choice::Stealing => {
                let local = sampler.sample(&mut rng);
                if rng.next_coin(params.p_steal) {
                    let victim = rng.next_index(n);
                    if tops[victim] < tops[local] {
                        victim
                    } else {
                        local
                    }
                } else {
                    local
                }
            }
            Choice::OnePlusBeta(beta) => {
                if beta > 0.0 && rng.next_coin(beta) {
                    let a = rng.next_index(n);
                    let b = rng.next_index(n);
                    if tops[b] < tops[a] {
                        b
                    } else {
                        a
                    }
                } else {
                    rng.next_index(n)
                }
            }
        };
        for _ in 0..params.batch {
            let old = tops[target];
            let rank = sorted.rank(old);
            recorder.record(rank, rank);
            let new = old + rng.next_exponential(means[target]);
            sorted.replace(old, new);
            tops[target] = new;
        }
        if let Some(trace) = trace.as_deref_mut() {
            for (x, &t) in xs.iter_mut().zip(&tops) {
                *x = t / scale;
            }
            trace.push(potential_gamma(&xs, alpha) / n as f64);
        }
    }

    for (x, &t) in xs.iter_mut().zip(&tops) {
        *x = t / scale;
    }
    Ok(recorder.finish(potential_gamma(&xs, alpha) / n as f64))
}

/// Continuous stealing process; ranks are measured among the current tops.
pub fn run_continuous(params: &ProcessParams, seed: u64) -> Result<RankStats, SimError> {
    run_continuous_inner(params, seed, Choice::Stealing, None)
}

/// Continuous stealing process that also records the normalized potential
/// after every step.
pub fn run_continuous_traced(
    params: &ProcessParams,
    seed: u64,
) -> Result<(RankStats, Vec<f64>), SimError> {
    let mut trace = Vec::with_capacity(params.steps as usize);
    let stats = run_continuous_inner(params, seed, Choice::Stealing, Some(&mut trace))?;
    Ok((stats, trace))
}

/// The (1+beta)-choice process over the same continuous bins. `beta` may be
/// 0 (always one uniform choice) through 1 (always two choices).
pub fn run_one_plus_beta(
    params: &ProcessParams,
    beta: f64,
    seed: u64,
) -> Result<RankStats, SimError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(SimError::BadParams(format!("beta {beta} not in [0, 1]")));
    }
    run_continuous_inner(params, seed, Choice::OnePlusBeta(beta), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_pi() {
        let mut p = ProcessParams::uniform(4, 0.5, 1, 1000, 10);
        p.pi[0] = 0.5; // no longer sums to 1
        assert!(matches!(
            run_discrete_smq(&p, 0),
            Err(SimError::BadParams(_))
        ));

        let mut p = ProcessParams::uniform(4, 0.5, 1, 1000, 10);
        p.pi = vec![0.4, 0.4, 0.1, 0.1]; // violates gamma = 0 band
        assert!(matches!(
            run_discrete_smq(&p, 0),
            Err(SimError::BadParams(_))
        ));
    }

    #[test]
    fn two_level_pi_respects_band() {
        let gamma = 0.25;
        let pi = ProcessParams::two_level_pi(8, gamma).unwrap();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for &p in &pi {
            let inv = 1.0 / (p * 8.0);
            assert!(inv >= 1.0 - gamma - 1e-12 && inv <= 1.0 + gamma + 1e-12);
        }
    }

    #[test]
    fn single_bin_always_rank_zero() {
        let p = ProcessParams::uniform(1, 0.5, 1, 10_000, 5_000);
        let stats = run_discrete_smq(&p, 3).unwrap();
        assert_eq!(stats.max_rank, 0, "one bin always holds the global minimum");
        assert_eq!(stats.max_top_rank, 0);
        assert_eq!(stats.removed, 5_000);
    }

    // With n=2 and p_steal=1, the removed top is the worse one only when the
    // uniform victim draw hits the local bin while the local top is worse:
    // probability 1/2 * 1/2, so the average top rank settles near 1/4.
    #[test]
    fn two_bins_full_stealing_top_rank() {
        let p = ProcessParams::uniform(2, 1.0, 1, 200_000, 50_000);
        let stats = run_discrete_smq(&p, 4).unwrap();
        assert!(
            (stats.avg_top_rank - 0.25).abs() < 0.02,
            "avg top rank {}",
            stats.avg_top_rank
        );
    }

    #[test]
    fn underflow_reported_and_auto_enlarged() {
        let p = ProcessParams::uniform(4, 0.5, 1, 8, 1_000);
        assert!(matches!(
            run_discrete_smq(&p, 5),
            Err(SimError::BinUnderflow { .. })
        ));
        let (stats, grown) = run_discrete_smq_auto(&p, 5).unwrap();
        assert!(grown > 8);
        assert_eq!(stats.removed, 1_000);
    }

    // Mean label advance per removal is 1/n under a uniform distribution,
    // regardless of B; checked with an independent re-sampling of the same
    // gap distribution.
    #[test]
    fn continuous_mean_gap_is_one_over_n() {
        let n = 16usize;
        let steps = 20_000u64;
        for batch in [1usize, 2] {
            let p = ProcessParams::uniform(n, 0.5, batch, 0, steps);
            let stats = run_continuous(&p, 6).unwrap();
            assert_eq!(stats.removed, steps * batch as u64);
        }
        let n = 8usize;
        let steps = 50_000u64;
        for batch in [1usize, 2] {
            let mut rng = RngStream::new(7, 0);
            let mut advance = 0.0;
            for _ in 0..steps {
                let _bin = rng.next_index(n);
                for _ in 0..batch {
                    advance += rng.next_exponential(1.0 / n as f64);
                }
            }
            let per_label = advance / (steps * batch as u64) as f64;
            let per_step = advance / steps as f64;
            let sigma = (1.0 / n as f64) / ((steps * batch as u64) as f64).sqrt();
            assert!(
                (per_label - 1.0 / n as f64).abs() < 6.0 * sigma,
                "batch {batch}: per-label advance {per_label}"
            );
            // The per-deletion advance doubles with B = 2.
            assert!((per_step - batch as f64 / n as f64).abs() < 6.0 * sigma * batch as f64);
        }
    }

    // beta = 0 degenerates to a single uniform choice; the chance of
    // removing from the better half of the bins is close to 1/2.
    #[test]
    fn one_plus_beta_zero_is_uniform() {
        let n = 16;
        let p = ProcessParams::uniform(n, 0.5, 1, 0, 100_000);
        let stats = run_one_plus_beta(&p, 0.0, 8).unwrap();
        // Uniform victim: expected top rank is (n-1)/2 = 7.5.
        assert!(
            (stats.avg_top_rank - 7.5).abs() < 0.2,
            "avg top rank {}",
            stats.avg_top_rank
        );
    }

    #[test]
    fn one_plus_beta_one_always_compares() {
        let n = 16;
        let p = ProcessParams::uniform(n, 0.5, 1, 0, 100_000);
        let stats = run_one_plus_beta(&p, 1.0, 9).unwrap();
        // Min of two uniforms over ranks 0..15: mean of min is about 5.2,
        // clearly below the single-choice 7.5.
        assert!(
            stats.avg_top_rank < 6.0,
            "avg top rank {}",
            stats.avg_top_rank
        );
    }

    // Matched seeds: the stealing process never does much worse than the
    // coupled (1+beta) process with beta = p_steal / (2 (1+gamma)).
    #[test]
    fn continuous_dominated_by_one_plus_beta() {
        let p_steal = 0.5;
        let beta = beta_for(p_steal, 0.0);
        for n in [16usize, 32, 64] {
            let mut cont = Vec::new();
            let mut obeta = Vec::new();
            for seed in 0..10u64 {
                let p = ProcessParams::uniform(n, p_steal, 1, 0, 20_000);
                cont.push(run_continuous(&p, seed).unwrap().avg_top_rank);
                obeta.push(run_one_plus_beta(&p, beta, seed).unwrap().avg_top_rank);
            }
            let med = |v: &mut Vec<f64>| {
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v[v.len() / 2]
            };
            let mc = med(&mut cont);
            let mb = med(&mut obeta);
            assert!(
                mc <= mb * 1.1,
                "n={n}: stealing median {mc} vs (1+beta) median {mb}"
            );
        }
    }

    #[test]
    fn traced_potential_has_one_entry_per_step() {
        let p = ProcessParams::uniform(8, 0.5, 1, 0, 500);
        let (stats, trace) = run_continuous_traced(&p, 10).unwrap();
        assert_eq!(trace.len(), 500);
        assert!(trace.iter().all(|&g| g >= 2.0 - 1e-9), "Gamma/n >= 2");
        assert!((trace.last().unwrap() - stats.final_potential_over_n).abs() < 1e-12);
    }

    #[test]
    fn discrete_seeded_runs_reproduce() {
        let p = ProcessParams::uniform(8, 0.25, 2, 50_000, 5_000);
        let a = run_discrete_smq(&p, 11).unwrap();
        let b = run_discrete_smq(&p, 11).unwrap();
        assert_eq!(a.avg_rank, b.avg_rank);
        assert_eq!(a.max_rank, b.max_rank);
        assert_eq!(a.avg_top_rank, b.avg_top_rank);
    }
}

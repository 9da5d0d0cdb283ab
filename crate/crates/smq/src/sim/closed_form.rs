//! Closed-form one-step selection probabilities and the potential function.
//!
//! With bins sorted by increasing top label, `S(i)` is the probability that
//! one deletion step removes from a bin of index at most `i`. The stealing
//! process and the (1+beta)-choice process each have an exact expression,
//! and under the hypothesis `gamma * (1/p_steal - 1) <= 1/(2n)` with
//! `beta = p_steal / (2 (1+gamma))` the stealing process majorizes the
//! (1+beta) one: `S_c(i) >= S_beta(i)` for every `i`. That inequality is
//! what transfers the (1+beta) potential bound to the stealing process, so
//! it is checked here numerically over the worst-case scheduling
//! distribution.

/// `S_beta(i) = (1-beta) i/n + beta (i^2 + 2i(n-i))/n^2`, simplified to
/// `i/n + beta i(n-i)/n^2`.
pub fn s_beta(i: usize, n: usize, beta: f64) -> f64 {
    debug_assert!(i >= 1 && i <= n);
    debug_assert!((0.0..=1.0).contains(&beta));
    let (i, n) = (i as f64, n as f64);
    i / n + beta * i * (n - i) / (n * n)
}

/// `S_c(i) = P_i + (1 - P_i) p_steal i/n`, with `P_i` the probability that
/// the scheduled bin is one of the first `i` (the prefix sum of `pi` over
/// the sorted bins).
pub fn s_c(i: usize, n: usize, p_steal: f64, prefix_pi: f64) -> f64 {
    debug_assert!(i >= 1 && i <= n);
    let (i, n) = (i as f64, n as f64);
    prefix_pi + (1.0 - prefix_pi) * p_steal * i / n
}

/// The beta value coupled to a stealing configuration:
/// `beta = p_steal / (2 (1+gamma))`.
pub fn beta_for(p_steal: f64, gamma: f64) -> f64 {
    p_steal / (2.0 * (1.0 + gamma))
}

/// Largest gamma satisfying the hypothesis at the given `n` and `p_steal`,
/// capped at the model's global bound of 1/2 (`p_steal = 1` puts no
/// constraint at all).
pub fn boundary_gamma(n: usize, p_steal: f64) -> f64 {
    let slack = 1.0 / p_steal - 1.0;
    if slack <= 0.0 {
        return 0.5;
    }
    (1.0 / (2.0 * n as f64) / slack).min(0.5)
}

/// Outcome of the majorization sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum Majorization {
    /// `gamma (1/p_steal - 1) <= 1/(2n)` does not hold; nothing was checked.
    HypothesisViolated { lhs: f64, bound: f64 },
    Checked {
        holds: bool,
        /// Smallest `S_c(i) - S_beta(i)` over the sweep.
        min_margin: f64,
        worst_i: usize,
    },
}

impl Majorization {
    pub fn holds(&self) -> bool {
        matches!(self, Majorization::Checked { holds: true, .. })
    }
}

/// Evaluates `S_c(i) >= S_beta(i) - 1e-12` for all `1 <= i <= n` under the
/// worst-case scheduling distribution, where every `pi_i` sits at its lower
/// bound `1/((1+gamma) n)` so that `P_i >= i/((1+gamma) n)`. At `i = n` both
/// probabilities are exactly 1 (a deletion always targets some bin), which
/// the per-bin lower bound alone would miss.
pub fn check_majorization(n: usize, p_steal: f64, gamma: f64) -> Majorization {
    assert!(n >= 1);
    assert!(p_steal > 0.0 && p_steal <= 1.0);
    assert!((0.0..=0.5).contains(&gamma));
    let lhs = gamma * (1.0 / p_steal - 1.0);
    let bound = 1.0 / (2.0 * n as f64);
    if lhs > bound + 1e-15 {
        return Majorization::HypothesisViolated { lhs, bound };
    }
    let beta = beta_for(p_steal, gamma);
    let mut min_margin = f64::INFINITY;
    let mut worst_i = 1;
    for i in 1..=n {
        let prefix = if i == n {
            1.0
        } else {
            i as f64 / ((1.0 + gamma) * n as f64)
        };
        let margin = s_c(i, n, p_steal, prefix) - s_beta(i, n, beta);
        if margin < min_margin {
            min_margin = margin;
            worst_i = i;
        }
    }
    Majorization::Checked {
        holds: min_margin >= -1e-12,
        min_margin,
        worst_i,
    }
}

/// Exponential potential over normalized top labels:
/// `sum_i exp(-alpha (x_i - mu)) + sum_i exp(alpha (x_i - mu))` with `mu`
/// the mean of `x`. Always at least `2n`. Returns infinity on overflow
/// (saturation) rather than a partial sum.
pub fn potential_gamma(tops: &[f64], alpha: f64) -> f64 {
    assert!(alpha > 0.0);
    assert!(!tops.is_empty());
    let n = tops.len() as f64;
    let mu = tops.iter().sum::<f64>() / n;
    let mut total = 0.0f64;
    for &x in tops {
        let d = alpha * (x - mu);
        total += (-d).exp() + d.exp();
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

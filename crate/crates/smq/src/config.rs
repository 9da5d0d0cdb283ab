//! Global scheduler configuration.

use crate::numa::{LayoutError, NodeLayout};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("thread count must be at least 1")]
    NoThreads,
    #[error("queue multiplier C must be at least 2 for multi-queue schedulers, got {0}")]
    SmallMultiplier(usize),
    #[error("steal size must be at least 1")]
    ZeroStealSize,
    #[error("{name} must be in (0, 1], got {value}")]
    BadProbability { name: &'static str, value: f64 },
    #[error("{name} must be at least 1")]
    ZeroBatch { name: &'static str },
    #[error("numa K must be at least 1, got {0}")]
    BadNumaK(f64),
    #[error("numa layout covers {layout} threads but the scheduler runs {threads}")]
    LayoutMismatch { layout: usize, threads: usize },
}

/// Knobs shared by every scheduler variant. Fields that a variant does not
/// use are simply ignored by it.
#[derive(Clone, Debug)]
pub struct SchedulerConfig {
    /// Worker thread count T. Each thread gets a stable id in `0..threads`.
    pub threads: usize,
    /// Queue multiplier C: multi-queue variants run `C * T` queues.
    pub queue_multiplier: usize,
    /// Stealing buffer capacity of the stealing scheduler.
    pub steal_size: usize,
    /// Probability of attempting a steal on each delete.
    pub p_steal: f64,
    /// Insert-side buffer capacity of the batching variant.
    pub batch_insert: usize,
    /// Delete-side refill size of the batching variant.
    pub batch_delete: usize,
    /// Probability of re-drawing the sticky insert queue (temporal locality).
    pub p_change_insert: f64,
    /// Probability of re-drawing the sticky delete queue (temporal locality).
    pub p_change_delete: f64,
    /// Re-select the sticky delete queue uniformly instead of by a two-choice
    /// top comparison (ablation switch).
    pub tl_uniform_reselect: bool,
    /// Weight divisor for remote queues in node-aware sampling.
    pub numa_k: f64,
    /// Logical node layout; `None` means a single node.
    pub numa_layout: Option<NodeLayout>,
    /// Seed for all per-thread random streams.
    pub rng_seed: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            threads: 1,
            queue_multiplier: 4,
            steal_size: 4,
            p_steal: 1.0 / 8.0,
            batch_insert: 8,
            batch_delete: 8,
            p_change_insert: 0.25,
            p_change_delete: 0.25,
            tl_uniform_reselect: false,
            numa_k: 8.0,
            numa_layout: None,
            rng_seed: 0,
        }
    }
}

impl SchedulerConfig {
    pub fn with_threads(threads: usize) -> Self {
        SchedulerConfig {
            threads,
            ..Default::default()
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    fn check_probability(name: &'static str, value: f64) -> Result<(), ConfigError> {
        if value > 0.0 && value <= 1.0 {
            Ok(())
        } else {
            Err(ConfigError::BadProbability { name, value })
        }
    }

    /// Checks the fields every scheduler relies on.
    pub fn validate_common(&self) -> Result<(), ConfigError> {
        if self.threads == 0 {
            return Err(ConfigError::NoThreads);
        }
        if let Some(layout) = &self.numa_layout {
            if layout.total_threads() != self.threads {
                return Err(ConfigError::LayoutMismatch {
                    layout: layout.total_threads(),
                    threads: self.threads,
                });
            }
            if self.numa_k.is_nan() || self.numa_k < 1.0 {
                return Err(ConfigError::BadNumaK(self.numa_k));
            }
        }
        Ok(())
    }

    /// Extra constraints of the multi-queue family (`m = C * T` queues).
    pub fn validate_multi_queue(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        if self.queue_multiplier < 2 {
            return Err(ConfigError::SmallMultiplier(self.queue_multiplier));
        }
        if self.batch_insert == 0 {
            return Err(ConfigError::ZeroBatch {
                name: "batch_insert",
            });
        }
        if self.batch_delete == 0 {
            return Err(ConfigError::ZeroBatch {
                name: "batch_delete",
            });
        }
        Self::check_probability("p_change_insert", self.p_change_insert)?;
        Self::check_probability("p_change_delete", self.p_change_delete)
    }

    /// Extra constraints of the stealing scheduler.
    pub fn validate_stealing(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        if self.steal_size == 0 {
            return Err(ConfigError::ZeroStealSize);
        }
        Self::check_probability("p_steal", self.p_steal)
    }
}

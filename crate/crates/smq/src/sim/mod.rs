//! Sequential executable form of the scheduler's analytical model.
//!
//! Three removal processes over `n` bins of ordered labels:
//!
//! * the simplified stealing process — a "thread" (bin) is scheduled by a
//!   distribution `pi`, steals with probability `p_steal` by comparing one
//!   uniform victim's top against its own, and removes `B` labels from the
//!   better bin ([`process::run_discrete_smq`], with an exact global rank
//!   oracle, and [`process::run_continuous`], with lazy exponential labels);
//! * the (1+beta)-choice process, the comparison yardstick
//!   ([`process::run_one_plus_beta`]).
//!
//! [`closed_form`] holds the matching one-step selection probabilities
//! `S_c` / `S_beta`, the majorization check between them, and the
//! exponential potential over normalized tops.

pub mod closed_form;
pub mod oracle;
pub mod process;

pub use closed_form::{
    beta_for, boundary_gamma, check_majorization, potential_gamma, s_beta, s_c, Majorization,
};
pub use oracle::RankOracle;
pub use process::{
    run_continuous, run_continuous_traced, run_discrete_smq, run_discrete_smq_auto,
    run_one_plus_beta, ProcessParams, RankStats, SimError,
};

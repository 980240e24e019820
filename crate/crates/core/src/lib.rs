//! Energy-optimal joint caching and transmission-time allocation for a
//! cache-assisted mobile-edge-computing cell.
//!
//! A base station serves `K` mobiles that each request one task from a
//! catalog per slot; inputs are uploaded by the best-channel requester,
//! results are multicast at the worst requester's rate, and cached results
//! skip the upload and the computation. The crate provides:
//!
//! - exact state-space enumeration and expected-energy evaluation
//!   ([`scenario`], [`energy`]),
//! - the closed-form price-optimal durations built on the Lambert W
//!   function ([`numerics`], [`time_alloc`]),
//! - the optimal dual-decomposition solver with knapsack master and
//!   subgradient updates ([`knapsack`], [`dual`]),
//! - the no-iteration suboptimal pipeline and the four reference splits
//!   ([`heuristic`], [`baselines`]),
//! - an exhaustive oracle for certifying results on small instances
//!   ([`oracle`]).

// Input validation rejects NaN through negated comparisons (`!(x > 0.0)` is
// true for NaN where `x <= 0.0` is not); the negation is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dual;
pub mod energy;
pub mod error;
pub mod grouping;
pub mod heuristic;
pub mod knapsack;
pub mod numerics;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod time_alloc;

pub use baselines::{solve_baseline, BaselineReading};
pub use dual::{dual_function, solve_optimal, subgradient, DualParams, MultiplierField};
pub use energy::{
    average_energy, download_energy, exec_energy, rate_power, state_energy, task_energy,
    transfer_energy, upload_energy, CachingVector, StateAllocation,
};
pub use error::{Error, Result};
pub use grouping::{expand_policy, recover_policy, StateSpace};
pub use heuristic::{solve_nocache_multipliers, solve_suboptimal, solve_suboptimal_with};
pub use knapsack::{
    build_instance, solve_exact_dp, solve_ext_greedy, KnapsackInstance,
};
pub use numerics::{bisect_decreasing, golden_section_min, lambert_w0, Bisection, BisectionSpec};
pub use oracle::{solve_bruteforce, MAX_ORACLE_TASKS};
pub use report::{Method, SolveReport, TraceRow};
pub use scenario::{
    catalog, enumerate_states, requesters, zipf_pmf, Scenario, SystemState, TaskSpec,
};
pub use time_alloc::{
    deadline_tight_alloc, optimal_duration, task_cost_terms, task_durations,
};

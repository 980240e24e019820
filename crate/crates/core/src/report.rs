//! Solver output: the policy, its exact average energy, dual-bound
//! metadata, and the iteration trace.

use crate::energy::{CachingVector, StateAllocation};
use crate::error::{Error, Result};
use crate::scenario::{enumerate_states, Scenario};

/// Solution methods exposed by the library and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Optimal,
    Suboptimal,
    Baseline1,
    Baseline2,
    Baseline3,
    Baseline4,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Optimal,
        Method::Suboptimal,
        Method::Baseline1,
        Method::Baseline2,
        Method::Baseline3,
        Method::Baseline4,
        Method::Oracle,
    ];

    /// Canonical CLI name.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Suboptimal => "suboptimal",
            Method::Baseline1 => "baseline1",
            Method::Baseline2 => "baseline2",
            Method::Baseline3 => "baseline3",
            Method::Baseline4 => "baseline4",
            Method::Oracle => "oracle",
        }
    }

    /// Parses a method name; short aliases (`subopt`, `b1`..`b4`) accepted.
    pub fn parse(text: &str) -> Result<Method> {
        match text.trim().to_ascii_lowercase().as_str() {
            "optimal" => Ok(Method::Optimal),
            "suboptimal" | "subopt" => Ok(Method::Suboptimal),
            "baseline1" | "b1" => Ok(Method::Baseline1),
            "baseline2" | "b2" => Ok(Method::Baseline2),
            "baseline3" | "b3" => Ok(Method::Baseline3),
            "baseline4" | "b4" => Ok(Method::Baseline4),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidScenario(format!(
                "unknown method `{other}`; valid methods: optimal, suboptimal, baseline1, baseline2, baseline3, baseline4, oracle"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the dual-iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    /// 1-based iteration index.
    pub iter: usize,
    /// Best dual value seen up to and including this iteration.
    pub dual_value: f64,
    /// Largest per-state subgradient residual at this iterate.
    pub max_residual: f64,
    /// Cached tasks in this iteration's placement.
    pub num_cached: usize,
}

/// Complete output of one solver run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    /// Cache placement of the returned policy.
    pub caching: CachingVector,
    /// Per-state allocations in enumeration order.
    pub allocations: Vec<StateAllocation>,
    /// Exact expected total energy of the policy, in joules.
    pub average_energy: f64,
    /// Best dual lower bound seen, when the method produces one.
    pub dual_value: Option<f64>,
    /// `(average_energy - dual_value) / max(average_energy, eps)`.
    pub duality_gap_rel: Option<f64>,
    /// Iterations performed (dual steps, or candidates enumerated).
    pub iterations: usize,
    /// Whether the method's own stopping criterion was met.
    pub converged: bool,
    /// Final subgradient residual, when the method tracks one.
    pub subgradient_max_residual: Option<f64>,
    /// Dual-iteration trace (empty for non-iterative methods).
    pub trace: Vec<TraceRow>,
    /// Metadata notes (pmf normalization, interpretation flags, ...).
    pub notes: Vec<String>,
}

impl SolveReport {
    /// Verifies the policy is feasible: the cache budget holds exactly,
    /// every duration lies in `[0, T]`, and every state's total used time is
    /// within `T * (1 + 1e-9)`.
    pub fn validate_feasible(&self, s: &Scenario) -> Result<()> {
        let n = s.tasks.len();
        if self.caching.0.len() != n {
            return Err(Error::Verification(format!(
                "caching vector has {} entries, expected {n}",
                self.caching.0.len()
            )));
        }
        let cached_bits: u64 = self
            .caching
            .0
            .iter()
            .zip(&s.tasks)
            .filter(|(&c, _)| c)
            .map(|(_, t)| t.result_bits.round() as u64)
            .sum();
        if cached_bits > s.cache_bits.floor() as u64 {
            return Err(Error::Verification(format!(
                "cache budget violated: {cached_bits} bits > {} bits",
                s.cache_bits
            )));
        }

        let states = enumerate_states(s)?;
        if self.allocations.len() != states.len() {
            return Err(Error::MissingAllocation(self.allocations.len().min(states.len())));
        }
        let t_win = s.deadline_s;
        let bound = t_win * (1.0 + 1e-12);
        for (idx, alloc) in self.allocations.iter().enumerate() {
            if alloc.t_u.len() != n || alloc.t_d.len() != n {
                return Err(Error::Verification(format!("state {idx}: allocation length mismatch")));
            }
            let mut used = 0.0;
            for task in 0..n {
                let (tu, td) = (alloc.t_u[task], alloc.t_d[task]);
                if !(0.0..=bound).contains(&tu) || !(0.0..=bound).contains(&td) {
                    return Err(Error::Verification(format!(
                        "state {idx}, task {task}: duration out of [0, T]: ({tu}, {td})"
                    )));
                }
                used += td + if self.caching.0[task] { 0.0 } else { tu };
            }
            if used > t_win * (1.0 + 1e-9) {
                return Err(Error::Verification(format!(
                    "state {idx}: used time {used} exceeds the window {t_win}"
                )));
            }
        }
        Ok(())
    }
}

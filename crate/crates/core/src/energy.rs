//! Energy model: the rate-to-power map, uploading / downloading / executing
//! energies, per-task and per-state totals, and the exact policy-level
//! expectation over the enumerated state space.

use crate::error::{Error, Result};
use crate::scenario::{enumerate_states, requesters, Scenario, SystemState};

/// Per-state uploading and downloading durations, one pair per task.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAllocation {
    /// Uploading duration per task, each in `[0, T]`.
    pub t_u: Vec<f64>,
    /// Downloading duration per task, each in `[0, T]`.
    pub t_d: Vec<f64>,
}

impl StateAllocation {
    /// All-zero allocation over `n` tasks.
    pub fn zeros(n: usize) -> Self {
        Self { t_u: vec![0.0; n], t_d: vec![0.0; n] }
    }
}

/// Binary cache placement over the task catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CachingVector(pub Vec<bool>);

impl CachingVector {
    /// All-zero placement over `n` tasks.
    pub fn none(n: usize) -> Self {
        CachingVector(vec![false; n])
    }

    /// Number of cached tasks.
    pub fn num_cached(&self) -> usize {
        self.0.iter().filter(|&&c| c).count()
    }

    /// Total cached bits under `tasks`' result sizes.
    pub fn cached_bits(&self, s: &Scenario) -> f64 {
        self.0
            .iter()
            .zip(&s.tasks)
            .filter(|(&c, _)| c)
            .map(|(_, t)| t.result_bits)
            .sum()
    }

    /// Whether the placement fits the cache budget.
    pub fn fits(&self, s: &Scenario) -> bool {
        self.cached_bits(s) <= s.cache_bits
    }

    /// Compact `0`/`1` string, task order.
    pub fn as_bitstring(&self) -> String {
        self.0.iter().map(|&c| if c { '1' } else { '0' }).collect()
    }
}

/// Transmit power needed to sustain `x` bits/s over a unit-power channel:
/// `n0 * (2^(x/B) - 1)`.
///
/// Evaluated as `exp_m1(x ln2 / B)` so that slow rates — where `2^(x/B)`
/// is barely above one — keep full relative precision instead of losing it
/// to cancellation in the subtraction.
pub fn rate_power(x: f64, s: &Scenario) -> f64 {
    debug_assert!(x >= 0.0);
    s.noise_power_w * (x / s.bandwidth_hz * std::f64::consts::LN_2).exp_m1()
}

/// Energy to move `bits` over a channel of power `channel` in `t` seconds:
/// `(t / channel) * rate_power(bits / t)`. A zero duration with a positive
/// payload is infeasible and saturates to `+inf`.
pub fn transfer_energy(t: f64, bits: f64, channel: f64, s: &Scenario) -> f64 {
    debug_assert!(t >= 0.0 && bits >= 0.0 && channel > 0.0);
    if bits <= 0.0 {
        return 0.0;
    }
    if t <= 0.0 {
        return f64::INFINITY;
    }
    (t / channel) * rate_power(bits / t, s)
}

/// Uploading energy for `task` in `state` with duration `t`: the input is
/// sent once by the requester with the best channel; zero when nobody
/// requests the task.
pub fn upload_energy(t: f64, task: usize, state: &SystemState, s: &Scenario) -> f64 {
    let req = requesters(state, task);
    match req.best_channel {
        None => 0.0,
        Some(h_u) => transfer_energy(t, s.tasks[task].upload_bits, h_u, s),
    }
}

/// Downloading energy for `task` in `state` with duration `t`: the result is
/// multicast at the worst requester's channel; zero when nobody requests it.
pub fn download_energy(t: f64, task: usize, state: &SystemState, s: &Scenario) -> f64 {
    let req = requesters(state, task);
    match req.worst_channel {
        None => 0.0,
        Some(h_d) => transfer_energy(t, s.tasks[task].result_bits, h_d, s),
    }
}

/// Server energy to execute `task` once: `mu * L_e * F_b^2`, charged only
/// when the task is requested.
pub fn exec_energy(task: usize, state: &SystemState, s: &Scenario) -> f64 {
    if requesters(state, task).count == 0 {
        0.0
    } else {
        exec_energy_unit(task, s)
    }
}

/// Execution energy of `task` irrespective of the state.
pub(crate) fn exec_energy_unit(task: usize, s: &Scenario) -> f64 {
    s.switched_capacitance * s.tasks[task].cpu_cycles * s.cpu_freq_hz * s.cpu_freq_hz
}

/// Total energy attributable to `task`:
/// `(1 - c) * (upload + exec) + download`. A cached task skips the upload
/// and the execution.
pub fn task_energy(
    cached: bool,
    t_u: f64,
    t_d: f64,
    task: usize,
    state: &SystemState,
    s: &Scenario,
) -> f64 {
    let down = download_energy(t_d, task, state, s);
    if cached {
        down
    } else {
        upload_energy(t_u, task, state, s) + exec_energy(task, state, s) + down
    }
}

/// Total energy of one state under a placement and an allocation.
pub fn state_energy(c: &CachingVector, alloc: &StateAllocation, state: &SystemState, s: &Scenario) -> f64 {
    (0..s.tasks.len())
        .map(|n| task_energy(c.0[n], alloc.t_u[n], alloc.t_d[n], n, state, s))
        .sum()
}

/// Exact expectation of the state energy over the enumerated state space;
/// `policy` holds one allocation per state in enumeration order.
pub fn average_energy(c: &CachingVector, policy: &[StateAllocation], s: &Scenario) -> Result<f64> {
    let states = enumerate_states(s)?;
    if policy.len() != states.len() {
        return Err(Error::MissingAllocation(policy.len().min(states.len())));
    }
    Ok(states
        .iter()
        .zip(policy)
        .map(|(st, alloc)| st.probability * state_energy(c, alloc, st, s))
        .sum())
}

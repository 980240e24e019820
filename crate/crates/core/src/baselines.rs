//! The four reference schemes: per-mobile transmissions with equal or
//! size-proportional time splitting, with or without the suboptimal caching
//! vector.
//!
//! | id | caching        | split                  |
//! |----|----------------|------------------------|
//! | 1  | suboptimal c†  | equal                  |
//! | 2  | suboptimal c†  | proportional to sizes  |
//! | 3  | none           | equal                  |
//! | 4  | none           | proportional to sizes  |

use crate::energy::{
    exec_energy_unit, state_energy, transfer_energy, CachingVector, StateAllocation,
};
use crate::error::{Error, Result};
use crate::grouping::StateSpace;
use crate::report::{Method, SolveReport};
use crate::scenario::{requesters, Scenario, SystemState};

/// How the split formulas are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineReading {
    /// Every requester is its own transmission: uploads and unicast
    /// downloads on the requester's channel, one slot pair per request.
    /// This is the reading under which the schemes forgo the multi-user
    /// diversity and multicast gains, and the default.
    #[default]
    PerRequest,
    /// The split formulas applied per distinct active task, keeping shared
    /// uploads at the best requester channel and multicast downloads at the
    /// worst.
    PerTask,
}

/// Runs baseline `id` (1–4). Ids 1–2 require the suboptimal caching vector
/// `c_dagger`; ids 3–4 force an empty cache.
pub fn solve_baseline(
    id: u8,
    s: &Scenario,
    c_dagger: Option<&CachingVector>,
    reading: BaselineReading,
) -> Result<SolveReport> {
    let (method, equal_split, cached) = match id {
        1 => (Method::Baseline1, true, true),
        2 => (Method::Baseline2, false, true),
        3 => (Method::Baseline3, true, false),
        4 => (Method::Baseline4, false, false),
        _ => {
            return Err(Error::InvalidScenario(format!(
                "baseline id must be 1, 2, 3 or 4, got {id}"
            )))
        }
    };
    let n = s.tasks.len();
    let caching = if cached {
        c_dagger
            .ok_or_else(|| Error::MissingInput {
                method: method.name().to_string(),
                what: "the suboptimal caching vector".to_string(),
            })?
            .clone()
    } else {
        CachingVector::none(n)
    };

    let space = StateSpace::build(s)?;
    let mut allocations = vec![StateAllocation::zeros(n); space.states.len()];
    let mut average_energy = 0.0;
    for class in &space.classes {
        let representative = &space.states[class.members[0] as usize];
        let (alloc, unit_energy) = match reading {
            BaselineReading::PerRequest => {
                per_request_split(&caching, representative, equal_split, s)
            }
            BaselineReading::PerTask => {
                per_task_split(&caching, representative, equal_split, s)
            }
        };
        average_energy += class.members.len() as f64 * class.probability * unit_energy;
        for &member in &class.members {
            allocations[member as usize] = alloc.clone();
        }
    }

    let note = match reading {
        BaselineReading::PerRequest => {
            "baseline durations use the per-request reading (each requester uploads and \
             downloads on its own channel); reported allocations aggregate each task's \
             requester slots"
        }
        BaselineReading::PerTask => {
            "baseline durations use the per-task reading (shared uploads at the best \
             requester channel, multicast downloads at the worst)"
        }
    };

    Ok(SolveReport {
        method,
        caching,
        allocations,
        average_energy,
        dual_value: None,
        duality_gap_rel: None,
        iterations: 0,
        converged: true,
        subgradient_max_residual: None,
        trace: Vec::new(),
        notes: vec![note.to_string()],
    })
}

/// One slot pair per request: an uncached request occupies an upload and a
/// download slot, a cached one just a download slot. Returns the
/// per-task-aggregated durations and the state energy per unit probability.
fn per_request_split(
    c: &CachingVector,
    state: &SystemState,
    equal_split: bool,
    s: &Scenario,
) -> (StateAllocation, f64) {
    let n = s.tasks.len();
    let mut alloc = StateAllocation::zeros(n);
    let mut slots = 0.0;
    let mut total_bits = 0.0;
    for &task in &state.task_idx {
        if c.0[task] {
            slots += 1.0;
            total_bits += s.tasks[task].result_bits;
        } else {
            slots += 2.0;
            total_bits += s.tasks[task].upload_bits + s.tasks[task].result_bits;
        }
    }
    if slots == 0.0 || total_bits == 0.0 {
        return (alloc, 0.0);
    }

    let t_win = s.deadline_s;
    let mut energy = 0.0;
    for (&task, &channel) in state.task_idx.iter().zip(&state.channels) {
        let spec = &s.tasks[task];
        if !c.0[task] {
            let t_u = if equal_split {
                t_win / slots
            } else {
                t_win * spec.upload_bits / total_bits
            };
            alloc.t_u[task] += t_u;
            energy += transfer_energy(t_u, spec.upload_bits, channel, s);
        }
        let t_d = if equal_split {
            t_win / slots
        } else {
            t_win * spec.result_bits / total_bits
        };
        alloc.t_d[task] += t_d;
        energy += transfer_energy(t_d, spec.result_bits, channel, s);
    }
    // The server computes each distinct uncached task once.
    for task in 0..n {
        if !c.0[task] && requesters(state, task).count > 0 {
            energy += exec_energy_unit(task, s);
        }
    }
    (alloc, energy)
}

/// The split formulas applied over distinct active tasks, retaining the
/// shared upload / multicast download structure.
fn per_task_split(
    c: &CachingVector,
    state: &SystemState,
    equal_split: bool,
    s: &Scenario,
) -> (StateAllocation, f64) {
    let n = s.tasks.len();
    let mut alloc = StateAllocation::zeros(n);
    let mut slots = 0.0;
    let mut total_bits = 0.0;
    let mut active = vec![false; n];
    for (task, is_active) in active.iter_mut().enumerate() {
        if requesters(state, task).count == 0 {
            continue;
        }
        *is_active = true;
        if c.0[task] {
            slots += 1.0;
            total_bits += s.tasks[task].result_bits;
        } else {
            slots += 2.0;
            total_bits += s.tasks[task].upload_bits + s.tasks[task].result_bits;
        }
    }
    if slots == 0.0 || total_bits == 0.0 {
        return (alloc, 0.0);
    }

    let t_win = s.deadline_s;
    for (task, &is_active) in active.iter().enumerate() {
        if !is_active {
            continue;
        }
        let spec = &s.tasks[task];
        if !c.0[task] {
            alloc.t_u[task] = if equal_split {
                t_win / slots
            } else {
                t_win * spec.upload_bits / total_bits
            };
        }
        alloc.t_d[task] = if equal_split {
            t_win / slots
        } else {
            t_win * spec.result_bits / total_bits
        };
    }
    let energy = state_energy(c, &alloc, state, s);
    (alloc, energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristic::solve_suboptimal;
    use crate::scenario::{catalog, enumerate_states, TaskSpec};
    use approx::assert_relative_eq;

    fn two_task_scenario() -> Scenario {
        Scenario {
            num_mobiles: 2,
            tasks: catalog::tasks(2),
            bandwidth_hz: catalog::BANDWIDTH_HZ,
            noise_power_w: catalog::NOISE_POWER_W,
            switched_capacitance: catalog::SWITCHED_CAPACITANCE,
            cpu_freq_hz: catalog::CPU_FREQ_HZ,
            deadline_s: 0.08,
            cache_bits: 1e9,
            channel_states: vec![5e-7],
            channel_pmf: vec![1.0],
            task_pmf: vec![0.5, 0.5],
            zipf_gamma: None,
            enumeration_cap: 1 << 20,
            notes: Vec::new(),
        }
        .normalized()
        .unwrap()
    }

    fn find_state(s: &Scenario, tasks: &[usize]) -> usize {
        enumerate_states(s)
            .unwrap()
            .iter()
            .position(|st| st.task_idx == tasks)
            .expect("state present")
    }

    #[test]
    fn equal_split_no_cache_gives_quarter_windows() {
        let s = two_task_scenario();
        let report = solve_baseline(3, &s, None, BaselineReading::PerRequest).unwrap();
        let idx = find_state(&s, &[0, 1]);
        let alloc = &report.allocations[idx];
        let quarter = s.deadline_s / 4.0;
        for task in 0..2 {
            assert_relative_eq!(alloc.t_u[task], quarter, max_relative = 1e-15);
            assert_relative_eq!(alloc.t_d[task], quarter, max_relative = 1e-15);
        }
        report.validate_feasible(&s).unwrap();
    }

    #[test]
    fn equal_split_full_cache_gives_half_window_downloads() {
        let s = two_task_scenario();
        let all = CachingVector(vec![true, true]);
        let report = solve_baseline(1, &s, Some(&all), BaselineReading::PerRequest).unwrap();
        let idx = find_state(&s, &[0, 1]);
        let alloc = &report.allocations[idx];
        for task in 0..2 {
            assert_eq!(alloc.t_u[task], 0.0);
            assert_relative_eq!(alloc.t_d[task], s.deadline_s / 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn proportional_split_follows_payload_sizes() {
        let s = Scenario {
            num_mobiles: 1,
            tasks: vec![TaskSpec { upload_bits: 5e4, cpu_cycles: 1e8, result_bits: 3e4 }],
            bandwidth_hz: catalog::BANDWIDTH_HZ,
            noise_power_w: catalog::NOISE_POWER_W,
            switched_capacitance: catalog::SWITCHED_CAPACITANCE,
            cpu_freq_hz: catalog::CPU_FREQ_HZ,
            deadline_s: 0.08,
            cache_bits: 0.0,
            channel_states: vec![5e-7],
            channel_pmf: vec![1.0],
            task_pmf: vec![1.0],
            zipf_gamma: None,
            enumeration_cap: 1 << 20,
            notes: Vec::new(),
        }
        .normalized()
        .unwrap();
        let c = CachingVector::none(1);
        let report = solve_baseline(2, &s, Some(&c), BaselineReading::PerRequest).unwrap();
        let alloc = &report.allocations[0];
        assert_relative_eq!(alloc.t_u[0], s.deadline_s * 5.0 / 8.0, max_relative = 1e-15);
        assert_relative_eq!(alloc.t_d[0], s.deadline_s * 3.0 / 8.0, max_relative = 1e-15);
    }

    #[test]
    fn cached_ids_require_the_caching_vector() {
        let s = two_task_scenario();
        assert!(matches!(
            solve_baseline(1, &s, None, BaselineReading::PerRequest),
            Err(Error::MissingInput { .. })
        ));
        assert!(matches!(
            solve_baseline(5, &s, None, BaselineReading::PerRequest),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn caching_aware_baselines_beat_their_cacheless_twins() {
        let s = catalog::scenario(2, 3, 0.8, 0.08, 5e4).unwrap();
        let c_dagger = solve_suboptimal(&s).unwrap().caching;
        for reading in [BaselineReading::PerRequest, BaselineReading::PerTask] {
            let e = |id| {
                solve_baseline(id, &s, Some(&c_dagger), reading).unwrap().average_energy
            };
            assert!(e(1) <= e(3) + 1e-15);
            assert!(e(2) <= e(4) + 1e-15);
        }
    }

    #[test]
    fn every_baseline_uses_the_whole_window_exactly() {
        let s = catalog::scenario(2, 3, 0.8, 0.08, 5e4).unwrap();
        let c_dagger = solve_suboptimal(&s).unwrap().caching;
        for id in 1..=4 {
            for reading in [BaselineReading::PerRequest, BaselineReading::PerTask] {
                let report = solve_baseline(id, &s, Some(&c_dagger), reading).unwrap();
                report.validate_feasible(&s).unwrap();
                for alloc in &report.allocations {
                    let used: f64 = (0..3)
                        .map(|t| {
                            alloc.t_d[t]
                                + if report.caching.0[t] { 0.0 } else { alloc.t_u[t] }
                        })
                        .sum();
                    assert!(
                        (used - s.deadline_s).abs() <= 1e-12 * s.deadline_s,
                        "baseline {id} left slack: {used}"
                    );
                }
            }
        }
    }
}

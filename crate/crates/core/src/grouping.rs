//! Exact aggregation layers over the enumerated state space.
//!
//! Two observations make large state spaces tractable without any
//! approximation:
//!
//! * States that carry the same multiset of (task, channel) pairs are
//!   indistinguishable: they have identical probability, identical
//!   per-task channel extremes, and therefore identical subgradients and
//!   multiplier trajectories from a common start. One representative per
//!   *class* suffices for the dual iteration.
//! * Per-state optimal durations depend on the price only through
//!   `nu = lambda / p`, so states sharing the per-task (best, worst) channel
//!   signature — a *profile* — share their deadline-tight allocation. Only
//!   the total probability mass of the profile matters for expectations.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::energy::{exec_energy_unit, transfer_energy, CachingVector, StateAllocation};
use crate::error::Result;
use crate::scenario::{enumerate_states, Scenario, SystemState};
use crate::time_alloc::{tight_terms, unit_cost_terms, unit_duration, TransferTerm};

/// Per-task requester-channel signature shared by a set of states.
#[derive(Debug, Clone)]
pub struct Profile {
    /// `(best, worst)` channel per task; `None` when the task is unrequested.
    pub per_task: Vec<Option<(f64, f64)>>,
    /// Total probability mass of the states carrying this profile.
    pub mass: f64,
}

/// A maximal set of states sharing the same (task, channel) multiset.
#[derive(Debug, Clone)]
pub struct StateClass {
    /// Probability of each individual member state.
    pub probability: f64,
    /// Indices (into enumeration order) of the member states.
    pub members: Vec<u32>,
    /// Index of the profile this class maps onto.
    pub profile: usize,
}

/// The enumerated state space with both aggregation layers attached.
#[derive(Debug)]
pub struct StateSpace {
    pub states: Vec<SystemState>,
    pub classes: Vec<StateClass>,
    pub profiles: Vec<Profile>,
}

impl StateSpace {
    /// Enumerates and groups the state space of `s`. Class and profile
    /// indices follow first-encounter order over the deterministic
    /// enumeration, so the whole structure is reproducible.
    pub fn build(s: &Scenario) -> Result<StateSpace> {
        let states = enumerate_states(s)?;
        let n = s.tasks.len();

        let mut class_ids: HashMap<Vec<(u32, u64)>, usize> = HashMap::new();
        let mut profile_ids: HashMap<Vec<Option<(u64, u64)>>, usize> = HashMap::new();
        let mut classes: Vec<StateClass> = Vec::new();
        let mut profiles: Vec<Profile> = Vec::new();

        for (idx, st) in states.iter().enumerate() {
            let mut key: Vec<(u32, u64)> = st
                .task_idx
                .iter()
                .zip(&st.channels)
                .map(|(&t, &c)| (t as u32, c.to_bits()))
                .collect();
            key.sort_unstable();

            let next_id = classes.len();
            let class_id = *class_ids.entry(key).or_insert(next_id);
            if class_id == classes.len() {
                // New class: derive its profile signature.
                let mut per_task: Vec<Option<(f64, f64)>> = vec![None; n];
                for (&t, &c) in st.task_idx.iter().zip(&st.channels) {
                    let entry = per_task[t].get_or_insert((c, c));
                    entry.0 = entry.0.max(c);
                    entry.1 = entry.1.min(c);
                }
                let pkey: Vec<Option<(u64, u64)>> = per_task
                    .iter()
                    .map(|o| o.map(|(b, w)| (b.to_bits(), w.to_bits())))
                    .collect();
                let next_pid = profiles.len();
                let pid = *profile_ids.entry(pkey).or_insert(next_pid);
                if pid == profiles.len() {
                    profiles.push(Profile { per_task, mass: 0.0 });
                }
                classes.push(StateClass { probability: st.probability, members: Vec::new(), profile: pid });
            }
            classes[class_id].members.push(idx as u32);
        }

        for class in &classes {
            profiles[class.profile].mass += class.probability * class.members.len() as f64;
        }

        Ok(StateSpace { states, classes, profiles })
    }
}

/// Deadline-tight allocation of one profile in unit-probability space.
#[derive(Debug, Clone)]
pub struct ProfileAllocation {
    /// Durations per task (upload slot zero for cached or unrequested).
    pub t_u: Vec<f64>,
    pub t_d: Vec<f64>,
    /// Normalized price `nu`; the state-level multiplier is `p * nu`.
    pub nu: f64,
    /// State energy per unit probability at these durations.
    pub energy: f64,
}

impl Profile {
    /// Transfer terms this profile requires under placement `c`.
    fn terms(&self, c: &CachingVector, s: &Scenario) -> (Vec<TransferTerm>, Vec<(usize, bool)>) {
        let mut terms = Vec::new();
        let mut slots = Vec::new();
        for (task, sig) in self.per_task.iter().enumerate() {
            let Some((h_u, h_d)) = sig else { continue };
            if !c.0[task] {
                terms.push(TransferTerm { bits: s.tasks[task].upload_bits, channel: *h_u });
                slots.push((task, true));
            }
            terms.push(TransferTerm { bits: s.tasks[task].result_bits, channel: *h_d });
            slots.push((task, false));
        }
        (terms, slots)
    }

    /// Deadline-tight durations, price, and unit energy under placement `c`.
    pub fn tight_alloc(&self, c: &CachingVector, s: &Scenario) -> Result<ProfileAllocation> {
        let n = s.tasks.len();
        let (terms, slots) = self.terms(c, s);
        let (durations, nu) = tight_terms(&terms, s)?;
        let mut t_u = vec![0.0; n];
        let mut t_d = vec![0.0; n];
        for ((task, is_upload), d) in slots.into_iter().zip(durations) {
            if is_upload {
                t_u[task] = d;
            } else {
                t_d[task] = d;
            }
        }
        let energy = self.unit_energy(c, &t_u, &t_d, s);
        Ok(ProfileAllocation { t_u, t_d, nu, energy })
    }

    /// State energy per unit probability at the given durations.
    pub fn unit_energy(&self, c: &CachingVector, t_u: &[f64], t_d: &[f64], s: &Scenario) -> f64 {
        let mut total = 0.0;
        for (task, sig) in self.per_task.iter().enumerate() {
            let Some((h_u, h_d)) = sig else { continue };
            if !c.0[task] {
                total += transfer_energy(t_u[task], s.tasks[task].upload_bits, *h_u, s)
                    + exec_energy_unit(task, s);
            }
            total += transfer_energy(t_d[task], s.tasks[task].result_bits, *h_d, s);
        }
        total
    }

    /// Unit cost terms `(e1/p, e2/p)` for every task at normalized price
    /// `nu`; zero rows for unrequested tasks.
    pub fn unit_costs(&self, nu: f64, s: &Scenario) -> Vec<(f64, f64)> {
        self.per_task
            .iter()
            .enumerate()
            .map(|(task, sig)| match sig {
                None => (0.0, 0.0),
                Some((h_u, h_d)) => unit_cost_terms(task, *h_u, *h_d, nu, s),
            })
            .collect()
    }

    /// Price-optimal per-task durations at normalized price `nu` under `c`.
    pub fn unit_durations(&self, c: &CachingVector, nu: f64, s: &Scenario) -> (Vec<f64>, Vec<f64>) {
        let n = s.tasks.len();
        let mut t_u = vec![0.0; n];
        let mut t_d = vec![0.0; n];
        for (task, sig) in self.per_task.iter().enumerate() {
            let Some((h_u, h_d)) = sig else { continue };
            if !c.0[task] {
                t_u[task] = unit_duration(s.tasks[task].upload_bits, *h_u, nu, s);
            }
            t_d[task] = unit_duration(s.tasks[task].result_bits, *h_d, nu, s);
        }
        (t_u, t_d)
    }
}

/// Deadline-tight allocations for every profile under a fixed caching
/// vector, together with the mass-weighted average energy.
pub fn recover_policy(
    space: &StateSpace,
    c: &CachingVector,
    s: &Scenario,
) -> Result<(Vec<ProfileAllocation>, f64)> {
    let per_profile: Vec<ProfileAllocation> = space
        .profiles
        .par_iter()
        .with_min_len(8)
        .map(|p| p.tight_alloc(c, s))
        .collect::<Result<Vec<_>>>()?;
    let average =
        space.profiles.iter().zip(&per_profile).map(|(p, a)| p.mass * a.energy).sum();
    Ok((per_profile, average))
}

/// Expands per-profile allocations into the per-state policy vector.
pub fn expand_policy(space: &StateSpace, per_profile: &[ProfileAllocation]) -> Vec<StateAllocation> {
    let mut policy = vec![StateAllocation::zeros(0); space.states.len()];
    for class in &space.classes {
        let alloc = &per_profile[class.profile];
        for &m in &class.members {
            policy[m as usize] =
                StateAllocation { t_u: alloc.t_u.clone(), t_d: alloc.t_d.clone() };
        }
    }
    policy
}

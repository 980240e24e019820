//! The low-complexity suboptimal method: price the deadline with no
//! caching, pick a caching vector from one approximate knapsack solve at
//! those prices, then reallocate durations under the chosen caching. No
//! iteration is involved.

use crate::dual::MultiplierField;
use crate::energy::{CachingVector, StateAllocation};
use crate::error::Result;
use crate::grouping::{expand_policy, recover_policy, StateSpace};
use crate::knapsack::{build_instance, solve_exact_dp, solve_ext_greedy, KnapsackInstance};
use crate::report::{Method, SolveReport};
use crate::scenario::Scenario;

/// Deadline prices of the no-cache deadline-tight allocation: one `λ⁰† =
/// p·ν⁰†` per state, along with the allocation itself.
pub fn solve_nocache_multipliers(
    s: &Scenario,
) -> Result<(MultiplierField, Vec<StateAllocation>)> {
    let space = StateSpace::build(s)?;
    let none = CachingVector::none(s.tasks.len());
    let (per_profile, _) = recover_policy(&space, &none, s)?;
    let mut field = MultiplierField::zeros(space.states.len());
    for class in &space.classes {
        let nu = per_profile[class.profile].nu;
        for &member in &class.members {
            field.lambda[member as usize] = class.probability * nu;
        }
    }
    Ok((field, expand_policy(&space, &per_profile)))
}

/// The suboptimal pipeline with the Ext-Greedy caching step.
pub fn solve_suboptimal(s: &Scenario) -> Result<SolveReport> {
    solve_suboptimal_with(s, false)
}

/// As [`solve_suboptimal`]; `use_exact_dp` swaps the Ext-Greedy caching
/// step for the exact knapsack solver (an ablation that can only lower the
/// final energy).
pub fn solve_suboptimal_with(s: &Scenario, use_exact_dp: bool) -> Result<SolveReport> {
    let space = StateSpace::build(s)?;
    let n = s.tasks.len();
    let none = CachingVector::none(n);
    let (no_cache, _) = recover_policy(&space, &none, s)?;

    // Aggregate savings at the no-cache prices.
    let mut values = vec![0.0; n];
    for (profile, alloc) in space.profiles.iter().zip(&no_cache) {
        if profile.mass == 0.0 {
            continue;
        }
        for (task, (e1, _)) in profile.unit_costs(alloc.nu, s).into_iter().enumerate() {
            values[task] += profile.mass * e1;
        }
    }

    // Tasks with zero saving are never requested; keep them out of the
    // instance so the greedy packing cannot waste budget on them.
    let full = build_instance(std::slice::from_ref(&values), s);
    let kept: Vec<usize> = (0..n).filter(|&t| full.values[t] > 0.0).collect();
    let instance = KnapsackInstance {
        values: kept.iter().map(|&t| full.values[t]).collect(),
        weights: kept.iter().map(|&t| full.weights[t]).collect(),
        capacity: full.capacity,
    };
    let packed =
        if use_exact_dp { solve_exact_dp(&instance)? } else { solve_ext_greedy(&instance) };
    let mut caching = CachingVector::none(n);
    for (&slot, &task) in packed.0.iter().zip(&kept) {
        caching.0[task] = slot;
    }

    let (per_profile, average_energy) = recover_policy(&space, &caching, s)?;
    Ok(SolveReport {
        method: Method::Suboptimal,
        caching,
        allocations: expand_policy(&space, &per_profile),
        average_energy,
        dual_value: None,
        duality_gap_rel: None,
        iterations: 0,
        converged: true,
        subgradient_max_residual: None,
        trace: Vec::new(),
        notes: Vec::new(),
    })
}

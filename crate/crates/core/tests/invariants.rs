//! Randomized invariant checks across the solver stack: closed-form
//! durations, deadline-tight recovery, knapsack exactness, weak duality,
//! and end-to-end feasibility of every method.

use proptest::prelude::*;

use cachemec_core::{
    catalog, deadline_tight_alloc, dual_function, enumerate_states, optimal_duration,
    solve_baseline, solve_bruteforce, solve_exact_dp, solve_ext_greedy, solve_optimal,
    solve_suboptimal, subgradient, zipf_pmf, BaselineReading, CachingVector, DualParams,
    KnapsackInstance, MultiplierField, Scenario, TaskSpec,
};

const REL: f64 = 1e-9;

/// Small random scenarios (K ≤ 2, N ≤ 3, two channel states) with task
/// sizes quantized to 1 kbit so the knapsack unit reduction keeps the DP
/// table tiny.
fn arb_scenario() -> impl Strategy<Value = Scenario> {
    let task = (10u32..=90, 10u32..=90, 10u32..=50).prop_map(|(ju, je, jd)| TaskSpec {
        upload_bits: 1e3 * f64::from(ju),
        cpu_cycles: 1e3 * f64::from(je),
        result_bits: 1e3 * f64::from(jd),
    });
    (
        1usize..=2,
        prop::collection::vec(task, 1..=3),
        0.0f64..=2.0,
        0.02f64..=0.15,
        0.0f64..=1.0,
        1e-7f64..=1.5e-6,
        1.5f64..=4.0,
        0.1f64..=0.9,
    )
        .prop_map(|(k, tasks, gamma, t_win, cache_frac, y1, ratio, w)| {
            let total_result_bits: f64 = tasks.iter().map(|t| t.result_bits).sum();
            let n = tasks.len();
            Scenario {
                num_mobiles: k,
                tasks,
                bandwidth_hz: catalog::BANDWIDTH_HZ,
                noise_power_w: catalog::NOISE_POWER_W,
                switched_capacitance: catalog::SWITCHED_CAPACITANCE,
                cpu_freq_hz: catalog::CPU_FREQ_HZ,
                deadline_s: t_win,
                cache_bits: (cache_frac * total_result_bits).floor(),
                channel_states: vec![y1, y1 * ratio],
                channel_pmf: vec![w, 1.0 - w],
                task_pmf: zipf_pmf(n, gamma),
                zipf_gamma: Some(gamma),
                enumeration_cap: 10_000_000,
                notes: Vec::new(),
            }
            .normalized()
            .expect("generated scenario is valid")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_duration_stays_in_the_window_and_shrinks_with_price(
        bits in 1e3f64..=2e5,
        channel in 1e-7f64..=3e-6,
        lambda in 0.0f64..=1e-2,
        step in 1e-9f64..=1e-2,
        t_win in 0.02f64..=0.15,
    ) {
        let s = catalog::scenario(1, 1, 0.0, t_win, 0.0).unwrap();
        let t_lo = optimal_duration(1.0, bits, channel, lambda, true, &s);
        let t_hi = optimal_duration(1.0, bits, channel, lambda + step, true, &s);
        prop_assert!((0.0..=t_win).contains(&t_lo), "duration {t_lo} outside [0, {t_win}]");
        prop_assert!((0.0..=t_win).contains(&t_hi));
        prop_assert!(
            t_hi <= t_lo * (1.0 + REL),
            "duration grew with the price: {t_lo} -> {t_hi}"
        );
        prop_assert_eq!(optimal_duration(1.0, bits, channel, 0.0, true, &s), t_win);
    }

    #[test]
    fn knapsack_dp_matches_enumeration_and_greedy_is_half(
        items in prop::collection::vec((0.0f64..=10.0, 1u64..=30), 1..=10),
        cap_frac in 0.0f64..=1.0,
    ) {
        let total: u64 = items.iter().map(|(_, w)| w).sum();
        let inst = KnapsackInstance {
            values: items.iter().map(|(v, _)| *v).collect(),
            weights: items.iter().map(|(_, w)| *w).collect(),
            capacity: (cap_frac * total as f64) as u64,
        };

        let mut best = 0.0f64;
        for mask in 0u32..(1 << items.len()) {
            let mut value = 0.0;
            let mut weight = 0u64;
            for (i, (v, w)) in items.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    value += v;
                    weight += w;
                }
            }
            if weight <= inst.capacity {
                best = best.max(value);
            }
        }

        let dp = solve_exact_dp(&inst).unwrap();
        prop_assert!(inst.packed_weight(&dp) <= inst.capacity);
        let dp_value = inst.packed_value(&dp);
        prop_assert!(
            (dp_value - best).abs() <= REL * best.max(1.0),
            "DP value {dp_value} != exhaustive max {best}"
        );

        let greedy = solve_ext_greedy(&inst);
        prop_assert!(inst.packed_weight(&greedy) <= inst.capacity);
        prop_assert!(
            inst.packed_value(&greedy) >= 0.5 * best - 1e-12,
            "Ext-Greedy {} below half the optimum {best}",
            inst.packed_value(&greedy)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tight_recovery_fits_the_window_with_a_nonnegative_price(
        s in arb_scenario(),
        state_pick in 0usize..=1000,
        cache_mask in 0usize..=7,
    ) {
        let states = enumerate_states(&s).unwrap();
        let state = &states[state_pick % states.len()];
        let n = s.tasks.len();
        // Filter the caching pick down to placements that fit the budget.
        let mut c = CachingVector::none(n);
        for task in 0..n {
            if cache_mask >> task & 1 == 1 {
                c.0[task] = true;
                if !c.fits(&s) {
                    c.0[task] = false;
                }
            }
        }

        let (alloc, lambda) = deadline_tight_alloc(&c, state, &s).unwrap();
        prop_assert!(lambda >= 0.0 && lambda.is_finite());
        let mut used = 0.0;
        for task in 0..n {
            prop_assert!((0.0..=s.deadline_s * (1.0 + REL)).contains(&alloc.t_u[task]));
            prop_assert!((0.0..=s.deadline_s * (1.0 + REL)).contains(&alloc.t_d[task]));
            used += alloc.t_d[task] + if c.0[task] { 0.0 } else { alloc.t_u[task] };
        }
        prop_assert!(used <= s.deadline_s * (1.0 + REL), "used {used} > window {}", s.deadline_s);
        if lambda > 0.0 {
            // A positive price certifies the window is binding.
            prop_assert!(
                (used - s.deadline_s).abs() <= 1e-8 * s.deadline_s,
                "positive price but slack window: used {used} vs {}",
                s.deadline_s
            );
        }
    }

    #[test]
    fn weak_duality_holds_at_random_price_fields(
        s in arb_scenario(),
        raw_lambda in prop::collection::vec(0.0f64..=5e-3, 36),
    ) {
        let states = enumerate_states(&s).unwrap();
        let field = MultiplierField { lambda: raw_lambda[..states.len()].to_vec() };
        let (g, _, _) = dual_function(&field, &s).unwrap();

        let feasible = solve_suboptimal(&s).unwrap();
        feasible.validate_feasible(&s).unwrap();
        prop_assert!(
            g <= feasible.average_energy * (1.0 + REL) + 1e-15,
            "dual value {g} exceeds a feasible energy {}",
            feasible.average_energy
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn every_method_is_feasible_and_lower_bounded_by_the_oracle(s in arb_scenario()) {
        let oracle = solve_bruteforce(&s).unwrap();
        oracle.validate_feasible(&s).unwrap();

        let params = DualParams { max_iter: 1_500, ..DualParams::default() };
        let optimal = solve_optimal(&s, &params).unwrap();
        let suboptimal = solve_suboptimal(&s).unwrap();
        let c_dagger = suboptimal.caching.clone();

        let mut reports = vec![optimal, suboptimal];
        for id in 1..=4u8 {
            let placed = (id <= 2).then_some(&c_dagger);
            reports.push(solve_baseline(id, &s, placed, BaselineReading::default()).unwrap());
        }

        for report in &reports {
            report.validate_feasible(&s).unwrap();
            prop_assert!(
                oracle.average_energy <= report.average_energy * (1.0 + REL) + 1e-15,
                "{} energy {} beats the exhaustive optimum {}",
                report.method,
                report.average_energy,
                oracle.average_energy
            );
        }

        // The optimal method's dual bound must never exceed its primal value.
        let dual = reports[0].dual_value.unwrap();
        prop_assert!(dual <= reports[0].average_energy * (1.0 + REL) + 1e-15);
        prop_assert!(reports[0].duality_gap_rel.unwrap() >= -REL);
    }
}

#[test]
fn projected_subgradient_iterates_stay_feasible_and_below_the_primal() {
    let s = catalog::scenario(2, 3, 0.8, 0.06, 5e4).unwrap();
    let states = enumerate_states(&s).unwrap();
    let feasible = solve_suboptimal(&s).unwrap().average_energy;

    let mut field = MultiplierField::zeros(states.len());
    for iter in 1..=40usize {
        assert!(field.is_feasible(), "iterate {iter} left the nonnegative orthant");
        let (g, c_tilde, _) = dual_function(&field, &s).unwrap();
        assert!(
            g <= feasible * (1.0 + REL),
            "iterate {iter}: dual value {g} exceeds the feasible energy {feasible}"
        );
        let step = (1.0 + 10.0) / (iter as f64 + 10.0);
        for (l, state) in field.lambda.iter_mut().zip(&states) {
            let grad = subgradient(state, *l, &c_tilde, &s);
            *l = (*l + step * grad).max(0.0);
        }
    }
}

#[test]
fn zero_probability_tasks_are_handled_exactly() {
    let mut s = catalog::scenario(2, 3, 0.8, 0.08, 5e4).unwrap();
    s.task_pmf = vec![0.6, 0.4, 0.0];
    let s = s.normalized().unwrap();

    let oracle = solve_bruteforce(&s).unwrap();
    let params = DualParams { max_iter: 1_500, ..DualParams::default() };
    let optimal = solve_optimal(&s, &params).unwrap();
    optimal.validate_feasible(&s).unwrap();

    let rel = (optimal.average_energy - oracle.average_energy).abs()
        / oracle.average_energy.max(f64::EPSILON);
    assert!(
        rel <= 1e-3,
        "optimal {} vs oracle {} (rel {rel})",
        optimal.average_energy,
        oracle.average_energy
    );
}

#[test]
fn dual_trace_is_monotone_and_bounded_by_the_primal() {
    let s = catalog::scenario(2, 3, 0.8, 0.08, 5e4).unwrap();
    let params = DualParams { max_iter: 300, record_trace: true, ..DualParams::default() };
    let report = solve_optimal(&s, &params).unwrap();

    assert!(!report.trace.is_empty());
    assert!(report.trace.len() <= 300);
    for (i, row) in report.trace.iter().enumerate() {
        assert_eq!(row.iter, i + 1, "trace rows must be consecutive and 1-based");
        assert!(row.num_cached <= s.tasks.len());
        assert!(row.max_residual >= 0.0);
        if i > 0 {
            assert!(
                row.dual_value >= report.trace[i - 1].dual_value,
                "best-so-far dual regressed at iteration {}",
                row.iter
            );
        }
    }
    let dual = report.dual_value.unwrap();
    assert!(dual >= report.trace.last().unwrap().dual_value - 1e-15);
    assert!(dual <= report.average_energy * (1.0 + REL));
}

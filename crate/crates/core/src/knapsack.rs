//! The caching master problem as a 0/1 knapsack: an exact dynamic-programming
//! solver and the Ext-Greedy 1/2-approximation.

use crate::energy::CachingVector;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Default cap on DP table cells.
pub const DEFAULT_TABLE_CAP: u64 = 10_000_000;

/// Absolute tolerance under which two packing values count as tied.
pub const VALUE_TIE_TOL: f64 = 1e-12;

/// A 0/1 knapsack over the task catalog: cache a task (weight = result
/// bits) to collect its aggregated saving.
#[derive(Debug, Clone)]
pub struct KnapsackInstance {
    /// Nonnegative saving per task.
    pub values: Vec<f64>,
    /// Positive weight per task, in bits.
    pub weights: Vec<u64>,
    /// Cache budget in bits.
    pub capacity: u64,
}

impl KnapsackInstance {
    /// Total value of a placement.
    pub fn packed_value(&self, c: &CachingVector) -> f64 {
        c.0.iter().zip(&self.values).filter(|(&b, _)| b).map(|(_, v)| v).sum()
    }

    /// Total weight of a placement.
    pub fn packed_weight(&self, c: &CachingVector) -> u64 {
        c.0.iter().zip(&self.weights).filter(|(&b, _)| b).map(|(_, w)| w).sum()
    }
}

/// Aggregates per-state saving rows into a knapsack instance:
/// `value[n] = sum over states of e1[state][n]`, weights are the result
/// sizes, capacity is the cache budget.
pub fn build_instance(per_state_e1: &[Vec<f64>], s: &Scenario) -> KnapsackInstance {
    let n = s.tasks.len();
    let mut values = vec![0.0; n];
    for row in per_state_e1 {
        debug_assert_eq!(row.len(), n);
        for (v, &e1) in values.iter_mut().zip(row) {
            *v += e1;
        }
    }
    KnapsackInstance {
        values,
        weights: s.tasks.iter().map(|t| t.result_bits.round().max(1.0) as u64).collect(),
        capacity: s.cache_bits.max(0.0).floor() as u64,
    }
}

/// Exact DP solver. Weights and capacity are reduced by the weights' gcd;
/// ties within [`VALUE_TIE_TOL`] are broken toward the lexicographically
/// smallest placement (earlier tasks uncached first).
pub fn solve_exact_dp(inst: &KnapsackInstance) -> Result<CachingVector> {
    solve_exact_dp_capped(inst, DEFAULT_TABLE_CAP)
}

/// As [`solve_exact_dp`] with an explicit table cap.
pub fn solve_exact_dp_capped(inst: &KnapsackInstance, table_cap: u64) -> Result<CachingVector> {
    let n = inst.values.len();
    if n == 0 {
        return Ok(CachingVector(Vec::new()));
    }
    debug_assert!(inst.values.iter().all(|&v| v >= 0.0));
    debug_assert!(inst.weights.iter().all(|&w| w > 0));

    let g = inst.weights.iter().fold(0u64, |acc, &w| gcd(acc, w.max(1)));
    let weights: Vec<u64> = inst.weights.iter().map(|&w| w.max(1) / g).collect();
    let cap = (inst.capacity / g) as usize;

    let cells = (n as u128 + 1) * (cap as u128 + 1);
    if cells > table_cap as u128 {
        return Err(Error::KnapsackTable { cells, cap: table_cap });
    }

    // Suffix-value table: row i holds the best value achievable with items
    // i..n, so the reconstruction walk can prefer *skipping* early items on
    // ties, which yields the lexicographically smallest placement.
    let width = cap + 1;
    let mut table = vec![0.0f64; (n + 1) * width];
    for i in (0..n).rev() {
        let w_i = weights[i] as usize;
        let v_i = inst.values[i];
        let (row_i, row_next) = table[i * width..].split_at_mut(width);
        for w in 0..width {
            let skip = row_next[w];
            row_i[w] = if w_i <= w {
                let take = v_i + row_next[w - w_i];
                if take > skip { take } else { skip }
            } else {
                skip
            };
        }
    }

    let mut c = vec![false; n];
    let mut w = cap;
    for i in 0..n {
        let w_i = weights[i] as usize;
        if w_i <= w {
            let skip = table[(i + 1) * width + w];
            let take = inst.values[i] + table[(i + 1) * width + (w - w_i)];
            if take > skip + VALUE_TIE_TOL {
                c[i] = true;
                w -= w_i;
            }
        }
    }
    Ok(CachingVector(c))
}

/// Ext-Greedy 1/2-approximation: density-ordered greedy packing (skipping
/// items that do not fit) versus the single most valuable fitting item;
/// the better of the two is returned (the greedy packing on ties).
pub fn solve_ext_greedy(inst: &KnapsackInstance) -> CachingVector {
    let n = inst.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let da = inst.values[a] / inst.weights[a].max(1) as f64;
        let db = inst.values[b] / inst.weights[b].max(1) as f64;
        db.partial_cmp(&da).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });

    let mut greedy = vec![false; n];
    let mut room = inst.capacity;
    let mut greedy_value = 0.0;
    for &i in &order {
        let w = inst.weights[i].max(1);
        if w <= room {
            greedy[i] = true;
            room -= w;
            greedy_value += inst.values[i];
        }
    }

    let mut best_single: Option<usize> = None;
    for i in 0..n {
        if inst.weights[i].max(1) <= inst.capacity {
            let better = match best_single {
                None => true,
                Some(j) => inst.values[i] > inst.values[j],
            };
            if better {
                best_single = Some(i);
            }
        }
    }

    match best_single {
        Some(i) if inst.values[i] > greedy_value => {
            let mut c = vec![false; n];
            c[i] = true;
            CachingVector(c)
        }
        _ => CachingVector(greedy),
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd(b % a, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::catalog;

    fn inst(values: Vec<f64>, weights: Vec<u64>, capacity: u64) -> KnapsackInstance {
        KnapsackInstance { values, weights, capacity }
    }

    fn brute_force(i: &KnapsackInstance) -> f64 {
        let n = i.values.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let mut w = 0u64;
            let mut v = 0.0;
            for b in 0..n {
                if mask >> b & 1 == 1 {
                    w += i.weights[b];
                    v += i.values[b];
                }
            }
            if w <= i.capacity && v > best {
                best = v;
            }
        }
        best
    }

    #[test]
    fn zero_capacity_selects_nothing() {
        let i = inst(vec![5.0, 3.0], vec![2, 1], 0);
        assert_eq!(solve_exact_dp(&i).unwrap().0, vec![false, false]);
        assert_eq!(solve_ext_greedy(&i).0, vec![false, false]);
    }

    #[test]
    fn single_fitting_item_is_selected() {
        let i = inst(vec![5.0], vec![2], 2);
        assert_eq!(solve_exact_dp(&i).unwrap().0, vec![true]);
    }

    #[test]
    fn dp_matches_bruteforce_on_random_instances() {
        // Deterministic linear-congruential draws; values in [0, 10),
        // weights in [1, 50].
        let mut seed = 0x2545_f491_4f6c_dd1du64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..50 {
            let n = 10;
            let values: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();
            let weights: Vec<u64> = (0..n).map(|_| 1 + (next() * 49.0) as u64).collect();
            let capacity = (weights.iter().sum::<u64>() as f64 * next()) as u64;
            let i = inst(values, weights, capacity);
            let c = solve_exact_dp(&i).unwrap();
            assert!(i.packed_weight(&c) <= i.capacity);
            let got = i.packed_value(&c);
            let want = brute_force(&i);
            assert!((got - want).abs() <= 1e-9, "dp {got} vs brute {want}");
        }
    }

    #[test]
    fn ext_greedy_overcomes_density_trap() {
        // Greedy-by-density grabs the light dust item; the single-best rule
        // must still recover the valuable heavy one.
        let c_bits = 100;
        let i = inst(vec![0.001, 50.0], vec![1, c_bits], c_bits);
        let c = solve_ext_greedy(&i);
        assert!(i.packed_value(&c) >= 50.0);
    }

    #[test]
    fn dp_tie_break_is_lexicographically_smallest() {
        // Items 0 and 1 are interchangeable; skipping item 0 first is the
        // lexicographically smaller optimal placement.
        let i = inst(vec![2.0, 2.0], vec![3, 3], 3);
        assert_eq!(solve_exact_dp(&i).unwrap().0, vec![false, true]);
    }

    #[test]
    fn build_instance_sums_rows() {
        let s = catalog::scenario(2, 3, 0.8, 0.08, 5e4).unwrap();
        let rows = vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.25, 0.125]];
        let i = build_instance(&rows, &s);
        assert_eq!(i.values, vec![1.5, 2.25, 3.125]);
        assert_eq!(i.weights, vec![30_000, 50_000, 70_000]);
        assert_eq!(i.capacity, 50_000);
    }

    #[test]
    fn dp_table_cap_is_enforced() {
        let i = inst(vec![1.0, 1.0], vec![1, 3], 1_000_000);
        assert!(matches!(
            solve_exact_dp_capped(&i, 100),
            Err(Error::KnapsackTable { .. })
        ));
    }

    #[test]
    fn capacity_monotonicity() {
        let i0 = inst(vec![4.0, 7.0, 2.5], vec![10, 20, 5], 0);
        let mut prev = 0.0;
        for cap in (0..=40).step_by(5) {
            let mut i = i0.clone();
            i.capacity = cap;
            let v = i.packed_value(&solve_exact_dp(&i).unwrap());
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}

//! Closed-form per-task time allocation under a linear time price, and the
//! deadline-tight per-state allocation obtained by bisecting that price.

use crate::energy::{exec_energy_unit, transfer_energy, CachingVector, StateAllocation};
use crate::error::Result;
use crate::numerics::{bisect_decreasing, lambert_w0, BisectionSpec, NEG_INV_E};
use crate::scenario::{requesters, Scenario, SystemState};

/// Duration that minimizes `p * (t / channel) * rate_power(bits / t) +
/// lambda * t` over `t in (0, T]`, clipped to the window:
///
/// `min{K_n, 1} * max{ min{ bits ln2 / (B (W(a) + 1)), T }, 0 }` with
/// `a = (lambda * channel / p - n0) / (n0 e)`.
///
/// At `lambda = 0` the Lambert argument degenerates to `-1/e`, `W = -1`, and
/// the unclipped duration is `+inf`, so the whole window `T` is returned.
pub fn optimal_duration(
    p: f64,
    bits: f64,
    channel: f64,
    lambda: f64,
    active: bool,
    s: &Scenario,
) -> f64 {
    if !active {
        return 0.0;
    }
    debug_assert!(bits > 0.0 && channel > 0.0 && lambda >= 0.0);
    unit_duration(bits, channel, price_ratio(lambda, p), s)
}

/// `lambda / p` with the zero-probability limits: a state of probability
/// zero contributes no energy, so a positive price shrinks its durations to
/// the lower clip and a zero price leaves them at the upper clip.
fn price_ratio(lambda: f64, p: f64) -> f64 {
    if p > 0.0 {
        lambda / p
    } else if lambda > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Closed-form duration in the normalized price `nu = lambda / p`.
pub(crate) fn unit_duration(bits: f64, channel: f64, nu: f64, s: &Scenario) -> f64 {
    if nu <= 0.0 {
        return s.deadline_s;
    }
    if nu.is_infinite() {
        return 0.0;
    }
    let arg = ((nu * channel - s.noise_power_w) / (s.noise_power_w * std::f64::consts::E))
        .max(NEG_INV_E);
    let w = lambert_w0(arg).expect("argument clamped into the W domain");
    let denom = w + 1.0;
    if denom <= 0.0 {
        return s.deadline_s;
    }
    let t = bits * std::f64::consts::LN_2 / (s.bandwidth_hz * denom);
    t.min(s.deadline_s).max(0.0)
}

/// Price-optimal uploading and downloading durations for one task:
/// `t_u = (1 - c) * optimal_duration(L_u, best channel)`,
/// `t_d = optimal_duration(L_d, worst channel)`. Both are zero when nobody
/// requests the task.
pub fn task_durations(
    cached: bool,
    task: usize,
    state: &SystemState,
    lambda: f64,
    s: &Scenario,
) -> (f64, f64) {
    let req = requesters(state, task);
    let (Some(h_u), Some(h_d)) = (req.best_channel, req.worst_channel) else {
        return (0.0, 0.0);
    };
    let p = state.probability;
    let t_u = if cached {
        0.0
    } else {
        optimal_duration(p, s.tasks[task].upload_bits, h_u, lambda, true, s)
    };
    let t_d = optimal_duration(p, s.tasks[task].result_bits, h_d, lambda, true, s);
    (t_u, t_d)
}

/// Price-optimal cost terms for one task at state price `lambda`:
///
/// `e1 = p * (E_u(f_u) + E_e) + lambda * f_u` (uploading + executing side,
/// evaluated at its own optimal duration `f_u`), and
/// `e2 = p * E_d(f_d) + lambda * f_d` (downloading side). The price-relaxed
/// per-task optimum is `(1 - c) * e1 + e2`.
pub fn task_cost_terms(task: usize, state: &SystemState, lambda: f64, s: &Scenario) -> (f64, f64) {
    let req = requesters(state, task);
    let (Some(h_u), Some(h_d)) = (req.best_channel, req.worst_channel) else {
        return (0.0, 0.0);
    };
    let p = state.probability;
    let nu = price_ratio(lambda, p);
    let (e1, e2) = unit_cost_terms(task, h_u, h_d, nu, s);
    (p * e1, p * e2)
}

/// Cost terms per unit probability: `e1 / p` and `e2 / p` as functions of
/// the normalized price `nu = lambda / p`.
pub(crate) fn unit_cost_terms(task: usize, h_u: f64, h_d: f64, nu: f64, s: &Scenario) -> (f64, f64) {
    let (_, _, e1, e2) = unit_terms(task, h_u, h_d, nu, s);
    (e1, e2)
}

/// Price-optimal durations and cost terms per unit probability in one
/// evaluation: `(t_u, t_d, e1 / p, e2 / p)` at normalized price `nu`.
pub(crate) fn unit_terms(task: usize, h_u: f64, h_d: f64, nu: f64, s: &Scenario) -> (f64, f64, f64, f64) {
    let spec = &s.tasks[task];
    let f_u = unit_duration(spec.upload_bits, h_u, nu, s);
    let f_d = unit_duration(spec.result_bits, h_d, nu, s);
    let e1 = transfer_energy(f_u, spec.upload_bits, h_u, s) + exec_energy_unit(task, s) + nu * f_u;
    let e2 = transfer_energy(f_d, spec.result_bits, h_d, s) + nu * f_d;
    (f_u, f_d, e1, e2)
}

/// One required transmission inside a state: payload size and the channel it
/// uses.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TransferTerm {
    pub bits: f64,
    pub channel: f64,
}

/// Deadline-tight durations for a list of transfer terms sharing one window:
/// returns per-term durations and the normalized price `nu` at which they
/// either fit slackly (`nu = 0`) or use exactly `T`.
pub(crate) fn tight_terms(terms: &[TransferTerm], s: &Scenario) -> Result<(Vec<f64>, f64)> {
    let t_win = s.deadline_s;
    if terms.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    // At nu = 0 every duration clips to T, so the budget is slack iff there
    // is at most one term.
    if terms.len() == 1 {
        return Ok((vec![t_win], 0.0));
    }

    let used = |nu: f64| -> f64 {
        terms.iter().map(|t| unit_duration(t.bits, t.channel, nu, s)).sum()
    };

    // Analytic upper bracket: nu_up forces every term to at most T/M, hence
    // the sum to at most T. Solving t(nu) <= T/M for one term gives
    // w0 = M L ln2 / (B T) - 1 and nu >= n0 (1 + e w0 e^w0) / channel.
    let m = terms.len() as f64;
    let mut nu_up = 0.0f64;
    for t in terms {
        let w0 = m * t.bits * std::f64::consts::LN_2 / (s.bandwidth_hz * t_win) - 1.0;
        let cand = if w0 > 700.0 {
            f64::MAX / 4.0
        } else {
            s.noise_power_w * (1.0 + std::f64::consts::E * w0 * w0.exp()) / t.channel
        };
        nu_up = nu_up.max(cand);
    }

    let spec = BisectionSpec {
        lower: 0.0,
        upper: nu_up.max(f64::MIN_POSITIVE),
        tolerance: 1e-9 * t_win,
        max_iterations: 200,
    };
    let out = bisect_decreasing(used, t_win, &spec)?;
    let durations = terms
        .iter()
        .map(|t| unit_duration(t.bits, t.channel, out.root, s))
        .collect();
    Ok((durations, out.root))
}

/// Optimal per-state allocation under the deadline: if the unpriced
/// durations (everything at `T`) already fit the window, they are returned
/// with a zero price; otherwise the state price is bisected until the used
/// time equals `T` within `1e-9 * T`. Returns the allocation and the state
/// multiplier `lambda = p * nu`.
pub fn deadline_tight_alloc(
    c: &CachingVector,
    state: &SystemState,
    s: &Scenario,
) -> Result<(StateAllocation, f64)> {
    let n = s.tasks.len();
    let mut terms = Vec::new();
    let mut slots = Vec::new(); // (task, is_upload)
    for task in 0..n {
        let req = requesters(state, task);
        let (Some(h_u), Some(h_d)) = (req.best_channel, req.worst_channel) else {
            continue;
        };
        if !c.0[task] {
            terms.push(TransferTerm { bits: s.tasks[task].upload_bits, channel: h_u });
            slots.push((task, true));
        }
        terms.push(TransferTerm { bits: s.tasks[task].result_bits, channel: h_d });
        slots.push((task, false));
    }

    let (durations, nu) = tight_terms(&terms, s)?;
    let mut alloc = StateAllocation::zeros(n);
    for ((task, is_upload), d) in slots.into_iter().zip(durations) {
        if is_upload {
            alloc.t_u[task] = d;
        } else {
            alloc.t_d[task] = d;
        }
    }
    let lambda = if state.probability > 0.0 { state.probability * nu } else { 0.0 };
    Ok((alloc, lambda))
}

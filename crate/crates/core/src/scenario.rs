//! Problem instances: system constants, the task catalog, probability laws,
//! and exact enumeration of the joint (task, channel) system-state space.

use serde::Deserialize;

use crate::error::{Error, Result};

/// One computation task, characterized by its input size, its workload, and
/// its result size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    /// Input bits a mobile must upload before the task can run.
    pub upload_bits: f64,
    /// CPU cycles the server spends executing the task.
    pub cpu_cycles: f64,
    /// Result bits the server sends back; also the cache footprint.
    pub result_bits: f64,
}

impl TaskSpec {
    fn validate(&self, index: usize) -> Result<()> {
        for (name, v) in [
            ("L_u", self.upload_bits),
            ("L_e", self.cpu_cycles),
            ("L_d", self.result_bits),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "task {} has non-positive {name} = {v}",
                    index + 1
                )));
            }
        }
        Ok(())
    }
}

/// Default cap on the number of enumerated system states.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// An immutable problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Number of mobiles K.
    pub num_mobiles: usize,
    /// Task catalog (N entries).
    pub tasks: Vec<TaskSpec>,
    /// Channel bandwidth B in Hz.
    pub bandwidth_hz: f64,
    /// Receiver noise power n0 in W.
    pub noise_power_w: f64,
    /// Switched capacitance of the server CPU.
    pub switched_capacitance: f64,
    /// Server CPU frequency in cycles/s.
    pub cpu_freq_hz: f64,
    /// Per-state transmission deadline T in seconds.
    pub deadline_s: f64,
    /// Cache budget C in bits.
    pub cache_bits: f64,
    /// Distinct channel power values.
    pub channel_states: Vec<f64>,
    /// Probability of each channel state (shared by all mobiles).
    pub channel_pmf: Vec<f64>,
    /// Probability of each task being requested (shared by all mobiles).
    pub task_pmf: Vec<f64>,
    /// Zipf exponent the task pmf was derived from, when applicable.
    pub zipf_gamma: Option<f64>,
    /// Cap on the enumerated state count.
    pub enumeration_cap: u64,
    /// Metadata notes (e.g. pmf normalization) surfaced in reports.
    pub notes: Vec<String>,
}

/// One realization of the joint system state: every mobile's requested task
/// and channel power, with the product probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Requested task index (0-based) per mobile.
    pub task_idx: Vec<usize>,
    /// Channel power value per mobile.
    pub channels: Vec<f64>,
    /// Product probability of this realization.
    pub probability: f64,
}

/// Requester summary for one task in one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRequest {
    /// Number of mobiles requesting the task.
    pub count: usize,
    /// Best channel among the requesters; `None` when nobody requests it.
    pub best_channel: Option<f64>,
    /// Worst channel among the requesters; `None` when nobody requests it.
    pub worst_channel: Option<f64>,
}

/// Zipf popularity law over `n_tasks` ranks: entry n (1-based) is
/// proportional to `n^-gamma`.
pub fn zipf_pmf(n_tasks: usize, gamma: f64) -> Vec<f64> {
    assert!(n_tasks >= 1, "zipf_pmf needs at least one task");
    assert!(gamma >= 0.0, "zipf_pmf needs a nonnegative exponent");
    let weights: Vec<f64> = (1..=n_tasks).map(|n| (n as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Enumerates all `(N * |H|)^K` joint states in deterministic lexicographic
/// order (mobile 0 outermost; task index major, channel index minor).
pub fn enumerate_states(s: &Scenario) -> Result<Vec<SystemState>> {
    let n = s.tasks.len() as u128;
    let h = s.channel_states.len() as u128;
    let per_mobile = n * h;
    let required = per_mobile
        .checked_pow(s.num_mobiles as u32)
        .ok_or(Error::EnumerationCap { required: u128::MAX, cap: s.enumeration_cap })?;
    if required > s.enumeration_cap as u128 {
        return Err(Error::EnumerationCap { required, cap: s.enumeration_cap });
    }

    let k = s.num_mobiles;
    let mut states = Vec::with_capacity(required as usize);
    let mut digits = vec![0usize; k];
    let per_mobile = per_mobile as usize;
    loop {
        let mut task_idx = Vec::with_capacity(k);
        let mut channels = Vec::with_capacity(k);
        let mut probability = 1.0;
        for &d in &digits {
            let ti = d / s.channel_states.len();
            let ci = d % s.channel_states.len();
            task_idx.push(ti);
            channels.push(s.channel_states[ci]);
            probability *= s.task_pmf[ti] * s.channel_pmf[ci];
        }
        states.push(SystemState { task_idx, channels, probability });

        // Odometer increment, last mobile fastest.
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(states);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < per_mobile {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Requester count and channel extremes for `task` in `state`: the best
/// channel is used for the single upload, the worst for the multicast
/// download.
pub fn requesters(state: &SystemState, task: usize) -> TaskRequest {
    let mut count = 0;
    let mut best = f64::NEG_INFINITY;
    let mut worst = f64::INFINITY;
    for (t, &ch) in state.task_idx.iter().zip(&state.channels) {
        if *t == task {
            count += 1;
            best = best.max(ch);
            worst = worst.min(ch);
        }
    }
    if count == 0 {
        TaskRequest { count: 0, best_channel: None, worst_channel: None }
    } else {
        TaskRequest { count, best_channel: Some(best), worst_channel: Some(worst) }
    }
}

impl Scenario {
    /// Validates invariants and normalizes both pmfs (a sum within
    /// [0.9, 1.1] is rescaled to 1 and noted; anything else is rejected).
    pub fn normalized(mut self) -> Result<Self> {
        if self.num_mobiles == 0 {
            return Err(Error::InvalidScenario("K must be at least 1".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::InvalidScenario("task catalog is empty".into()));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate(i)?;
        }
        for (name, v) in [
            ("B", self.bandwidth_hz),
            ("n0", self.noise_power_w),
            ("F_b", self.cpu_freq_hz),
            ("T", self.deadline_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.switched_capacitance >= 0.0) {
            return Err(Error::InvalidScenario("mu must be nonnegative".into()));
        }
        if !(self.cache_bits >= 0.0) {
            return Err(Error::InvalidScenario("C must be nonnegative".into()));
        }
        if self.channel_states.is_empty() {
            return Err(Error::InvalidScenario("channel_states is empty".into()));
        }
        for &y in &self.channel_states {
            if !(y > 0.0) || !y.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "channel states must be positive, got {y}"
                )));
            }
        }
        for i in 0..self.channel_states.len() {
            for j in (i + 1)..self.channel_states.len() {
                if self.channel_states[i] == self.channel_states[j] {
                    return Err(Error::InvalidScenario(format!(
                        "channel states must be distinct, {} repeats",
                        self.channel_states[i]
                    )));
                }
            }
        }

        normalize_pmf(&mut self.channel_pmf, "channel_pmf", self.channel_states.len(), &mut self.notes)?;
        normalize_pmf(&mut self.task_pmf, "task_pmf", self.tasks.len(), &mut self.notes)?;
        Ok(self)
    }

    /// Total number of joint states this scenario enumerates.
    pub fn num_states(&self) -> u128 {
        let per_mobile = (self.tasks.len() * self.channel_states.len()) as u128;
        per_mobile.pow(self.num_mobiles as u32)
    }

    /// Parses a scenario from its JSON document. With `reference_defaults`
    /// the bundled catalog (task sizes, channel setup, radio constants) fills
    /// any omitted field, so a config may specify as little as `{K, N, T_s,
    /// C_bits, zipf_gamma}`.
    pub fn from_json_str(text: &str, reference_defaults: bool) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidScenario(e.to_string()))?;
        file.into_scenario(reference_defaults)
    }
}

fn normalize_pmf(pmf: &mut [f64], name: &str, expected_len: usize, notes: &mut Vec<String>) -> Result<()> {
    if pmf.len() != expected_len {
        return Err(Error::InvalidScenario(format!(
            "{name} has {} entries, expected {expected_len}",
            pmf.len()
        )));
    }
    for &p in pmf.iter() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidScenario(format!("{name} entries must be nonnegative, got {p}")));
        }
    }
    let sum: f64 = pmf.iter().sum();
    if !(0.9..=1.1).contains(&sum) {
        return Err(Error::InvalidScenario(format!(
            "{name} sums to {sum}, outside the normalizable band [0.9, 1.1]"
        )));
    }
    if (sum - 1.0).abs() > 1e-12 {
        for p in pmf.iter_mut() {
            *p /= sum;
        }
        notes.push(format!("{name} summed to {sum}; normalized to 1"));
    }
    Ok(())
}

/// Reference system constants used throughout the bundled experiment setup.
pub mod catalog {
    use super::TaskSpec;

    pub const BANDWIDTH_HZ: f64 = 1e7;
    pub const NOISE_POWER_W: f64 = 1e-9;
    pub const SWITCHED_CAPACITANCE: f64 = 1e-30;
    pub const CPU_FREQ_HZ: f64 = 6e9;

    /// The two-level channel setup: power values and their (unnormalized)
    /// probabilities.
    pub fn channels() -> (Vec<f64>, Vec<f64>) {
        (vec![5e-7, 1.5e-6], vec![0.7015, 0.2581])
    }

    /// Parametric task catalog: for 1-based rank n,
    /// `L_u = 4e4 n + 1e4`, `L_d = 2e4 n + 1e4`, `L_e = 4e4 n + 1e4`.
    pub fn tasks(n_tasks: usize) -> Vec<TaskSpec> {
        (1..=n_tasks)
            .map(|n| TaskSpec {
                upload_bits: 4e4 * n as f64 + 1e4,
                cpu_cycles: 4e4 * n as f64 + 1e4,
                result_bits: 2e4 * n as f64 + 1e4,
            })
            .collect()
    }

    /// Complete scenario from the reference catalog.
    pub fn scenario(
        num_mobiles: usize,
        n_tasks: usize,
        zipf_gamma: f64,
        deadline_s: f64,
        cache_bits: f64,
    ) -> crate::error::Result<super::Scenario> {
        let (channel_states, channel_pmf) = channels();
        super::Scenario {
            num_mobiles,
            tasks: tasks(n_tasks),
            bandwidth_hz: BANDWIDTH_HZ,
            noise_power_w: NOISE_POWER_W,
            switched_capacitance: SWITCHED_CAPACITANCE,
            cpu_freq_hz: CPU_FREQ_HZ,
            deadline_s,
            cache_bits,
            channel_states,
            channel_pmf,
            task_pmf: super::zipf_pmf(n_tasks, zipf_gamma),
            zipf_gamma: Some(zipf_gamma),
            enumeration_cap: super::DEFAULT_ENUMERATION_CAP,
            notes: Vec::new(),
        }
        .normalized()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    #[serde(rename = "L_u")]
    l_u: f64,
    #[serde(rename = "L_e")]
    l_e: f64,
    #[serde(rename = "L_d")]
    l_d: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "B_hz")]
    b_hz: Option<f64>,
    n0_w: Option<f64>,
    mu: Option<f64>,
    #[serde(rename = "F_b")]
    f_b: Option<f64>,
    #[serde(rename = "T_s")]
    t_s: f64,
    #[serde(rename = "C_bits")]
    c_bits: f64,
    tasks: Option<Vec<TaskFile>>,
    channel_states: Option<Vec<f64>>,
    channel_pmf: Option<Vec<f64>>,
    zipf_gamma: Option<f64>,
    task_pmf: Option<Vec<f64>>,
    enumeration_cap: Option<u64>,
}

impl ScenarioFile {
    fn into_scenario(self, reference_defaults: bool) -> Result<Scenario> {
        let missing = |field: &str| {
            Error::InvalidScenario(format!(
                "missing field `{field}` (supply it or enable the reference catalog)"
            ))
        };

        let tasks: Vec<TaskSpec> = match (self.tasks, reference_defaults) {
            (Some(ts), _) => ts
                .into_iter()
                .map(|t| TaskSpec { upload_bits: t.l_u, cpu_cycles: t.l_e, result_bits: t.l_d })
                .collect(),
            (None, true) => catalog::tasks(self.n.ok_or_else(|| missing("tasks (or N)"))?),
            (None, false) => return Err(missing("tasks")),
        };
        if let Some(n) = self.n {
            if n != tasks.len() {
                return Err(Error::InvalidScenario(format!(
                    "N = {n} disagrees with the {} supplied tasks",
                    tasks.len()
                )));
            }
        }

        let (channel_states, channel_pmf) = match (self.channel_states, self.channel_pmf) {
            (Some(cs), Some(cp)) => (cs, cp),
            (None, None) if reference_defaults => catalog::channels(),
            (Some(cs), None) if reference_defaults && cs.len() == 2 => {
                let (_, cp) = catalog::channels();
                (cs, cp)
            }
            _ => return Err(missing("channel_states/channel_pmf")),
        };

        let task_pmf = match (&self.task_pmf, self.zipf_gamma) {
            (Some(pmf), None) => pmf.clone(),
            (None, Some(gamma)) => {
                if !(gamma >= 0.0) {
                    return Err(Error::InvalidScenario(format!(
                        "zipf_gamma must be nonnegative, got {gamma}"
                    )));
                }
                zipf_pmf(tasks.len(), gamma)
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidScenario(
                    "give either task_pmf or zipf_gamma, not both".into(),
                ))
            }
            (None, None) => return Err(missing("task_pmf or zipf_gamma")),
        };

        let defaulted = |v: Option<f64>, d: f64, field: &str| -> Result<f64> {
            match v {
                Some(x) => Ok(x),
                None if reference_defaults => Ok(d),
                None => Err(missing(field)),
            }
        };

        Scenario {
            num_mobiles: self.k,
            tasks,
            bandwidth_hz: defaulted(self.b_hz, catalog::BANDWIDTH_HZ, "B_hz")?,
            noise_power_w: defaulted(self.n0_w, catalog::NOISE_POWER_W, "n0_w")?,
            switched_capacitance: defaulted(self.mu, catalog::SWITCHED_CAPACITANCE, "mu")?,
            cpu_freq_hz: defaulted(self.f_b, catalog::CPU_FREQ_HZ, "F_b")?,
            deadline_s: self.t_s,
            cache_bits: self.c_bits,
            channel_states,
            channel_pmf,
            task_pmf,
            zipf_gamma: self.zipf_gamma,
            enumeration_cap: self.enumeration_cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
            notes: Vec::new(),
        }
        .normalized()
    }
}

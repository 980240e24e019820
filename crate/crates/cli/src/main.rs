//! Command-line front door for the cache-assisted MEC energy solvers:
//! single solves and figure-style parameter sweeps, both emitting
//! deterministic CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cachemec_core::{
    catalog, solve_baseline, solve_bruteforce, solve_optimal, solve_suboptimal_with, zipf_pmf,
    BaselineReading, DualParams, Method, Scenario, SolveReport,
};

const CSV_HEADER: &str =
    "method,T_s,gamma,C_bits,K,N,average_energy_J,dual_value_J,gap,iterations,wall_time_s";

#[derive(Parser)]
#[command(
    name = "cachemec",
    version,
    about = "Energy-optimal joint caching and transmission-time allocation: solvers and experiment sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario with one method and write a one-row CSV.
    Solve(SolveCmd),
    /// Sweep one parameter over a list of values for several methods.
    Sweep(SweepCmd),
}

#[derive(Args)]
struct CommonOpts {
    /// Scenario config file (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,

    /// Fill fields the config omits from the built-in reference catalog
    /// (parametric task sizes, two-level channel setup, radio constants).
    #[arg(long)]
    reference_catalog: bool,

    /// Evaluate baselines with the per-task printed formulas instead of the
    /// per-request split.
    #[arg(long)]
    baseline_per_task: bool,

    /// Swap the suboptimal method's Ext-Greedy caching step for the exact
    /// knapsack DP.
    #[arg(long)]
    exact_dp: bool,

    /// Subgradient iteration budget for the optimal method.
    #[arg(long)]
    max_iter: Option<usize>,

    /// Subgradient residual tolerance in seconds (default: 1e-4 * T).
    #[arg(long)]
    eps: Option<f64>,

    /// Fill the wall_time_s column (off by default so repeated runs stay
    /// byte-identical).
    #[arg(long)]
    timing: bool,

    /// Worker threads (default: all cores).
    #[arg(long, env = "CACHEMEC_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct SolveCmd {
    #[command(flatten)]
    common: CommonOpts,

    /// Method to run: optimal, suboptimal, baseline1..baseline4, or oracle.
    #[arg(long)]
    method: String,

    /// Also write the dual-iteration trace to this CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    common: CommonOpts,

    /// Parameter to sweep: T, gamma, C, K, or N.
    #[arg(long)]
    param: String,

    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,

    /// Comma-separated methods; one CSV row per (method, value).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(cmd) => run_solve(cmd),
        Command::Sweep(cmd) => run_sweep(cmd),
    }
}

fn run_solve(cmd: SolveCmd) -> Result<()> {
    let method = Method::parse(&cmd.method)?;
    let loaded = load_scenario(&cmd.common.config, cmd.common.reference_catalog)?;
    let record_trace = cmd.trace.is_some();

    let (report, wall) = in_pool(cmd.common.workers, || -> Result<_> {
        let start = Instant::now();
        let report = dispatch(method, &loaded.scenario, &cmd.common, record_trace)?;
        Ok((report, start.elapsed().as_secs_f64()))
    })??;

    for note in loaded.scenario.notes.iter().chain(&report.notes) {
        eprintln!("note: {note}");
    }

    let mut csv = String::with_capacity(256);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    csv.push_str(&format_row(&loaded.scenario, &report, cmd.common.timing.then_some(wall)));
    csv.push('\n');
    write_file(&cmd.common.out, &csv)?;

    if let Some(trace_path) = &cmd.trace {
        write_file(trace_path, &format_trace(&report))?;
    }
    Ok(())
}

fn run_sweep(cmd: SweepCmd) -> Result<()> {
    let param = SweepParam::parse(&cmd.param)?;
    let methods: Vec<Method> =
        cmd.methods.iter().map(|m| Method::parse(m).map_err(Into::into)).collect::<Result<_>>()?;
    if methods.is_empty() {
        bail!("the sweep needs at least one --methods entry");
    }
    let values: Vec<f64> = cmd
        .values
        .iter()
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("invalid sweep value `{v}`")))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("the sweep needs at least one --values entry");
    }

    let loaded = load_scenario(&cmd.common.config, cmd.common.reference_catalog)?;
    for note in &loaded.scenario.notes {
        eprintln!("note: {note}");
    }

    // Method-major job order; the parallel map writes into this fixed order,
    // so the CSV layout is independent of the worker count.
    let jobs: Vec<(Method, f64)> =
        methods.iter().flat_map(|&m| values.iter().map(move |&v| (m, v))).collect();
    let common = &cmd.common;
    let rows: Vec<String> = in_pool(cmd.common.workers, || {
        jobs.par_iter()
            .map(|&(method, value)| -> Result<String> {
                let scenario = apply_sweep_value(&loaded, param, value)?;
                let start = Instant::now();
                let report = dispatch(method, &scenario, common, false)?;
                let wall = start.elapsed().as_secs_f64();
                Ok(format_row(&scenario, &report, common.timing.then_some(wall)))
            })
            .collect::<Result<_>>()
    })??;

    let mut csv = String::with_capacity(128 * (rows.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    write_file(&cmd.common.out, &csv)
}

/// Runs one method on one scenario. Baselines 1 and 2 place the cache with
/// the heuristic's placement step before splitting time equally or
/// proportionally.
fn dispatch(
    method: Method,
    s: &Scenario,
    opts: &CommonOpts,
    record_trace: bool,
) -> Result<SolveReport> {
    let reading = if opts.baseline_per_task {
        BaselineReading::PerTask
    } else {
        BaselineReading::PerRequest
    };
    let report = match method {
        Method::Optimal => {
            let mut params = DualParams { record_trace, ..DualParams::default() };
            if let Some(max_iter) = opts.max_iter {
                params.max_iter = max_iter;
            }
            params.eps = opts.eps.or(params.eps);
            solve_optimal(s, &params)?
        }
        Method::Suboptimal => solve_suboptimal_with(s, opts.exact_dp)?,
        Method::Baseline1 | Method::Baseline2 => {
            let id = if method == Method::Baseline1 { 1 } else { 2 };
            let placed = solve_suboptimal_with(s, opts.exact_dp)?.caching;
            solve_baseline(id, s, Some(&placed), reading)?
        }
        Method::Baseline3 => solve_baseline(3, s, None, reading)?,
        Method::Baseline4 => solve_baseline(4, s, None, reading)?,
        Method::Oracle => solve_bruteforce(s)?,
    };
    Ok(report)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SweepParam {
    Deadline,
    Gamma,
    Cache,
    Mobiles,
    Tasks,
}

impl SweepParam {
    fn parse(text: &str) -> Result<SweepParam> {
        match text.trim().to_ascii_lowercase().as_str() {
            "t" | "t_s" => Ok(SweepParam::Deadline),
            "gamma" | "zipf_gamma" => Ok(SweepParam::Gamma),
            "c" | "c_bits" => Ok(SweepParam::Cache),
            "k" => Ok(SweepParam::Mobiles),
            "n" => Ok(SweepParam::Tasks),
            other => bail!("unknown sweep parameter `{other}`; valid parameters: T, gamma, C, K, N"),
        }
    }
}

struct LoadedScenario {
    scenario: Scenario,
    /// True when the config left the task catalog to the reference
    /// generator, which is what an N sweep re-invokes per value.
    tasks_from_catalog: bool,
}

fn load_scenario(path: &Path, reference_catalog: bool) -> Result<LoadedScenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config `{}`", path.display()))?;
    let tasks_explicit = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .is_some_and(|v| v.get("tasks").is_some());
    let scenario = Scenario::from_json_str(&text, reference_catalog)
        .with_context(|| format!("parsing config `{}`", path.display()))?;
    Ok(LoadedScenario { scenario, tasks_from_catalog: !tasks_explicit })
}

fn apply_sweep_value(loaded: &LoadedScenario, param: SweepParam, value: f64) -> Result<Scenario> {
    let mut s = loaded.scenario.clone();
    match param {
        SweepParam::Deadline => s.deadline_s = value,
        SweepParam::Cache => s.cache_bits = value,
        SweepParam::Gamma => {
            s.task_pmf = zipf_pmf(s.tasks.len(), value);
            s.zipf_gamma = Some(value);
        }
        SweepParam::Mobiles => s.num_mobiles = as_count(value, "K")?,
        SweepParam::Tasks => {
            let n = as_count(value, "N")?;
            if !loaded.tasks_from_catalog {
                bail!(
                    "sweeping N regenerates the task catalog; drop the explicit `tasks` \
                     list from the config and pass --reference-catalog"
                );
            }
            let gamma = s
                .zipf_gamma
                .context("sweeping N requires `zipf_gamma` in the config to re-derive the task popularity")?;
            s.tasks = catalog::tasks(n);
            s.task_pmf = zipf_pmf(n, gamma);
        }
    }
    Ok(s.normalized()?)
}

fn as_count(value: f64, param: &str) -> Result<usize> {
    if value.fract() != 0.0 || value < 1.0 || !value.is_finite() {
        bail!("{param} values must be integers >= 1, got {value}");
    }
    Ok(value as usize)
}

/// Energies carry 12 significant digits; the remaining floats keep their
/// shortest round-trip form. Optional columns are left empty.
fn format_row(s: &Scenario, report: &SolveReport, wall: Option<f64>) -> String {
    let gamma = s.zipf_gamma.map(|g| g.to_string()).unwrap_or_default();
    let dual = report.dual_value.map(|d| format!("{d:.11e}")).unwrap_or_default();
    let gap = report.duality_gap_rel.map(|g| format!("{g:.6e}")).unwrap_or_default();
    let wall = wall.map(|w| format!("{w:.3}")).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{:.11e},{},{},{},{}",
        report.method,
        s.deadline_s,
        gamma,
        s.cache_bits,
        s.num_mobiles,
        s.tasks.len(),
        report.average_energy,
        dual,
        gap,
        report.iterations,
        wall,
    )
}

fn format_trace(report: &SolveReport) -> String {
    let mut out = String::from("iter,dual_value_J,max_residual_s,num_cached\n");
    for row in &report.trace {
        writeln!(out, "{},{:.11e},{:.6e},{}", row.iter, row.dual_value, row.max_residual, row.num_cached)
            .expect("writing to a String cannot fail");
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating output directory `{}`", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing `{}`", path.display()))
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building the worker pool")?;
            Ok(pool.install(f))
        }
    }
}

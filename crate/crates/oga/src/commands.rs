//! The work behind each subcommand, callable without the argument parser.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use oga_core::assignment::{solve_hungarian, CostMatrix};
use oga_core::control::{BandScale, LrLaw};
use oga_core::generate::{generate_scenario, GenParams};
use oga_core::scenario::validate_scenario;
use oga_core::sim::{
    metrics, run_seeded, Integrator, NeighborVelocity, SimConfig, SimTrace, SupervisorPolicy,
    Termination,
};
use oga_core::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, ExitCode};
use crate::report::{
    write_decisions, write_metrics, write_surface_csv, write_trace_csv, EffectiveConfig,
};
use crate::scenario_file::scenario_to_string;

pub const TRACE_FILE: &str = "trace.csv";
pub const SURFACE_FILE: &str = "surface.csv";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const SCENARIO_FILE: &str = "scenario.toml";
pub const CONFIG_FILE: &str = "config.toml";
pub const BATCH_FILE: &str = "batch.txt";

/// Command-line values that replace scenario fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub max_time: Option<f64>,
    pub aggregation_power: Option<f64>,
    pub q_band: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(v) = self.dt {
            s.dt = v;
        }
        if let Some(v) = self.max_time {
            s.max_time = v;
        }
        if let Some(v) = self.aggregation_power {
            s.aggregation_power = v;
        }
        if let Some(v) = self.q_band {
            s.q_band = v;
        }
    }

    pub fn apply_gen(&self, p: &mut GenParams) {
        if let Some(v) = self.dt {
            p.dt = v;
        }
        if let Some(v) = self.max_time {
            p.max_time = v;
        }
        if let Some(v) = self.aggregation_power {
            p.aggregation_power = v;
        }
        if let Some(v) = self.q_band {
            p.q_band = v;
        }
    }
}

/// Simulator choices; `None` keeps the library default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimOptions {
    pub integrator: Option<Integrator>,
    pub neighbor_velocity: Option<NeighborVelocity>,
    pub supervisor: Option<SupervisorPolicy>,
    pub lr_law: Option<LrLaw>,
    pub band: Option<BandScale>,
    pub convergence_tol: Option<f64>,
    /// `Some(None)` disables the stall exit.
    pub stall_ratio: Option<Option<f64>>,
    /// `Some(None)` disables the step limit.
    pub lr_step_fraction: Option<Option<f64>>,
}

impl SimOptions {
    pub fn config(&self, s: &Scenario) -> SimConfig {
        let mut c = SimConfig::from_scenario(s);
        if let Some(v) = self.integrator {
            c.integrator = v;
        }
        if let Some(v) = self.neighbor_velocity {
            c.neighbor_velocity = v;
        }
        if let Some(v) = self.supervisor {
            c.supervisor = v;
        }
        if let Some(v) = self.lr_law {
            c.settings.law = v;
        }
        if let Some(v) = self.band {
            c.settings.band = v;
        }
        if let Some(v) = self.convergence_tol {
            c.convergence_tol = v;
        }
        if let Some(v) = self.stall_ratio {
            c.settings.stall_ratio = v;
        }
        if let Some(v) = self.lr_step_fraction {
            c.lr_step_fraction = v;
        }
        c
    }
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: SimTrace,
    pub exit: ExitCode,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

/// Validates, simulates and, when `out` is given, writes every output file
/// into it.
pub fn run_scenario(
    mut scenario: Scenario,
    source: &str,
    seed: Option<u64>,
    overrides: &Overrides,
    options: &SimOptions,
    out: Option<&Path>,
) -> Result<RunOutcome, CliError> {
    overrides.apply(&mut scenario);
    let scenario = validate_scenario(scenario)?;
    let config = options.config(&scenario);
    config.validate(scenario.lambda_max())?;
    let trace =
        run_seeded(&scenario, &config, seed).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let effective = EffectiveConfig::new(
            source.to_string(),
            seed,
            &config,
            scenario.aggregation_power,
            scenario.q_band,
        );
        write_file(dir, SCENARIO_FILE, &scenario_to_string(&scenario))?;
        write_file(dir, CONFIG_FILE, &effective.to_toml())?;
        write_file(dir, TRACE_FILE, &write_trace_csv(&trace))?;
        write_file(dir, SURFACE_FILE, &write_surface_csv(&trace))?;
        write_file(dir, DECISIONS_FILE, &write_decisions(&trace))?;
        write_file(dir, METRICS_FILE, &write_metrics(&trace))?;
    }
    let exit = ExitCode::of_termination(&trace.termination);
    Ok(RunOutcome { trace, exit })
}

pub fn generate(
    params: &GenParams,
    seed: u64,
    overrides: &Overrides,
) -> Result<Scenario, CliError> {
    let mut p = params.clone();
    overrides.apply_gen(&mut p);
    Ok(generate_scenario(&p, seed)?)
}

/// Timing of the Hungarian solver at one size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub repeats: usize,
    pub mean: f64,
    pub median: f64,
    /// Median over the median of the previous row.
    pub ratio: Option<f64>,
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CostMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    CostMatrix::from_rows(&rows).expect("uniform draws are finite and nonnegative")
}

/// Solves `repeats` random uniform matrices per size, one untimed warm-up
/// first.
pub fn bench(sizes: &[usize], repeats: usize, seed: u64) -> Vec<BenchRow> {
    let mut rows: Vec<BenchRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
        std::hint::black_box(solve_hungarian(&random_matrix(n, &mut rng)));
        let mut times: Vec<f64> = (0..repeats.max(1))
            .map(|_| {
                let c = random_matrix(n, &mut rng);
                let start = Instant::now();
                std::hint::black_box(solve_hungarian(&c));
                start.elapsed().as_secs_f64()
            })
            .collect();
        times.sort_by(f64::total_cmp);
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let mid = times.len() / 2;
        let median = if times.len() % 2 == 1 {
            times[mid]
        } else {
            0.5 * (times[mid - 1] + times[mid])
        };
        let ratio = rows.last().map(|prev| median / prev.median);
        rows.push(BenchRow {
            n,
            repeats: times.len(),
            mean,
            median,
            ratio,
        });
    }
    rows
}

pub fn format_bench(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:>6} {:>8} {:>14} {:>14} {:>8}\n",
        "n", "repeats", "mean_s", "median_s", "ratio"
    );
    for r in rows {
        let ratio = r
            .ratio
            .map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        writeln!(
            out,
            "{:>6} {:>8} {:>14.6e} {:>14.6e} {:>8}",
            r.n, r.repeats, r.mean, r.median, ratio
        )
        .unwrap();
    }
    out
}

/// Summary of one run of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub seed: u64,
    pub termination: Termination,
    pub final_time: f64,
    pub min_clearance: f64,
    pub lr_fraction: f64,
    pub decision_count: usize,
    pub swap_count: usize,
    pub min_switch_interval: f64,
    pub wall_seconds: f64,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed:04}"))
}

/// Generates and runs one scenario per seed on `workers` threads. Each run
/// writes into its own `seed-NNNN` directory; the summary rows come back in
/// seed order.
pub fn batch(
    params: &GenParams,
    seeds: &[u64],
    overrides: &Overrides,
    options: &SimOptions,
    workers: usize,
    out: Option<&Path>,
) -> Result<Vec<BatchRow>, CliError> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<BatchRow, CliError>>>> =
        Mutex::new((0..seeds.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, seeds.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = seeds.get(k) else { break };
                let start = Instant::now();
                let row = generate(params, seed, overrides)
                    .and_then(|s| {
                        let dir = out.map(|o| seed_dir(o, seed));
                        run_scenario(
                            s,
                            "generated",
                            Some(seed),
                            &Overrides::default(),
                            options,
                            dir.as_deref(),
                        )
                    })
                    .map(|outcome| {
                        let m = metrics(&outcome.trace);
                        BatchRow {
                            seed,
                            termination: outcome.trace.termination,
                            final_time: m.final_time,
                            min_clearance: m.min_clearance,
                            lr_fraction: m.lr_fraction,
                            decision_count: m.decision_count,
                            swap_count: m.swap_count,
                            min_switch_interval: m
                                .switch_intervals
                                .iter()
                                .copied()
                                .fold(f64::INFINITY, f64::min),
                            wall_seconds: start.elapsed().as_secs_f64(),
                        }
                    });
                results.lock().unwrap()[k] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every seed is claimed by a worker"))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write_file(dir, BATCH_FILE, &format_batch(&rows))?;
    }
    Ok(rows)
}

/// Wall-clock time is left out so the file is reproducible.
pub fn format_batch(rows: &[BatchRow]) -> String {
    let mut out = String::from(
        "seed,termination,final_time,min_clearance,lr_fraction,decision_count,swap_count,min_switch_interval\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.seed,
            r.termination.label(),
            r.final_time,
            r.min_clearance,
            r.lr_fraction,
            r.decision_count,
            r.swap_count,
            r.min_switch_interval
        )
        .unwrap();
    }
    out
}

/// Exit status of a whole batch.
pub fn batch_exit(rows: &[BatchRow]) -> ExitCode {
    if rows.iter().all(|r| r.termination == Termination::Converged) {
        ExitCode::Success
    } else {
        ExitCode::BatchFailures
    }
}

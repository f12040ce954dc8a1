use std::io::Read;
use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oga_core::assignment::solve_hungarian;
use oga_core::control::{BandScale, LrLaw};
use oga_core::generate::GenParams;
use oga_core::sim::{metrics, Integrator, NeighborVelocity, SupervisorPolicy};

use oga::commands::{self, Overrides, SimOptions};
use oga::error::{CliError, ExitCode};
use oga::matrix::{format_solution, parse_cost_matrix};
use oga::scenario_file::{read_scenario, scenario_to_string};

/// Decentralized optimal goal assignment with a barrier last resort.
///
/// Exit status: 0 success, 2 usage, 3 invalid input, 4 I/O error,
/// 5 generator gave up, 10 timeout, 11 collision, 12 boundary breach,
/// 13 some batch run failed, 70 internal error.
#[derive(Parser)]
#[command(name = "oga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trace, decisions and metrics.
    Run(RunArgs),
    /// Write a random scenario.
    Gen(GenArgs),
    /// Solve a cost matrix file ('-' reads standard input).
    Assign { matrix: PathBuf },
    /// Time the Hungarian solver on random matrices.
    Bench(BenchArgs),
    /// Generate and simulate one scenario per seed.
    Batch(BatchArgs),
}

#[derive(Args, Clone, Copy)]
struct OverrideArgs {
    /// Integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation horizon (s).
    #[arg(long)]
    max_time: Option<f64>,
    /// Exponent of the smooth maximum over barrier terms.
    #[arg(long)]
    delta_aggregation: Option<f64>,
    /// Half-width of the switching band on the safety surface.
    #[arg(long)]
    eps_q: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            max_time: self.max_time,
            aggregation_power: self.delta_aggregation,
            q_band: self.eps_q,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum IntegratorArg {
    Euler,
    Rk4,
}

#[derive(ValueEnum, Clone, Copy)]
enum NeighborVelocityArg {
    Applied,
    GoalSeeking,
}

#[derive(ValueEnum, Clone, Copy)]
enum SupervisorArg {
    Switching,
    OgaOnly,
}

#[derive(ValueEnum, Clone, Copy)]
enum LawArg {
    PerAxis,
    Projected,
    ProjectedAdverse,
}

#[derive(ValueEnum, Clone, Copy)]
enum BandArg {
    Absolute,
    Normalized,
}

#[derive(Args, Clone, Copy)]
struct SimArgs {
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    /// Neighbor velocity used by the safety surface and the last resort.
    #[arg(long, value_enum)]
    neighbor_velocity: Option<NeighborVelocityArg>,
    /// `oga-only` disables the last resort.
    #[arg(long, value_enum)]
    supervisor: Option<SupervisorArg>,
    #[arg(long, value_enum)]
    lr_law: Option<LawArg>,
    /// Whether the switching band applies to Q itself or to Q normalized.
    #[arg(long, value_enum)]
    band: Option<BandArg>,
    /// Every agent within this distance of its goal ends the run (m).
    #[arg(long)]
    convergence_tol: Option<f64>,
    /// Leave the last resort when its speed drops below this fraction of
    /// the goal-seeking speed; 0 disables.
    #[arg(long)]
    stall_ratio: Option<f64>,
    /// Cap on a last resort step as a fraction of the gap it closes;
    /// 0 disables.
    #[arg(long)]
    lr_step_fraction: Option<f64>,
}

fn zero_off(v: Option<f64>) -> Option<Option<f64>> {
    v.map(|x| (x > 0.0).then_some(x))
}

impl SimArgs {
    fn options(&self) -> SimOptions {
        SimOptions {
            integrator: self.integrator.map(|v| match v {
                IntegratorArg::Euler => Integrator::Euler,
                IntegratorArg::Rk4 => Integrator::Rk4FrozenInputs,
            }),
            neighbor_velocity: self.neighbor_velocity.map(|v| match v {
                NeighborVelocityArg::Applied => NeighborVelocity::Applied,
                NeighborVelocityArg::GoalSeeking => NeighborVelocity::GoalSeeking,
            }),
            supervisor: self.supervisor.map(|v| match v {
                SupervisorArg::Switching => SupervisorPolicy::Switching,
                SupervisorArg::OgaOnly => SupervisorPolicy::GoalSeekingOnly,
            }),
            lr_law: self.lr_law.map(|v| match v {
                LawArg::PerAxis => LrLaw::PerAxis,
                LawArg::Projected => LrLaw::Projected,
                LawArg::ProjectedAdverse => LrLaw::ProjectedAdverse,
            }),
            band: self.band.map(|v| match v {
                BandArg::Absolute => BandScale::Absolute,
                BandArg::Normalized => BandScale::Normalized,
            }),
            convergence_tol: self.convergence_tol,
            stall_ratio: zero_off(self.stall_ratio),
            lr_step_fraction: zero_off(self.lr_step_fraction),
        }
    }
}

#[derive(Args, Clone)]
struct GenParamArgs {
    /// Team size.
    #[arg(long, short = 'n', default_value_t = GenParams::default().n_agents)]
    agents: usize,
    /// Robot radius; the minimum separation is twice this (m).
    #[arg(long, default_value_t = GenParams::default().robot_radius)]
    robot_radius: f64,
    /// Communication range in robot radii.
    #[arg(long, default_value_t = GenParams::default().comm_factor)]
    comm_factor: f64,
    /// Radius of the disc starts and goals are drawn from (m).
    #[arg(long, default_value_t = GenParams::default().placement_radius)]
    placement_radius: f64,
    /// Workspace radius (m).
    #[arg(long, default_value_t = GenParams::default().workspace_radius)]
    workspace_radius: f64,
    /// Minimum start spacing in multiples of the minimum separation.
    #[arg(long, default_value_t = GenParams::default().start_gap)]
    start_gap: f64,
    /// Minimum goal spacing in multiples of the minimum separation.
    #[arg(long, default_value_t = GenParams::default().goal_gap)]
    goal_gap: f64,
}

impl GenParamArgs {
    fn params(&self) -> GenParams {
        GenParams {
            n_agents: self.agents,
            robot_radius: self.robot_radius,
            comm_factor: self.comm_factor,
            placement_radius: self.placement_radius,
            workspace_radius: self.workspace_radius,
            start_gap: self.start_gap,
            goal_gap: self.goal_gap,
            ..GenParams::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; without it a scenario is generated from --seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Generator seed, recorded in the outputs.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    gen: GenParamArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario file to write; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(flatten)]
    gen: GenParamArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Matrix sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200])]
    sizes: Vec<usize>,
    /// Timed solves per size.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File that also receives the table.
    #[arg(long, default_value = "bench.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct BatchArgs {
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 100)]
    count: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long, default_value = "batch")]
    out: PathBuf,
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    gen: GenParamArgs,
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, CliError> {
    let overrides = a.overrides.overrides();
    let (scenario, source) = match (&a.scenario, a.seed) {
        (Some(path), _) => (read_scenario(path)?, path.display().to_string()),
        (None, Some(seed)) => (
            commands::generate(&a.gen.params(), seed, &Overrides::default())?,
            "generated".to_string(),
        ),
        (None, None) => {
            return Err(CliError::Usage(
                "run needs --scenario or --seed".to_string(),
            ))
        }
    };
    let outcome = commands::run_scenario(
        scenario,
        &source,
        a.seed,
        &overrides,
        &a.sim.options(),
        Some(&a.out),
    )?;
    let m = metrics(&outcome.trace);
    println!(
        "{} t={} min_clearance={} lr_fraction={} decisions={} -> {}",
        outcome.trace.termination.label(),
        m.final_time,
        m.min_clearance,
        m.lr_fraction,
        m.decision_count,
        a.out.display()
    );
    Ok(outcome.exit)
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode, CliError> {
    let s = commands::generate(&a.gen.params(), a.seed, &a.overrides.overrides())?;
    let text = scenario_to_string(&s);
    match a.out {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::Success)
}

fn cmd_assign(path: PathBuf) -> Result<ExitCode, CliError> {
    let text = if path.as_os_str() == "-" {
        let mut t = String::new();
        std::io::stdin()
            .read_to_string(&mut t)
            .map_err(|e| CliError::io("<stdin>", e))?;
        t
    } else {
        std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?
    };
    let c = parse_cost_matrix(&text)?;
    println!("{}", format_solution(&solve_hungarian(&c)));
    Ok(ExitCode::Success)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode, CliError> {
    if let Some(&n) = a.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!(
            "bench sizes must be at least 2, got {n}"
        )));
    }
    let table = commands::format_bench(&commands::bench(&a.sizes, a.repeats, a.seed));
    print!("{table}");
    std::fs::write(&a.out, &table).map_err(|e| CliError::io(&a.out, e))?;
    Ok(ExitCode::Success)
}

fn cmd_batch(a: BatchArgs) -> Result<ExitCode, CliError> {
    let seeds: Vec<u64> = (a.seed..a.seed + a.count).collect();
    let rows = commands::batch(
        &a.gen.params(),
        &seeds,
        &a.overrides.overrides(),
        &a.sim.options(),
        a.workers,
        Some(&a.out),
    )?;
    let converged = rows
        .iter()
        .filter(|r| r.termination == oga_core::Termination::Converged)
        .count();
    let worst = rows.iter().map(|r| r.wall_seconds).fold(0.0, f64::max);
    println!(
        "{converged}/{} converged, slowest run {worst:.2}s -> {}",
        rows.len(),
        a.out.join(commands::BATCH_FILE).display()
    );
    for r in rows
        .iter()
        .filter(|r| r.termination != oga_core::Termination::Converged)
    {
        println!("seed {}: {}", r.seed, r.termination.label());
    }
    Ok(commands::batch_exit(&rows))
}

fn main() {
    let result = match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Assign { matrix } => cmd_assign(matrix),
        Command::Bench(a) => cmd_bench(a),
        Command::Batch(a) => cmd_batch(a),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    process::exit(code.code());
}

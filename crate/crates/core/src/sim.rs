//! Fixed-step closed loop.
//!
//! Each step, in order: advance the link hysteresis; let every component that
//! gained a link re-decide its goals; run each agent's mode supervisor; move
//! every agent by `dt`; remember the applied commands as the velocities
//! neighbors will see next step. A step that leaves the safe set aborts the
//! run with a breach, and the trace up to that point is kept.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::{oga_decide, AssignError, Assignment};
use crate::commgraph::{
    connected_components, update_hysteresis, CommHysteresis, ComponentSet, Pair,
};
use crate::control::{
    oga_control, pair_constraint, supervise, workspace_constraint, BarrierError, BarrierParams,
    ControlContext, LrLaw, Neighbor, Supervision, SupervisorSettings,
};
use crate::geometry::{distance, Vec2};
use crate::scenario::{AgentState, Mode, Scenario, ValidatedScenario};

/// How positions advance over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Integrator {
    /// `r += dt * u`.
    #[default]
    Euler,
    /// Classical Runge-Kutta on each agent's own law, with modes, goals,
    /// components and exchanged neighbor velocities held for the step.
    Rk4FrozenInputs,
}

/// Which neighbor velocity enters the safety surface and the last resort law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum NeighborVelocity {
    /// The command the neighbor actually applied last step.
    Applied,
    /// The neighbor's goal-seeking command at the current positions.
    #[default]
    GoalSeeking,
}

/// Whether the last resort may engage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SupervisorPolicy {
    /// Hysteresis switching between goal seeking and the last resort.
    #[default]
    Switching,
    /// Goal seeking only; collisions are not prevented.
    GoalSeekingOnly,
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Step (s).
    pub dt: f64,
    /// Horizon (s).
    pub max_time: f64,
    /// Every agent within this distance of its goal ends the run (m).
    pub convergence_tol: f64,
    /// Position update scheme.
    pub integrator: Integrator,
    /// Neighbor velocity information pattern.
    pub neighbor_velocity: NeighborVelocity,
    /// Supervisor policy.
    pub supervisor: SupervisorPolicy,
    /// Last resort law and switching band.
    pub settings: SupervisorSettings,
    /// When set, a last resort step may cover at most this fraction of the
    /// agent's clearance to its neighbors and the boundary.
    pub lr_step_fraction: Option<f64>,
}

/// Default cap on a last resort step, as a fraction of clearance.
pub const DEFAULT_LR_STEP_FRACTION: f64 = 0.25;

/// Default stall exit: the last resort gives way once it moves slower than
/// this fraction of the goal-seeking command. Without it two agents can park
/// for good at a joint critical point of their `W`.
pub const DEFAULT_STALL_RATIO: f64 = 0.1;

/// Default convergence tolerance (m).
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-2;

impl SimConfig {
    /// Takes `dt` and `max_time` from the scenario, defaults elsewhere.
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            dt: s.dt,
            max_time: s.max_time,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            integrator: Integrator::Euler,
            neighbor_velocity: NeighborVelocity::GoalSeeking,
            supervisor: SupervisorPolicy::Switching,
            settings: SupervisorSettings {
                stall_ratio: Some(DEFAULT_STALL_RATIO),
                ..SupervisorSettings::default()
            },
            lr_step_fraction: Some(DEFAULT_LR_STEP_FRACTION),
        }
    }

    /// Checks positivity and the explicit-Euler margin `λ_max dt < 0.5`.
    pub fn validate(&self, lambda_max: f64) -> Result<(), ConfigError> {
        for (v, name) in [
            (self.dt, "dt"),
            (self.max_time, "max_time"),
            (self.convergence_tol, "convergence_tol"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if lambda_max * self.dt >= 0.5 {
            return Err(ConfigError::StepTooLarge {
                dt: self.dt,
                lambda_max,
            });
        }
        Ok(())
    }
}

/// Invalid [`SimConfig`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("dt = {dt} is too large for lambda_max = {lambda_max} (need lambda_max * dt < 0.5)")]
    StepTooLarge { dt: f64, lambda_max: f64 },
}

/// Which constraint a step violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreachKind {
    /// Two agents came within Δ.
    Collision(Pair),
    /// An agent left the workspace.
    Boundary(usize),
}

/// A step ended outside the safe set.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("collision/boundary breach at t = {time}: {kind:?}")]
    Breach { time: f64, kind: BreachKind },
    #[error(transparent)]
    Assign(#[from] AssignError),
}

impl From<BarrierError> for BreachKind {
    fn from(e: BarrierError) -> Self {
        match e {
            BarrierError::PairViolated { agent, neighbor } => {
                BreachKind::Collision(Pair::new(agent, neighbor))
            }
            BarrierError::WorkspaceViolated { agent } => BreachKind::Boundary(agent),
        }
    }
}

/// Full closed-loop state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// Steps taken so far.
    pub step: u64,
    /// Agents, in id order.
    pub agents: Vec<AgentState>,
    /// Link hysteresis.
    pub links: CommHysteresis,
}

impl SimState {
    /// State at `t = 0`; no link is connected yet, so agents already in range
    /// decide on the first step.
    pub fn initial(s: &ValidatedScenario) -> Self {
        Self {
            step: 0,
            agents: s.agents.clone(),
            links: CommHysteresis::new(s.agents.len()),
        }
    }

    /// Simulated time of this state.
    pub fn time(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }

    /// Positions in id order.
    pub fn positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.position).collect()
    }

    /// Current assignment.
    pub fn assignment(&self) -> Assignment {
        Assignment {
            goal_of: self.agents.iter().map(|a| a.goal_index).collect(),
        }
    }
}

/// One component decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionEvent {
    /// Time of the decision.
    pub time: f64,
    /// Component members, ascending.
    pub members: Vec<usize>,
    /// Component cost-to-go before.
    pub old_cost: f64,
    /// Component cost-to-go after.
    pub new_cost: f64,
    /// Whether any goal changed hands.
    pub changed: bool,
    /// Assignment after the decision.
    pub assignment: Assignment,
}

/// An agent changed control mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSwitch {
    /// Time of the switch.
    pub time: f64,
    /// Agent id.
    pub agent: usize,
    /// Mode entered.
    pub mode: Mode,
}

/// Something unusual happened while computing a command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlagKind {
    /// A goal-side barrier constraint was floored.
    GoalConstraintClamped,
    /// The last resort law fell back to gradient descent.
    DegenerateGradient,
    /// A last resort command was shortened to the step limit.
    StepLimited,
}

/// A flagged agent step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFlag {
    /// Time of the step.
    pub time: f64,
    /// Agent id.
    pub agent: usize,
    /// What happened.
    pub kind: FlagKind,
}

/// What one step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Time at the start of the step.
    pub time: f64,
    /// Mode each agent used over the step.
    pub modes: Vec<Mode>,
    /// Safety surface under goal seeking, per agent.
    pub q: Vec<f64>,
    /// `W` per agent.
    pub w: Vec<f64>,
    /// Pairs that connected this step.
    pub triggers: Vec<Pair>,
    /// Decisions fired this step.
    pub decisions: Vec<DecisionEvent>,
    /// Flags raised this step.
    pub flags: Vec<StepFlag>,
    /// Minimum over pairs of `d - Δ` at the start of the step.
    pub min_clearance: f64,
    /// Summed distance-to-go after this step's decisions.
    pub v_total: f64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Every agent reached its goal within tolerance.
    Converged,
    /// The horizon elapsed first.
    Timeout,
    /// A step left the safe set.
    Breach {
        /// Time at the end of the offending step.
        time: f64,
        /// Violated constraint.
        kind: BreachKind,
    },
}

impl Termination {
    /// Short label for text outputs.
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "CONVERGED",
            Termination::Timeout => "TIMEOUT",
            Termination::Breach { .. } => "BREACH",
        }
    }
}

/// Time-indexed record of a run. Row `k` holds the positions at `times[k]`
/// together with the goals and modes chosen at that instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// Seed of the scenario generator, when there was one.
    pub seed: Option<u64>,
    /// Step used.
    pub dt: f64,
    /// Minimum separation Δ of the scenario.
    pub min_separation: f64,
    /// Sample times, strictly increasing.
    pub times: Vec<f64>,
    /// Agent states per sample.
    pub states: Vec<Vec<AgentState>>,
    /// Safety surface per sample and agent.
    pub q: Vec<Vec<f64>>,
    /// `W` per sample and agent.
    pub w: Vec<Vec<f64>>,
    /// Decision events in time order.
    pub assignments: Vec<DecisionEvent>,
    /// Link triggers in time order.
    pub triggers: Vec<(f64, Pair)>,
    /// Mode switches in time order.
    pub mode_switches: Vec<ModeSwitch>,
    /// Flagged agent steps.
    pub flags: Vec<StepFlag>,
    /// Summed distance-to-go per sample.
    pub lyapunov_total: Vec<f64>,
    /// Minimum over pairs of `d - Δ` per sample.
    pub min_clearance: Vec<f64>,
    /// Why the run stopped.
    pub termination: Termination,
}

impl SimTrace {
    /// Summed distance-to-go right after each instant with at least one
    /// decision, one sample per instant.
    pub fn post_decision_lyapunov(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut row = 0;
        for d in &self.assignments {
            if out.last().is_some_and(|&(t, _)| t == d.time) {
                continue;
            }
            while self.times[row] < d.time {
                row += 1;
            }
            out.push((d.time, self.lyapunov_total[row]));
        }
        out
    }

    /// Gaps between consecutive link triggers of each pair.
    pub fn pair_trigger_intervals(&self) -> Vec<(Pair, f64)> {
        let mut sorted = self.triggers.clone();
        sorted.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
        sorted
            .windows(2)
            .filter(|w| w[0].1 == w[1].1)
            .map(|w| (w[0].1, w[1].0 - w[0].0))
            .collect()
    }

    /// Gaps between consecutive mode switches of each agent.
    pub fn mode_switch_intervals(&self) -> Vec<(usize, f64)> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut last = vec![None::<f64>; n];
        let mut out = Vec::new();
        for s in &self.mode_switches {
            if let Some(t) = last[s.agent] {
                out.push((s.agent, s.time - t));
            }
            last[s.agent] = Some(s.time);
        }
        out
    }
}

/// Summary numbers of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Distance travelled by all agents together (m).
    pub total_path_length: f64,
    /// Fraction of samples in which at least one agent uses the last resort.
    pub lr_fraction: f64,
    /// Number of component decisions.
    pub decision_count: usize,
    /// Decisions that changed the assignment.
    pub swap_count: usize,
    /// Number of mode switches.
    pub mode_switch_count: usize,
    /// Smallest `d - Δ` over the trace.
    pub min_clearance: f64,
    /// Gaps between consecutive mode or goal switches of the same agent.
    pub switch_intervals: Vec<f64>,
    /// Time of the last sample.
    pub final_time: f64,
    /// Summed distance-to-go at the last sample.
    pub final_lyapunov: f64,
}

/// Computes [`Metrics`]. Panics on an empty trace.
pub fn metrics(trace: &SimTrace) -> Metrics {
    assert!(!trace.times.is_empty(), "metrics of an empty trace");
    let n = trace.states[0].len();
    let mut total_path_length = 0.0;
    for pair in trace.states.windows(2) {
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            total_path_length += distance(a.position, b.position);
        }
    }
    let lr_rows = trace
        .states
        .iter()
        .filter(|row| row.iter().any(|a| a.mode == Mode::Lr))
        .count();

    // per-agent switch instants: mode switches and goal changes
    let mut events: Vec<Vec<f64>> = vec![Vec::new(); n];
    for s in &trace.mode_switches {
        events[s.agent].push(s.time);
    }
    for rows in trace.states.windows(2).zip(trace.times.windows(2)) {
        let (states, times) = rows;
        for (a, b) in states[0].iter().zip(&states[1]) {
            if a.goal_index != b.goal_index {
                events[a.id].push(times[1]);
            }
        }
    }
    let mut switch_intervals = Vec::new();
    for ev in &mut events {
        ev.sort_by(f64::total_cmp);
        ev.dedup();
        switch_intervals.extend(ev.windows(2).map(|w| w[1] - w[0]));
    }

    Metrics {
        total_path_length,
        lr_fraction: lr_rows as f64 / trace.times.len() as f64,
        decision_count: trace.assignments.len(),
        swap_count: trace.assignments.iter().filter(|d| d.changed).count(),
        mode_switch_count: trace.mode_switches.len(),
        min_clearance: trace
            .min_clearance
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
        switch_intervals,
        final_time: *trace.times.last().unwrap(),
        final_lyapunov: *trace.lyapunov_total.last().unwrap(),
    }
}

/// Minimum over pairs of `d - Δ`; infinite for a single agent.
pub fn min_clearance(positions: &[Vec2], min_separation: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            best = best.min(distance(positions[i], positions[j]) - min_separation);
        }
    }
    best
}

/// Summed distance from each agent to its assigned goal.
pub fn lyapunov_total(agents: &[AgentState], goals: &[Vec2]) -> f64 {
    agents
        .iter()
        .map(|a| distance(a.position, goals[a.goal_index]))
        .sum()
}

fn barrier_params(s: &Scenario) -> BarrierParams {
    BarrierParams {
        min_separation: s.min_separation,
        workspace_center: s.workspace_center,
        workspace_radius: s.workspace_radius,
        aggregation_power: s.aggregation_power,
        q_band: s.q_band,
        grad_floor: s.grad_floor,
    }
}

/// A state after the instantaneous part of a step (links, decisions, modes),
/// ready to be integrated.
struct Prepared {
    state: SimState,
    components: ComponentSet,
    /// Velocity each agent advertises to its neighbors this step.
    advertised: Vec<Vec2>,
    commands: Vec<Vec2>,
    lr_law: LrLaw,
    report: StepReport,
}

fn context(
    scenario: &Scenario,
    params: BarrierParams,
    agents: &[AgentState],
    positions: &[Vec2],
    members: &[usize],
    advertised: &[Vec2],
    id: usize,
) -> ControlContext {
    let a = &agents[id];
    ControlContext {
        agent: id,
        position: positions[id],
        goal: scenario.goals[a.goal_index],
        lambda: a.lambda,
        lr_gain: scenario.lr_gains[id],
        neighbors: members
            .iter()
            .filter(|&&m| m != id)
            .map(|&m| Neighbor {
                id: m,
                position: positions[m],
                goal: scenario.goals[agents[m].goal_index],
                velocity: advertised[m],
            })
            .collect(),
        params,
    }
}

/// Shortens a last resort command so that, with everything else held
/// still, no gap to a neighbor or the boundary closes by more than
/// `lr_step_fraction` of itself in one step. Motion that opens a gap is not
/// limited, except that no step may exceed the same fraction of the distance
/// to an agent outside communication range.
fn limit_lr_step(
    ctx: &ControlContext,
    velocity: Vec2,
    config: &SimConfig,
    comm_range: f64,
) -> (Vec2, bool) {
    let Some(fraction) = config.lr_step_fraction else {
        return (velocity, false);
    };
    let p = &ctx.params;
    let dt = config.dt;
    let mut scale: f64 = 1.0;
    let mut limit = |gap: f64, closing: f64| {
        if closing > 0.0 {
            scale = scale.min(fraction * gap.max(0.0) / (closing * dt));
        }
    };
    let outward = ctx.position - p.workspace_center;
    let radius = outward.norm();
    if radius > 0.0 {
        limit(p.workspace_radius - radius, velocity.dot(outward) / radius);
    }
    for nb in &ctx.neighbors {
        let towards = nb.position - ctx.position;
        let d = towards.norm();
        limit(d - p.min_separation, velocity.dot(towards) / d);
    }
    limit(comm_range - p.min_separation, velocity.norm());
    if scale < 1.0 {
        (velocity * scale, true)
    } else {
        (velocity, false)
    }
}

fn prepare(
    state: &SimState,
    config: &SimConfig,
    scenario: &Scenario,
) -> Result<Prepared, StepError> {
    let time = state.time(config.dt);
    let positions = state.positions();
    let (links, triggers) = update_hysteresis(
        &state.links,
        &positions,
        scenario.comm_range,
        scenario.comm_band,
    );
    let components = connected_components(&links, positions.len());

    let mut agents = state.agents.clone();
    let mut decisions = Vec::new();
    let triggered: BTreeSet<usize> = triggers
        .iter()
        .map(|p| components.component_of(p.0))
        .collect();
    for c in triggered {
        let members = &components.components[c];
        let current = Assignment {
            goal_of: agents.iter().map(|a| a.goal_index).collect(),
        };
        let d = oga_decide(members, &current, &positions, &scenario.goals)?;
        for &m in members {
            agents[m].goal_index = d.assignment.goal_of[m];
        }
        decisions.push(DecisionEvent {
            time,
            members: members.clone(),
            old_cost: d.old_cost,
            new_cost: d.new_cost,
            changed: d.changed,
            assignment: d.assignment,
        });
    }

    let advertised: Vec<Vec2> = match config.neighbor_velocity {
        NeighborVelocity::Applied => agents.iter().map(|a| a.last_velocity).collect(),
        NeighborVelocity::GoalSeeking => agents
            .iter()
            .map(|a| oga_control(a.position, scenario.goals[a.goal_index], a.lambda))
            .collect(),
    };

    let params = barrier_params(scenario);
    let n = agents.len();
    let mut commands = Vec::with_capacity(n);
    let mut modes = Vec::with_capacity(n);
    let mut qs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let mut flags = Vec::new();
    for id in 0..n {
        let ctx = context(
            scenario,
            params,
            &agents,
            &positions,
            components.members_of(id),
            &advertised,
            id,
        );
        let prev = agents[id].mode;
        let sup: Supervision =
            supervise(&ctx, prev, config.settings).map_err(|e| StepError::Breach {
                time,
                kind: e.into(),
            })?;
        let (mode, mut velocity) = match config.supervisor {
            SupervisorPolicy::Switching => (sup.mode, sup.velocity),
            SupervisorPolicy::GoalSeekingOnly => {
                (Mode::Oga, oga_control(ctx.position, ctx.goal, ctx.lambda))
            }
        };
        if sup.clamped {
            flags.push(StepFlag {
                time,
                agent: id,
                kind: FlagKind::GoalConstraintClamped,
            });
        }
        if sup.degenerate && mode == Mode::Lr {
            flags.push(StepFlag {
                time,
                agent: id,
                kind: FlagKind::DegenerateGradient,
            });
        }
        if mode == Mode::Lr {
            let (limited, hit) = limit_lr_step(&ctx, velocity, config, scenario.comm_range);
            velocity = limited;
            if hit {
                flags.push(StepFlag {
                    time,
                    agent: id,
                    kind: FlagKind::StepLimited,
                });
            }
        }
        agents[id].mode = mode;
        modes.push(mode);
        qs.push(sup.q);
        ws.push(sup.w);
        commands.push(velocity);
    }

    let v_total = lyapunov_total(&agents, &scenario.goals);
    let report = StepReport {
        time,
        modes,
        q: qs,
        w: ws,
        triggers,
        decisions,
        flags,
        min_clearance: min_clearance(&positions, scenario.min_separation),
        v_total,
    };
    Ok(Prepared {
        state: SimState {
            step: state.step,
            agents,
            links,
        },
        components,
        advertised,
        commands,
        lr_law: config.settings.law,
        report,
    })
}

/// Commands of every agent at `positions`, with modes, goals, components and
/// advertised velocities held fixed.
fn frozen_commands(
    prepared: &Prepared,
    config: &SimConfig,
    scenario: &Scenario,
    positions: &[Vec2],
) -> Result<Vec<Vec2>, BarrierError> {
    let params = barrier_params(scenario);
    let agents = &prepared.state.agents;
    let lr_law = prepared.lr_law;
    (0..agents.len())
        .map(|id| {
            let ctx = context(
                scenario,
                params,
                agents,
                positions,
                prepared.components.members_of(id),
                &prepared.advertised,
                id,
            );
            match agents[id].mode {
                Mode::Oga => Ok(oga_control(ctx.position, ctx.goal, ctx.lambda)),
                Mode::Lr => crate::control::lr_control(&ctx, lr_law)
                    .map(|c| limit_lr_step(&ctx, c.velocity, config, scenario.comm_range).0),
            }
        })
        .collect()
}

fn check_safe(positions: &[Vec2], scenario: &Scenario) -> Option<BreachKind> {
    for (i, &p) in positions.iter().enumerate() {
        if workspace_constraint(p, scenario.workspace_center, scenario.workspace_radius) <= 0.0 {
            return Some(BreachKind::Boundary(i));
        }
    }
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if pair_constraint(positions[i], positions[j], scenario.min_separation) <= 0.0 {
                return Some(BreachKind::Collision(Pair(i, j)));
            }
        }
    }
    None
}

fn integrate(
    prepared: Prepared,
    config: &SimConfig,
    scenario: &Scenario,
) -> Result<(SimState, StepReport), StepError> {
    let dt = config.dt;
    let Prepared {
        state,
        commands,
        report,
        ..
    } = &prepared;
    let start = state.positions();
    let end_time = (state.step + 1) as f64 * dt;
    let breach = |kind| StepError::Breach {
        time: end_time,
        kind,
    };

    let (next, applied): (Vec<Vec2>, Vec<Vec2>) = match config.integrator {
        Integrator::Euler => {
            let next = start
                .iter()
                .zip(commands)
                .map(|(&p, &u)| p + dt * u)
                .collect();
            (next, commands.clone())
        }
        Integrator::Rk4FrozenInputs => {
            let shifted = |k: &[Vec2], h: f64| -> Vec<Vec2> {
                start.iter().zip(k).map(|(&p, &u)| p + h * u).collect()
            };
            let k1 = commands.clone();
            let k2 = frozen_commands(&prepared, config, scenario, &shifted(&k1, dt / 2.0))
                .map_err(|e| breach(e.into()))?;
            let k3 = frozen_commands(&prepared, config, scenario, &shifted(&k2, dt / 2.0))
                .map_err(|e| breach(e.into()))?;
            let k4 = frozen_commands(&prepared, config, scenario, &shifted(&k3, dt))
                .map_err(|e| breach(e.into()))?;
            let mean: Vec<Vec2> = (0..start.len())
                .map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (1.0 / 6.0))
                .collect();
            (shifted(&mean, dt), mean)
        }
    };
    if let Some(kind) = check_safe(&next, scenario) {
        return Err(breach(kind));
    }
    let mut state = state.clone();
    for ((a, p), u) in state.agents.iter_mut().zip(next).zip(applied) {
        a.position = p;
        a.last_velocity = u;
    }
    state.step += 1;
    Ok((state, report.clone()))
}

/// Advances the closed loop by one step.
pub fn step(
    state: &SimState,
    config: &SimConfig,
    scenario: &ValidatedScenario,
) -> Result<(SimState, StepReport), StepError> {
    let prepared = prepare(state, config, scenario)?;
    integrate(prepared, config, scenario)
}

fn converged(agents: &[AgentState], goals: &[Vec2], tol: f64) -> bool {
    agents
        .iter()
        .all(|a| distance(a.position, goals[a.goal_index]) <= tol)
}

/// Runs until every agent is within tolerance of its goal, the horizon
/// elapses, or a step breaches the safe set.
pub fn run(scenario: &ValidatedScenario, config: &SimConfig) -> Result<SimTrace, StepError> {
    run_seeded(scenario, config, None)
}

/// [`run`], recording the generator seed in the trace.
pub fn run_seeded(
    scenario: &ValidatedScenario,
    config: &SimConfig,
    seed: Option<u64>,
) -> Result<SimTrace, StepError> {
    let mut trace = SimTrace {
        seed,
        dt: config.dt,
        min_separation: scenario.min_separation,
        times: Vec::new(),
        states: Vec::new(),
        q: Vec::new(),
        w: Vec::new(),
        assignments: Vec::new(),
        triggers: Vec::new(),
        mode_switches: Vec::new(),
        flags: Vec::new(),
        lyapunov_total: Vec::new(),
        min_clearance: Vec::new(),
        termination: Termination::Timeout,
    };
    let mut state = SimState::initial(scenario);
    let mut prev_modes: Vec<Mode> = state.agents.iter().map(|a| a.mode).collect();
    loop {
        let prepared = match prepare(&state, config, scenario) {
            Ok(p) => p,
            Err(StepError::Breach { time, kind }) => {
                trace.termination = Termination::Breach { time, kind };
                return Ok(trace);
            }
            Err(e) => return Err(e),
        };
        let report = &prepared.report;
        let time = report.time;
        let mut row = prepared.state.agents.clone();
        for (a, u) in row.iter_mut().zip(&prepared.commands) {
            a.last_velocity = *u;
        }
        for (id, (&m, prev)) in report.modes.iter().zip(prev_modes.iter_mut()).enumerate() {
            if m != *prev {
                trace.mode_switches.push(ModeSwitch {
                    time,
                    agent: id,
                    mode: m,
                });
                *prev = m;
            }
        }
        trace.times.push(time);
        trace.states.push(row);
        trace.q.push(report.q.clone());
        trace.w.push(report.w.clone());
        trace.assignments.extend(report.decisions.iter().cloned());
        trace
            .triggers
            .extend(report.triggers.iter().map(|&p| (time, p)));
        trace.flags.extend(report.flags.iter().copied());
        trace.lyapunov_total.push(report.v_total);
        trace.min_clearance.push(report.min_clearance);

        if converged(
            &prepared.state.agents,
            &scenario.goals,
            config.convergence_tol,
        ) {
            trace.termination = Termination::Converged;
            return Ok(trace);
        }
        if time >= config.max_time {
            trace.termination = Termination::Timeout;
            return Ok(trace);
        }
        match integrate(prepared, config, scenario) {
            Ok((next, _)) => state = next,
            Err(StepError::Breach { time, kind }) => {
                trace.termination = Termination::Breach { time, kind };
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
    }
}

use oga_core::assignment::{brute_force_assign, cost_matrix};
use oga_core::commgraph::Pair;
use oga_core::scenario::{validate_scenario, DEFAULT_Q_BAND};
use oga_core::sim::{
    metrics, run, step, BreachKind, Integrator, SimState, SupervisorPolicy, Termination,
};
use oga_core::{AgentState, Mode, Scenario, SimConfig, Vec2};

/// `(start, goal index, λ)` per agent.
fn scenario(agents: &[(Vec2, usize, f64)], goals: &[Vec2], dt: f64) -> Scenario {
    Scenario {
        agents: agents
            .iter()
            .enumerate()
            .map(|(i, &(p, g, lambda))| AgentState {
                lambda,
                ..AgentState::new(i, p, g)
            })
            .collect(),
        goals: goals.to_vec(),
        comm_range: 1.25,
        comm_band: 0.25,
        min_separation: 0.5,
        workspace_center: Vec2::ZERO,
        workspace_radius: 6.0,
        aggregation_power: 4.0,
        lr_gains: vec![1.0; agents.len()],
        q_band: DEFAULT_Q_BAND,
        grad_floor: 1e-8,
        dt,
        max_time: 30.0,
    }
}

fn config(s: &Scenario) -> SimConfig {
    SimConfig::from_scenario(s)
}

/// After swapping goals the fast agent overtakes the slow one along
/// parallel lanes closer than Δ.
fn overtaking_swap() -> Scenario {
    scenario(
        &[
            (Vec2::new(0.0, 0.0), 1, 1.0),
            (Vec2::new(-1.0, 0.3), 0, 5.0),
        ],
        &[Vec2::new(2.0, 0.0), Vec2::new(3.0, 0.3)],
        1e-3,
    )
}

#[test]
fn lone_agent_closes_the_gap_by_one_minus_dt() {
    let s = validate_scenario(scenario(
        &[(Vec2::new(1.0, 0.0), 0, 1.0)],
        &[Vec2::ZERO],
        0.01,
    ))
    .unwrap();
    let c = config(&s);
    let mut state = SimState::initial(&s);
    let mut gap = 1.0;
    for _ in 0..50 {
        let (next, report) = step(&state, &c, &s).unwrap();
        assert_eq!(report.modes, vec![Mode::Oga]);
        let new_gap = next.agents[0].position.norm();
        assert!((new_gap - 0.99 * gap).abs() < 1e-14);
        gap = new_gap;
        state = next;
    }
}

#[test]
fn frozen_rk4_contracts_like_the_exponential() {
    let dt = 0.01;
    let s = validate_scenario(scenario(
        &[(Vec2::new(1.0, 0.0), 0, 1.0)],
        &[Vec2::ZERO],
        dt,
    ))
    .unwrap();
    let c = SimConfig {
        integrator: Integrator::Rk4FrozenInputs,
        ..config(&s)
    };
    let (next, _) = step(&SimState::initial(&s), &c, &s).unwrap();
    let factor = 1.0 - dt + dt * dt / 2.0 - dt.powi(3) / 6.0 + dt.powi(4) / 24.0;
    assert!((next.agents[0].position.x - factor).abs() < 1e-15);
}

#[test]
fn agents_out_of_range_never_decide() {
    let s = validate_scenario(scenario(
        &[
            (Vec2::new(-3.0, 0.0), 0, 1.0),
            (Vec2::new(3.0, 0.0), 1, 1.0),
        ],
        &[Vec2::new(-2.0, 1.0), Vec2::new(2.0, -1.0)],
        1e-3,
    ))
    .unwrap();
    let trace = run(&s, &config(&s)).unwrap();
    assert_eq!(trace.termination, Termination::Converged);
    assert!(trace.assignments.is_empty());
    assert!(trace.triggers.is_empty());
    let last = trace.states.last().unwrap();
    assert_eq!((last[0].goal_index, last[1].goal_index), (0, 1));
    let m = metrics(&trace);
    assert_eq!(m.lr_fraction, 0.0);
    assert_eq!(m.decision_count, 0);
}

#[test]
fn meeting_with_a_wasteful_assignment_swaps_once() {
    // heading for the far goals, the agents meet in the middle
    let goals = [Vec2::new(2.5, 1.0), Vec2::new(-2.5, 1.0)];
    let s = validate_scenario(scenario(
        &[
            (Vec2::new(-2.5, 0.0), 0, 1.0),
            (Vec2::new(2.5, 0.0), 1, 1.0),
        ],
        &goals,
        1e-3,
    ))
    .unwrap();
    let trace = run(&s, &config(&s)).unwrap();
    assert_eq!(trace.termination, Termination::Converged);
    assert_eq!(trace.assignments.len(), 1);
    let d = &trace.assignments[0];
    assert!(d.time > 0.0);
    assert!(d.changed);
    assert_eq!(d.assignment.goal_of, vec![1, 0]);

    let row = trace.times.iter().position(|&t| t == d.time).unwrap();
    let positions: Vec<Vec2> = trace.states[row].iter().map(|a| a.position).collect();
    let oracle = brute_force_assign(&cost_matrix(&positions, &goals)).unwrap();
    assert_eq!(oracle.perm, vec![1, 0]);
    assert!((d.new_cost - oracle.total_cost).abs() < 1e-12);
    assert!(d.old_cost > d.new_cost);
    assert!(metrics(&trace).min_clearance > 0.0);
}

#[test]
fn goal_seeking_alone_collides_after_the_swap() {
    let s = validate_scenario(overtaking_swap()).unwrap();
    let c = SimConfig {
        supervisor: SupervisorPolicy::GoalSeekingOnly,
        ..config(&s)
    };
    let trace = run(&s, &c).unwrap();
    assert_eq!(trace.assignments.len(), 1);
    assert!(trace.assignments[0].changed);
    match trace.termination {
        Termination::Breach { kind, .. } => assert_eq!(kind, BreachKind::Collision(Pair(0, 1))),
        other => panic!("expected a collision, got {other:?}"),
    }
}

#[test]
fn last_resort_prevents_the_collision() {
    let s = validate_scenario(overtaking_swap()).unwrap();
    let trace = run(&s, &config(&s)).unwrap();
    assert_eq!(trace.termination, Termination::Converged);
    let m = metrics(&trace);
    assert!(m.lr_fraction > 0.0);
    assert!(m.min_clearance > 0.0);
    assert!(trace.min_clearance.iter().all(|&c| c > 0.0));
    assert!(trace.assignments[0].changed);
    let last = trace.states.last().unwrap();
    assert_eq!((last[0].goal_index, last[1].goal_index), (0, 1));
}

#[test]
fn idle_agent_at_its_goal() {
    let g = Vec2::new(0.5, -0.5);
    let s = validate_scenario(scenario(&[(g, 0, 1.0)], &[g], 1e-3)).unwrap();
    let trace = run(&s, &config(&s)).unwrap();
    assert_eq!(trace.termination, Termination::Converged);
    let m = metrics(&trace);
    assert_eq!(m.total_path_length, 0.0);
    assert_eq!(m.lr_fraction, 0.0);
    assert_eq!(m.final_time, 0.0);
    assert!(m.switch_intervals.is_empty());
}

#[test]
fn horizon_ends_the_run() {
    let mut raw = scenario(&[(Vec2::new(3.0, 0.0), 0, 1.0)], &[Vec2::ZERO], 1e-2);
    raw.max_time = 0.5;
    let s = validate_scenario(raw).unwrap();
    let trace = run(&s, &config(&s)).unwrap();
    assert_eq!(trace.termination, Termination::Timeout);
    assert!((trace.times.last().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn identical_inputs_give_identical_traces() {
    let s = validate_scenario(overtaking_swap()).unwrap();
    assert_eq!(run(&s, &config(&s)).unwrap(), run(&s, &config(&s)).unwrap());
}

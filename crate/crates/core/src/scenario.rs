//! Agents, goals, team-wide parameters and their validation.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::geometry::{distance, Vec2};

/// Which closed-loop vector field an agent currently follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    /// Straight-line pursuit of the assigned goal.
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "OGA"))]
    Oga,
    /// Barrier-gradient last resort law.
    #[cfg_attr(feature = "serde", serde(rename = "LR"))]
    Lr,
}

impl Mode {
    /// Short label used in text outputs.
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Oga => "OGA",
            Mode::Lr => "LR",
        }
    }
}

/// State of one agent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct AgentState {
    /// Index of the agent in the scenario.
    pub id: usize,
    /// Current position.
    pub position: Vec2,
    /// Index of the assigned goal.
    pub goal_index: usize,
    /// Active control mode.
    pub mode: Mode,
    /// Goal-seeking gain (1/s).
    pub lambda: f64,
    /// Most recent velocity command (m/s).
    pub last_velocity: Vec2,
}

impl AgentState {
    /// A fresh agent in goal-seeking mode, at rest, with gain 1.
    pub fn new(id: usize, position: Vec2, goal_index: usize) -> Self {
        Self {
            id,
            position,
            goal_index,
            mode: Mode::Oga,
            lambda: 1.0,
            last_velocity: Vec2::ZERO,
        }
    }
}

/// Initial configuration of a team plus every tunable parameter.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Scenario {
    /// Initial agent states; `agents[i].id == i`.
    pub agents: Vec<AgentState>,
    /// Stationary goal locations.
    pub goals: Vec<Vec2>,
    /// Communication range R_c (m).
    pub comm_range: f64,
    /// Width of the disconnect band above R_c (m).
    pub comm_band: f64,
    /// Minimum allowed pairwise distance Δ (m), twice the robot radius.
    pub min_separation: f64,
    /// Center of the circular workspace.
    pub workspace_center: Vec2,
    /// Radius of the circular workspace (m).
    pub workspace_radius: f64,
    /// Exponent of the smooth maximum over barrier terms (≥ 1).
    pub aggregation_power: f64,
    /// Last resort gains, one per agent.
    pub lr_gains: Vec<f64>,
    /// Half-width of the hysteresis band on the safety surface.
    pub q_band: f64,
    /// Floor on gradient components used as divisors by the last resort law.
    pub grad_floor: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Simulation horizon (s).
    pub max_time: f64,
}

/// Default exponent of the barrier aggregation.
pub const DEFAULT_AGGREGATION_POWER: f64 = 4.0;
/// Default floor on gradient components in the last resort law.
pub const DEFAULT_GRAD_FLOOR: f64 = 1e-8;
/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// Default hysteresis half-width. The default supervisor compares it with
/// the safety surface divided by its own magnitude bound, a value in
/// `[-1, 1]`, so it is dimensionless.
pub const DEFAULT_Q_BAND: f64 = 0.2;

/// The first violated scenario invariant.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario must contain at least one agent")]
    Empty,
    #[error("agent count {agents} must equal goal count {goals}")]
    CountMismatch { agents: usize, goals: usize },
    #[error("agent at index {index} has id {id}; ids must equal positions in the list")]
    BadId { index: usize, id: usize },
    #[error("field {field} must be finite")]
    NonFinite { field: &'static str },
    #[error("field {field} must be positive")]
    NonPositive { field: &'static str },
    #[error("lambda of agent {agent} must be positive")]
    BadLambda { agent: usize },
    #[error("goal_index {goal} of agent {agent} is out of range")]
    GoalOutOfRange { agent: usize, goal: usize },
    #[error("goal {goal} is assigned to more than one agent")]
    GoalShared { goal: usize },
    #[error("lr_gains has {got} entries, expected {expected}")]
    GainCount { got: usize, expected: usize },
    #[error("lr_gains[{agent}] must be positive")]
    BadGain { agent: usize },
    #[error("aggregation_power must be at least 1")]
    AggregationPower,
    #[error("R_0 must exceed R_c")]
    WorkspaceTooSmall,
    #[error("Δ must be below R_c")]
    SeparationTooLarge,
    #[error("comm_band δ_c must be below R_c")]
    BandTooWide,
    #[error("initial position of agent {agent} is not strictly inside the workspace")]
    AgentOutside { agent: usize },
    #[error("goal {goal} is not strictly inside the workspace")]
    GoalOutside { goal: usize },
    #[error("initial pairwise distance ≤ Δ for agents {0} and {1}")]
    TooClose(usize, usize),
    #[error("goals {0} and {1} coincide")]
    GoalsCoincide(usize, usize),
}

/// A scenario that passed [`validate_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario(Scenario);

impl ValidatedScenario {
    /// Gives back the inner scenario.
    pub fn into_inner(self) -> Scenario {
        self.0
    }
}

impl Deref for ValidatedScenario {
    type Target = Scenario;
    fn deref(&self) -> &Scenario {
        &self.0
    }
}

impl TryFrom<Scenario> for ValidatedScenario {
    type Error = ScenarioError;
    fn try_from(s: Scenario) -> Result<Self, ScenarioError> {
        validate_scenario(s)
    }
}

fn positive(value: f64, field: &'static str) -> Result<(), ScenarioError> {
    if !value.is_finite() {
        return Err(ScenarioError::NonFinite { field });
    }
    if value <= 0.0 {
        return Err(ScenarioError::NonPositive { field });
    }
    Ok(())
}

/// Checks every scenario invariant and reports the first one violated.
pub fn validate_scenario(s: Scenario) -> Result<ValidatedScenario, ScenarioError> {
    let n = s.agents.len();
    if n == 0 {
        return Err(ScenarioError::Empty);
    }
    if s.goals.len() != n {
        return Err(ScenarioError::CountMismatch {
            agents: n,
            goals: s.goals.len(),
        });
    }
    positive(s.comm_range, "comm_range")?;
    positive(s.comm_band, "comm_band")?;
    positive(s.min_separation, "min_separation")?;
    positive(s.workspace_radius, "workspace_radius")?;
    positive(s.q_band, "q_band")?;
    positive(s.grad_floor, "grad_floor")?;
    positive(s.dt, "dt")?;
    positive(s.max_time, "max_time")?;
    if !s.workspace_center.is_finite() {
        return Err(ScenarioError::NonFinite {
            field: "workspace_center",
        });
    }
    if !s.aggregation_power.is_finite() {
        return Err(ScenarioError::NonFinite {
            field: "aggregation_power",
        });
    }
    if s.aggregation_power < 1.0 {
        return Err(ScenarioError::AggregationPower);
    }
    if s.workspace_radius <= s.comm_range {
        return Err(ScenarioError::WorkspaceTooSmall);
    }
    if s.min_separation >= s.comm_range {
        return Err(ScenarioError::SeparationTooLarge);
    }
    if s.comm_band >= s.comm_range {
        return Err(ScenarioError::BandTooWide);
    }
    if s.lr_gains.len() != n {
        return Err(ScenarioError::GainCount {
            got: s.lr_gains.len(),
            expected: n,
        });
    }
    for (i, &k) in s.lr_gains.iter().enumerate() {
        if !(k.is_finite() && k > 0.0) {
            return Err(ScenarioError::BadGain { agent: i });
        }
    }

    let mut owner = vec![false; n];
    for (i, a) in s.agents.iter().enumerate() {
        if a.id != i {
            return Err(ScenarioError::BadId { index: i, id: a.id });
        }
        if !a.position.is_finite() {
            return Err(ScenarioError::NonFinite { field: "position" });
        }
        if !a.last_velocity.is_finite() {
            return Err(ScenarioError::NonFinite {
                field: "last_velocity",
            });
        }
        if !(a.lambda.is_finite() && a.lambda > 0.0) {
            return Err(ScenarioError::BadLambda { agent: i });
        }
        if a.goal_index >= n {
            return Err(ScenarioError::GoalOutOfRange {
                agent: i,
                goal: a.goal_index,
            });
        }
        if owner[a.goal_index] {
            return Err(ScenarioError::GoalShared { goal: a.goal_index });
        }
        owner[a.goal_index] = true;
    }

    for (i, a) in s.agents.iter().enumerate() {
        if distance(a.position, s.workspace_center) >= s.workspace_radius {
            return Err(ScenarioError::AgentOutside { agent: i });
        }
    }
    for (m, g) in s.goals.iter().enumerate() {
        if !g.is_finite() {
            return Err(ScenarioError::NonFinite { field: "goals" });
        }
        if distance(*g, s.workspace_center) >= s.workspace_radius {
            return Err(ScenarioError::GoalOutside { goal: m });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if distance(s.agents[i].position, s.agents[j].position) <= s.min_separation {
                return Err(ScenarioError::TooClose(i, j));
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if s.goals[a] == s.goals[b] {
                return Err(ScenarioError::GoalsCoincide(a, b));
            }
        }
    }
    Ok(ValidatedScenario(s))
}

impl Scenario {
    /// Positions of all agents, in id order.
    pub fn positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.position).collect()
    }

    /// Largest goal-seeking gain in the team.
    pub fn lambda_max(&self) -> f64 {
        self.agents.iter().map(|a| a.lambda).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    pub(crate) fn two_agents() -> Scenario {
        Scenario {
            agents: vec![
                AgentState::new(0, Vec2::new(0.0, 0.0), 0),
                AgentState::new(1, Vec2::new(4.0, 0.0), 1),
            ],
            goals: vec![Vec2::new(0.0, 4.0), Vec2::new(4.0, 4.0)],
            comm_range: 2.0,
            comm_band: 0.2,
            min_separation: 0.5,
            workspace_center: Vec2::ZERO,
            workspace_radius: 20.0,
            aggregation_power: DEFAULT_AGGREGATION_POWER,
            lr_gains: vec![1.0, 1.0],
            q_band: DEFAULT_Q_BAND,
            grad_floor: DEFAULT_GRAD_FLOOR,
            dt: DEFAULT_DT,
            max_time: 20.0,
        }
    }

    #[test]
    fn accepts_valid_scenario() {
        assert!(validate_scenario(two_agents()).is_ok());
    }

    #[test]
    fn rejects_small_workspace() {
        let mut s = two_agents();
        s.workspace_radius = 1.0;
        let err = validate_scenario(s).unwrap_err();
        assert_eq!(err, ScenarioError::WorkspaceTooSmall);
        assert_eq!(err.to_string(), "R_0 must exceed R_c");
    }

    #[test]
    fn rejects_coincident_agents() {
        let mut s = two_agents();
        s.agents[1].position = Vec2::ZERO;
        let err = validate_scenario(s).unwrap_err();
        assert_eq!(err, ScenarioError::TooClose(0, 1));
        assert!(err.to_string().contains("initial pairwise distance ≤ Δ"));
    }

    #[test]
    fn rejects_other_violations() {
        let mut s = two_agents();
        s.goals.pop();
        assert!(matches!(
            validate_scenario(s),
            Err(ScenarioError::CountMismatch { .. })
        ));

        let mut s = two_agents();
        s.min_separation = 3.0;
        assert_eq!(validate_scenario(s), Err(ScenarioError::SeparationTooLarge));

        let mut s = two_agents();
        s.goals[1] = s.goals[0];
        assert_eq!(
            validate_scenario(s),
            Err(ScenarioError::GoalsCoincide(0, 1))
        );

        let mut s = two_agents();
        s.agents[1].goal_index = 0;
        assert_eq!(
            validate_scenario(s),
            Err(ScenarioError::GoalShared { goal: 0 })
        );

        let mut s = two_agents();
        s.agents[0].lambda = 0.0;
        assert_eq!(
            validate_scenario(s),
            Err(ScenarioError::BadLambda { agent: 0 })
        );

        let mut s = two_agents();
        s.goals[0] = Vec2::new(0.0, 20.0);
        assert_eq!(
            validate_scenario(s),
            Err(ScenarioError::GoalOutside { goal: 0 })
        );

        let mut s = two_agents();
        s.aggregation_power = 0.5;
        assert_eq!(validate_scenario(s), Err(ScenarioError::AggregationPower));

        let mut s = two_agents();
        s.dt = f64::NAN;
        assert_eq!(
            validate_scenario(s),
            Err(ScenarioError::NonFinite { field: "dt" })
        );
    }
}

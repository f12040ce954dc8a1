//! Seeded random scenarios: starts and goals drawn uniformly in a disc by
//! rejection sampling, with every agent initially holding the goal with its
//! own index (so the initial assignment is arbitrary).

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{distance, Vec2};
use crate::scenario::{
    validate_scenario, AgentState, Scenario, ScenarioError, DEFAULT_AGGREGATION_POWER, DEFAULT_DT,
    DEFAULT_GRAD_FLOOR, DEFAULT_Q_BAND,
};

/// Knobs of the random scenario generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Team size.
    pub n_agents: usize,
    /// Robot radius R; the minimum separation is 2R.
    pub robot_radius: f64,
    /// Communication range as a multiple of R.
    pub comm_factor: f64,
    /// Disconnect band δ_c as a multiple of R.
    pub band_factor: f64,
    /// Starts and goals are drawn in a disc of this radius around the
    /// workspace center.
    pub placement_radius: f64,
    /// Workspace radius R₀.
    pub workspace_radius: f64,
    /// Minimum start-to-start distance as a multiple of Δ.
    pub start_gap: f64,
    /// Minimum goal-to-goal distance as a multiple of Δ.
    pub goal_gap: f64,
    /// Goal-seeking gain of every agent.
    pub lambda: f64,
    /// Last resort gain of every agent.
    pub lr_gain: f64,
    /// Smooth-maximum exponent.
    pub aggregation_power: f64,
    /// Hysteresis half-width on the safety surface.
    pub q_band: f64,
    /// Integration step.
    pub dt: f64,
    /// Horizon.
    pub max_time: f64,
    /// Draws allowed per point before giving up.
    pub max_attempts: usize,
}

impl Default for GenParams {
    /// Ten robots of radius 0.25 m packed into a 2.5 m disc, talking over
    /// five robot radii.
    fn default() -> Self {
        Self {
            n_agents: 10,
            robot_radius: 0.25,
            comm_factor: 5.0,
            band_factor: 1.0,
            placement_radius: 2.5,
            workspace_radius: 4.0,
            start_gap: 2.0,
            goal_gap: 2.4,
            lambda: 1.0,
            lr_gain: 1.0,
            aggregation_power: DEFAULT_AGGREGATION_POWER,
            q_band: DEFAULT_Q_BAND,
            dt: DEFAULT_DT,
            max_time: 60.0,
            max_attempts: 10_000,
        }
    }
}

/// Generation failed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("need at least one agent")]
    NoAgents,
    #[error("could not place {what} {index} after {attempts} draws; try a larger placement radius or workspace")]
    Crowded {
        what: &'static str,
        index: usize,
        attempts: usize,
    },
    #[error("placement disc must lie strictly inside the workspace")]
    PlacementOutside,
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

fn sample_disc(rng: &mut ChaCha8Rng, center: Vec2, radius: f64) -> Vec2 {
    let r = radius * libm::sqrt(rng.gen::<f64>());
    let theta = 2.0 * core::f64::consts::PI * rng.gen::<f64>();
    center + Vec2::new(r * libm::cos(theta), r * libm::sin(theta))
}

fn place(
    rng: &mut ChaCha8Rng,
    params: &GenParams,
    gap: f64,
    what: &'static str,
) -> Result<Vec<Vec2>, GenError> {
    let mut points: Vec<Vec2> = Vec::with_capacity(params.n_agents);
    for index in 0..params.n_agents {
        let mut placed = false;
        for _ in 0..params.max_attempts {
            let p = sample_disc(rng, Vec2::ZERO, params.placement_radius);
            if points.iter().all(|&q| distance(p, q) > gap) {
                points.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GenError::Crowded {
                what,
                index,
                attempts: params.max_attempts,
            });
        }
    }
    Ok(points)
}

/// Draws a valid scenario; the same seed always gives the same scenario.
pub fn generate_scenario(params: &GenParams, seed: u64) -> Result<Scenario, GenError> {
    if params.n_agents == 0 {
        return Err(GenError::NoAgents);
    }
    if params.placement_radius >= params.workspace_radius {
        return Err(GenError::PlacementOutside);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = 2.0 * params.robot_radius;
    let starts = place(&mut rng, params, params.start_gap * delta, "start")?;
    let goals = place(&mut rng, params, params.goal_gap * delta, "goal")?;
    let agents = starts
        .into_iter()
        .enumerate()
        .map(|(i, p)| AgentState {
            lambda: params.lambda,
            ..AgentState::new(i, p, i)
        })
        .collect();
    let scenario = Scenario {
        agents,
        goals,
        comm_range: params.comm_factor * params.robot_radius,
        comm_band: params.band_factor * params.robot_radius,
        min_separation: delta,
        workspace_center: Vec2::ZERO,
        workspace_radius: params.workspace_radius,
        aggregation_power: params.aggregation_power,
        lr_gains: alloc::vec![params.lr_gain; params.n_agents],
        q_band: params.q_band,
        grad_floor: DEFAULT_GRAD_FLOOR,
        dt: params.dt,
        max_time: params.max_time,
    };
    validate_scenario(scenario.clone())?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenarios_validate_and_repeat() {
        let p = GenParams::default();
        for seed in 0..20 {
            let a = generate_scenario(&p, seed).unwrap();
            assert_eq!(a, generate_scenario(&p, seed).unwrap());
            assert_eq!(a.comm_range, 5.0 * p.robot_radius);
        }
        assert_ne!(
            generate_scenario(&p, 1).unwrap(),
            generate_scenario(&p, 2).unwrap()
        );
    }

    #[test]
    fn overcrowding_is_reported() {
        let p = GenParams {
            n_agents: 200,
            placement_radius: 1.0,
            max_attempts: 50,
            ..GenParams::default()
        };
        assert!(matches!(
            generate_scenario(&p, 0),
            Err(GenError::Crowded { .. })
        ));
    }
}

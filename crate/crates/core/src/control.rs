//! Velocity commands for one agent.
//!
//! Goal seeking is the linear law `u = -λ (r - g)`. Safety is certified by a
//! Lyapunov-like function `W ∈ [0, 1)` assembled from recentered logarithmic
//! barriers: one per neighbor (keep at least Δ apart) and one for the circular
//! workspace. Each barrier is shifted and tilted so that it vanishes at the
//! agent's goal, squared, combined through a smooth maximum
//! `w = (w_0^δ + Σ w_j^δ)^(1/δ)` and squashed as `W = w / (1 + w)`.
//!
//! The time derivative of `W` under candidate commands is the safety surface
//! `Q = ζ·u + Σ ζ_j·u_j`. While it is negative goal seeking is safe; when it
//! turns positive the supervisor hands over to the last resort law, which
//! makes `dW/dt = -k |ζ|²`.

use alloc::vec::Vec;

use crate::geometry::Vec2;
use crate::scenario::Mode;

/// Lower bound applied to a constraint value evaluated at the goal before it
/// enters a logarithm or a division.
pub const GOAL_CONSTRAINT_FLOOR: f64 = 1e-12;

/// The current position violates a constraint, so no barrier exists there.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum BarrierError {
    #[error("agent {agent} is within Δ of agent {neighbor}")]
    PairViolated { agent: usize, neighbor: usize },
    #[error("agent {agent} is outside the workspace")]
    WorkspaceViolated { agent: usize },
}

/// Team-wide barrier and supervisor parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    /// Minimum pairwise distance Δ.
    pub min_separation: f64,
    /// Workspace center.
    pub workspace_center: Vec2,
    /// Workspace radius.
    pub workspace_radius: f64,
    /// Smooth-maximum exponent δ ≥ 1.
    pub aggregation_power: f64,
    /// Hysteresis half-width ε_Q on the safety surface.
    pub q_band: f64,
    /// Divisor floor ε_g of the last resort law.
    pub grad_floor: f64,
}

/// What agent `i` knows about one connected neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Neighbor id.
    pub id: usize,
    /// Neighbor position.
    pub position: Vec2,
    /// Neighbor's assigned goal.
    pub goal: Vec2,
    /// Velocity the neighbor reported.
    pub velocity: Vec2,
}

/// Everything one agent needs to compute its command.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlContext {
    /// Agent id.
    pub agent: usize,
    /// Agent position.
    pub position: Vec2,
    /// Assigned goal.
    pub goal: Vec2,
    /// Goal-seeking gain λ.
    pub lambda: f64,
    /// Last resort gain k.
    pub lr_gain: f64,
    /// The rest of the agent's connected component.
    pub neighbors: Vec<Neighbor>,
    /// Shared parameters.
    pub params: BarrierParams,
}

/// `W` and its gradients for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierEvaluation {
    /// Value of the Lyapunov-like function, in `[0, 1)`.
    pub w: f64,
    /// Gradient with respect to the agent's own position.
    pub zeta_own: Vec2,
    /// Gradient with respect to each neighbor's position, aligned with
    /// [`ControlContext::neighbors`].
    pub zeta_cross: Vec<(usize, Vec2)>,
    /// A constraint at the goal was nonpositive and got floored.
    pub clamped: bool,
}

impl BarrierEvaluation {
    /// `ζ·u_self + Σ ζ_j·u_j`, the rate of change of `W` under the given
    /// commands. `u_neighbors` is aligned with `zeta_cross`.
    pub fn q(&self, u_self: Vec2, u_neighbors: &[Vec2]) -> f64 {
        debug_assert_eq!(u_neighbors.len(), self.zeta_cross.len());
        self.zeta_own.dot(u_self)
            + self
                .zeta_cross
                .iter()
                .zip(u_neighbors)
                .map(|((_, z), u)| z.dot(*u))
                .sum::<f64>()
    }
}

/// Goal-seeking command `-λ (pos - goal)`.
pub fn oga_control(pos: Vec2, goal: Vec2, lambda: f64) -> Vec2 {
    -lambda * (pos - goal)
}

/// `|ri - rj|² - Δ²`; positive while the pair is safe.
pub fn pair_constraint(ri: Vec2, rj: Vec2, min_separation: f64) -> f64 {
    (ri - rj).norm_sq() - min_separation * min_separation
}

/// `R₀² - |ri - r0|²`; positive inside the workspace.
pub fn workspace_constraint(ri: Vec2, r0: Vec2, radius: f64) -> f64 {
    radius * radius - (ri - r0).norm_sq()
}

fn floored(c: f64, clamped: &mut bool) -> f64 {
    if c < GOAL_CONSTRAINT_FLOOR {
        *clamped = true;
        GOAL_CONSTRAINT_FLOOR
    } else {
        c
    }
}

/// One recentered barrier with its partial derivatives.
#[derive(Debug, Clone, Copy)]
struct Term {
    value: f64,
    d_own: Vec2,
    d_other: Vec2,
}

// b(x) = -ln(|x - p|² - Δ²), recentered at g:
//   r = b(x) - b(g) - ∇b(g)·(x - g)
fn pair_term(x: Vec2, p: Vec2, g: Vec2, min_separation: f64, clamped: &mut bool) -> Term {
    let dsq = min_separation * min_separation;
    let cx = (x - p).norm_sq() - dsq;
    let cg = floored((g - p).norm_sq() - dsq, clamped);
    let a = g - p;
    let s = x - g;
    let value = -libm::log(cx) + libm::log(cg) + 2.0 * a.dot(s) / cg;
    let d_own = (x - p) * (-2.0 / cx) + a * (2.0 / cg);
    let d_other = (x - p) * (2.0 / cx - 2.0 / cg) + a * (4.0 * a.dot(s) / (cg * cg));
    Term {
        value,
        d_own,
        d_other,
    }
}

// b(x) = -ln(R₀² - |x - r0|²), recentered at g
fn workspace_term(x: Vec2, center: Vec2, radius: f64, g: Vec2, clamped: &mut bool) -> Term {
    let rsq = radius * radius;
    let cx = rsq - (x - center).norm_sq();
    let cg = floored(rsq - (g - center).norm_sq(), clamped);
    let value = -libm::log(cx) + libm::log(cg) - 2.0 * (g - center).dot(x - g) / cg;
    let d_own = (x - center) * (2.0 / cx) - (g - center) * (2.0 / cg);
    Term {
        value,
        d_own,
        d_other: Vec2::ZERO,
    }
}

/// Recentered logarithmic barrier of the pair constraint, zero at `goal`.
///
/// Both the current pair and the goal/neighbor pair must be strictly
/// feasible.
pub fn recentered_pair_barrier(
    ri: Vec2,
    rj: Vec2,
    goal: Vec2,
    min_separation: f64,
) -> Result<f64, BarrierError> {
    if pair_constraint(ri, rj, min_separation) <= 0.0
        || pair_constraint(goal, rj, min_separation) <= 0.0
    {
        return Err(BarrierError::PairViolated {
            agent: 0,
            neighbor: 1,
        });
    }
    let mut clamped = false;
    Ok(pair_term(ri, rj, goal, min_separation, &mut clamped).value)
}

/// Recentered logarithmic barrier of the workspace constraint, zero at `goal`.
pub fn recentered_workspace_barrier(
    ri: Vec2,
    center: Vec2,
    radius: f64,
    goal: Vec2,
) -> Result<f64, BarrierError> {
    if workspace_constraint(ri, center, radius) <= 0.0
        || workspace_constraint(goal, center, radius) <= 0.0
    {
        return Err(BarrierError::WorkspaceViolated { agent: 0 });
    }
    let mut clamped = false;
    Ok(workspace_term(ri, center, radius, goal, &mut clamped).value)
}

/// Evaluates `W` and its exact gradients for the agent in `ctx`.
///
/// Constraints at the agent's goal that are not strictly positive (a
/// neighbor parked near the goal) are floored at [`GOAL_CONSTRAINT_FLOOR`]
/// and reported through `clamped`.
pub fn eval_barrier(ctx: &ControlContext) -> Result<BarrierEvaluation, BarrierError> {
    let p = &ctx.params;
    let x = ctx.position;
    if workspace_constraint(x, p.workspace_center, p.workspace_radius) <= 0.0 {
        return Err(BarrierError::WorkspaceViolated { agent: ctx.agent });
    }
    for nb in &ctx.neighbors {
        if pair_constraint(x, nb.position, p.min_separation) <= 0.0 {
            return Err(BarrierError::PairViolated {
                agent: ctx.agent,
                neighbor: nb.id,
            });
        }
    }

    let mut clamped = false;
    let ws = workspace_term(
        x,
        p.workspace_center,
        p.workspace_radius,
        ctx.goal,
        &mut clamped,
    );
    let pairs: Vec<Term> = ctx
        .neighbors
        .iter()
        .map(|nb| pair_term(x, nb.position, ctx.goal, p.min_separation, &mut clamped))
        .collect();

    let squared = |t: &Term| t.value * t.value;
    let w_max = pairs.iter().map(squared).fold(squared(&ws), f64::max);
    if w_max == 0.0 {
        return Ok(BarrierEvaluation {
            w: 0.0,
            zeta_own: Vec2::ZERO,
            zeta_cross: ctx.neighbors.iter().map(|nb| (nb.id, Vec2::ZERO)).collect(),
            clamped,
        });
    }

    // Smooth maximum, scaled by the largest term to stay finite.
    let delta = p.aggregation_power;
    let scaled_sum: f64 = core::iter::once(&ws)
        .chain(pairs.iter())
        .map(|t| libm::pow(squared(t) / w_max, delta))
        .sum();
    let w = w_max * libm::pow(scaled_sum, 1.0 / delta);
    let d_big_w = 1.0 / ((1.0 + w) * (1.0 + w));
    // ∂w/∂w_k = (w_k / w)^(δ-1), ∂w_k = 2 r_k ∂r_k
    let factor = |t: &Term| d_big_w * libm::pow(squared(t) / w, delta - 1.0) * 2.0 * t.value;

    let mut zeta_own = ws.d_own * factor(&ws);
    let mut zeta_cross = Vec::with_capacity(pairs.len());
    for (t, nb) in pairs.iter().zip(&ctx.neighbors) {
        let f = factor(t);
        zeta_own += t.d_own * f;
        zeta_cross.push((nb.id, t.d_other * f));
    }
    Ok(BarrierEvaluation {
        w: w / (1.0 + w),
        zeta_own,
        zeta_cross,
        clamped,
    })
}

/// Safety surface `ζ·u_self + Σ ζ_j·u_j` for the agent in `ctx`.
pub fn q_surface(
    ctx: &ControlContext,
    u_self: Vec2,
    u_neighbors: &[Vec2],
) -> Result<f64, BarrierError> {
    Ok(eval_barrier(ctx)?.q(u_self, u_neighbors))
}

/// A last resort command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrCommand {
    /// Commanded velocity.
    pub velocity: Vec2,
    /// Both gradient components fell below the floor while neighbors were
    /// moving, so plain gradient descent was used.
    pub degenerate: bool,
}

fn sign_floor(d: f64, floor: f64) -> f64 {
    if d.abs() >= floor {
        d
    } else if d < 0.0 {
        -floor
    } else {
        floor
    }
}

/// Form of the last resort law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum LrLaw {
    /// Per axis: `u_x = -k ∂W/∂x - (Σ_j ∂W/∂x_j u_jx) / ∂W/∂x`, likewise for
    /// `y`. Divisors below `grad_floor` in magnitude become `±grad_floor`.
    PerAxis,
    /// `u = -k ζ - ζ (Σ_j ζ_j·u_j) / |ζ|²`; same rate of change of `W`, but
    /// singular only where the whole gradient vanishes.
    #[default]
    Projected,
    /// Like `Projected`, but neighbor motion is only cancelled when it
    /// raises `W`, so `dW/dt ≤ -k |ζ|²`.
    ProjectedAdverse,
}

/// Last resort command for the given barrier evaluation.
pub fn lr_command(ctx: &ControlContext, eval: &BarrierEvaluation, law: LrLaw) -> LrCommand {
    let k = ctx.lr_gain;
    let floor = ctx.params.grad_floor;
    let z = eval.zeta_own;
    let (mut cross_x, mut cross_y) = (0.0, 0.0);
    for ((_, zc), nb) in eval.zeta_cross.iter().zip(&ctx.neighbors) {
        cross_x += zc.x * nb.velocity.x;
        cross_y += zc.y * nb.velocity.y;
    }
    let moving = cross_x != 0.0 || cross_y != 0.0;
    if z.x.abs() < floor && z.y.abs() < floor && moving {
        return LrCommand {
            velocity: -k * z,
            degenerate: true,
        };
    }
    let velocity = match law {
        LrLaw::PerAxis => {
            let ux = -k * z.x
                - if cross_x == 0.0 {
                    0.0
                } else {
                    cross_x / sign_floor(z.x, floor)
                };
            let uy = -k * z.y
                - if cross_y == 0.0 {
                    0.0
                } else {
                    cross_y / sign_floor(z.y, floor)
                };
            Vec2::new(ux, uy)
        }
        LrLaw::Projected | LrLaw::ProjectedAdverse => {
            let mut cross = cross_x + cross_y;
            if law == LrLaw::ProjectedAdverse {
                cross = cross.max(0.0);
            }
            if cross == 0.0 {
                -k * z
            } else {
                -k * z - z * (cross / z.norm_sq())
            }
        }
    };
    LrCommand {
        velocity,
        degenerate: false,
    }
}

/// Evaluates the barrier and returns the last resort command.
pub fn lr_control(ctx: &ControlContext, law: LrLaw) -> Result<LrCommand, BarrierError> {
    let eval = eval_barrier(ctx)?;
    Ok(lr_command(ctx, &eval, law))
}

/// Result of one supervisor evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    /// Mode after this evaluation.
    pub mode: Mode,
    /// Command to apply.
    pub velocity: Vec2,
    /// Safety surface under the goal-seeking command.
    pub q: f64,
    /// Value of `W`.
    pub w: f64,
    /// A goal-side constraint was floored.
    pub clamped: bool,
    /// The last resort law fell back to gradient descent.
    pub degenerate: bool,
}

/// What the hysteresis band on the safety surface is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BandScale {
    /// `Q` itself.
    Absolute,
    /// `Q / (|ζ||u| + Σ |ζ_j||u_j|)`, which lies in `[-1, 1]` and keeps the
    /// sign of `Q`.
    #[default]
    Normalized,
}

/// Supervisor settings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupervisorSettings {
    /// Last resort law.
    pub law: LrLaw,
    /// Scale of the switching band.
    pub band: BandScale,
    /// Leave the last resort once its command is slower than this fraction
    /// of the goal-seeking command. Entering it then also needs a command at
    /// least twice that fraction, so a stalled agent does not flip back on
    /// the next step.
    pub stall_ratio: Option<f64>,
}

/// Next mode from the previous mode and the safety surface value: enter the
/// last resort at `q ≥ ε_Q`, leave it at `q ≤ -ε_Q`, hold in between.
pub fn next_mode(prev: Mode, q: f64, q_band: f64) -> Mode {
    match prev {
        Mode::Oga if q >= q_band => Mode::Lr,
        Mode::Lr if q <= -q_band => Mode::Oga,
        m => m,
    }
}

/// Chooses between goal seeking and the last resort with hysteresis on the
/// safety surface, and returns the resulting command.
pub fn supervise(
    ctx: &ControlContext,
    prev_mode: Mode,
    settings: SupervisorSettings,
) -> Result<Supervision, BarrierError> {
    let u_oga = oga_control(ctx.position, ctx.goal, ctx.lambda);
    let eval = eval_barrier(ctx)?;
    let u_neighbors: Vec<Vec2> = ctx.neighbors.iter().map(|nb| nb.velocity).collect();
    let q = eval.q(u_oga, &u_neighbors);
    let switching_value = match settings.band {
        BandScale::Absolute => q,
        BandScale::Normalized => {
            let scale = eval.zeta_own.norm() * u_oga.norm()
                + eval
                    .zeta_cross
                    .iter()
                    .zip(&u_neighbors)
                    .map(|((_, z), u)| z.norm() * u.norm())
                    .sum::<f64>();
            if scale > 0.0 {
                q / scale
            } else {
                0.0
            }
        }
    };
    let mode = if ctx.neighbors.is_empty() {
        Mode::Oga
    } else {
        next_mode(prev_mode, switching_value, ctx.params.q_band)
    };
    let (mode, velocity, degenerate) = match mode {
        Mode::Oga => (mode, u_oga, false),
        Mode::Lr => {
            let lr = lr_command(ctx, &eval, settings.law);
            let stalled = settings.stall_ratio.is_some_and(|r| {
                let needed = if prev_mode == Mode::Lr { r } else { 2.0 * r };
                lr.velocity.norm() < needed * u_oga.norm()
            });
            if stalled {
                (Mode::Oga, u_oga, false)
            } else {
                (mode, lr.velocity, lr.degenerate)
            }
        }
    };
    Ok(Supervision {
        mode,
        velocity,
        q,
        w: eval.w,
        clamped: eval.clamped,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params() -> BarrierParams {
        BarrierParams {
            min_separation: 0.5,
            workspace_center: Vec2::ZERO,
            workspace_radius: 10.0,
            aggregation_power: 4.0,
            q_band: 1e-3,
            grad_floor: 1e-8,
        }
    }

    fn ctx(position: Vec2, goal: Vec2, neighbors: Vec<Neighbor>) -> ControlContext {
        ControlContext {
            agent: 0,
            position,
            goal,
            lambda: 1.0,
            lr_gain: 1.0,
            neighbors,
            params: params(),
        }
    }

    fn nb(id: usize, position: Vec2, velocity: Vec2) -> Neighbor {
        Neighbor {
            id,
            position,
            goal: position,
            velocity,
        }
    }

    #[test]
    fn oga_examples() {
        assert_eq!(
            oga_control(Vec2::new(2.0, 0.0), Vec2::ZERO, 1.0),
            Vec2::new(-2.0, 0.0)
        );
        assert_eq!(
            oga_control(Vec2::new(3.0, 3.0), Vec2::new(3.0, 3.0), 1.0),
            Vec2::ZERO
        );
        assert_eq!(
            oga_control(Vec2::new(1.0, 1.0), Vec2::ZERO, 2.0),
            Vec2::new(-2.0, -2.0)
        );
    }

    #[test]
    fn constraint_examples() {
        assert!(pair_constraint(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0).abs() < 1e-15);
        assert_eq!(pair_constraint(Vec2::ZERO, Vec2::new(3.0, 0.0), 1.0), 8.0);
        assert!(pair_constraint(Vec2::ZERO, Vec2::new(0.5, 0.0), 1.0) < 0.0);
        assert_eq!(workspace_constraint(Vec2::ZERO, Vec2::ZERO, 10.0), 100.0);
        assert_eq!(
            workspace_constraint(Vec2::new(6.0, 8.0), Vec2::ZERO, 10.0),
            0.0
        );
        assert_eq!(
            workspace_constraint(Vec2::new(3.0, 4.0), Vec2::ZERO, 10.0),
            75.0
        );
    }

    #[test]
    fn pair_barrier_vanishes_at_goal_and_blows_up_at_contact() {
        let rj = Vec2::new(2.0, 0.0);
        let g = Vec2::new(-1.0, 1.0);
        assert_eq!(recentered_pair_barrier(g, rj, g, 0.5).unwrap(), 0.0);
        let near = Vec2::new(2.0 - 0.5 - 1e-6, 0.0);
        assert!(recentered_pair_barrier(near, rj, g, 0.5).unwrap() > 10.0);
        assert!(recentered_pair_barrier(Vec2::new(1.8, 0.0), rj, g, 0.5).is_err());
    }

    #[test]
    fn at_goal_everything_vanishes() {
        let g = Vec2::new(1.0, 1.0);
        let c = ctx(g, g, vec![nb(1, Vec2::new(3.0, 1.0), Vec2::new(-1.0, 0.0))]);
        let e = eval_barrier(&c).unwrap();
        assert_eq!(e.w, 0.0);
        assert_eq!(e.zeta_own, Vec2::ZERO);
        assert_eq!(
            q_surface(&c, Vec2::new(5.0, 2.0), &[Vec2::new(-1.0, 0.0)]).unwrap(),
            0.0
        );
    }

    #[test]
    fn isolated_agent_sees_only_the_workspace() {
        let c = ctx(Vec2::new(2.0, 1.0), Vec2::new(-1.0, 0.5), vec![]);
        let e = eval_barrier(&c).unwrap();
        let r0 = recentered_workspace_barrier(c.position, Vec2::ZERO, 10.0, c.goal).unwrap();
        let w = r0 * r0;
        assert!(e.w > 0.0);
        assert!((e.w - w / (1.0 + w)).abs() < 1e-15);
        let s = supervise(
            &c,
            Mode::Lr,
            SupervisorSettings {
                law: LrLaw::PerAxis,
                band: BandScale::Absolute,
                stall_ratio: None,
            },
        )
        .unwrap();
        assert_eq!(s.mode, Mode::Oga);
        assert_eq!(s.velocity, oga_control(c.position, c.goal, 1.0));
    }

    #[test]
    fn lr_is_gradient_descent_when_neighbors_rest() {
        let c = ctx(
            Vec2::new(0.3, 0.2),
            Vec2::new(-1.0, 0.0),
            vec![nb(1, Vec2::new(1.2, 0.4), Vec2::ZERO)],
        );
        let e = eval_barrier(&c).unwrap();
        let lr = lr_control(&c, LrLaw::PerAxis).unwrap();
        assert!(!lr.degenerate);
        assert_eq!(lr.velocity, -1.0 * e.zeta_own);
    }

    #[test]
    fn lr_at_goal_without_neighbors_is_still() {
        let g = Vec2::new(1.0, -2.0);
        let lr = lr_control(&ctx(g, g, vec![]), LrLaw::PerAxis).unwrap();
        assert_eq!(lr.velocity, Vec2::ZERO);
    }

    #[test]
    fn lr_falls_back_when_gradient_vanishes() {
        let g = Vec2::new(1.0, 1.0);
        let c = ctx(g, g, vec![nb(1, Vec2::new(3.0, 1.0), Vec2::new(-1.0, 0.0))]);
        let e = BarrierEvaluation {
            w: 0.0,
            zeta_own: Vec2::ZERO,
            zeta_cross: vec![(1, Vec2::new(0.3, 0.0))],
            clamped: false,
        };
        let lr = lr_command(&c, &e, LrLaw::PerAxis);
        assert!(lr.degenerate);
        assert_eq!(lr.velocity, Vec2::ZERO);
    }

    #[test]
    fn hysteresis_holds_inside_band() {
        assert_eq!(next_mode(Mode::Lr, 0.0, 1e-3), Mode::Lr);
        assert_eq!(next_mode(Mode::Oga, 0.0, 1e-3), Mode::Oga);
        assert_eq!(next_mode(Mode::Oga, 1e-3, 1e-3), Mode::Lr);
        assert_eq!(next_mode(Mode::Lr, -1e-3, 1e-3), Mode::Oga);
    }

    #[test]
    fn head_on_pair_triggers_last_resort() {
        // agent 0 heads right, its neighbor heads left straight at it; the
        // tilt of the recentered barrier keeps q negative until close range
        let mut c = ctx(
            Vec2::new(-0.03, 0.0),
            Vec2::new(2.0, 0.0),
            vec![Neighbor {
                id: 1,
                position: Vec2::new(0.5, 0.0),
                goal: Vec2::new(-2.0, 0.0),
                velocity: Vec2::new(-1.5, 0.0),
            }],
        );
        c.params.q_band = 1e-3;
        let s = supervise(
            &c,
            Mode::Oga,
            SupervisorSettings {
                law: LrLaw::PerAxis,
                band: BandScale::Absolute,
                stall_ratio: None,
            },
        )
        .unwrap();
        assert!(s.q >= 1e-3, "q = {}", s.q);
        assert_eq!(s.mode, Mode::Lr);
    }

    #[test]
    fn w_rises_toward_one_at_contact() {
        let g = Vec2::new(-2.0, 0.0);
        let rj = Vec2::new(1.0, 0.0);
        let mut last = -1.0;
        for k in 1..60 {
            let gap = 0.5 * libm::pow(0.7, k as f64);
            let x = Vec2::new(1.0 - 0.5 - gap, 0.0);
            let e = eval_barrier(&ctx(x, g, vec![nb(1, rj, Vec2::ZERO)])).unwrap();
            assert!(e.w > last && e.w < 1.0);
            last = e.w;
        }
        assert!(last > 0.9);
    }
}

//! Decentralized optimal goal assignment for planar multi-robot teams with
//! range-limited communication, plus a barrier-function "last resort" policy
//! that keeps the team collision free while it converges.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, file formats and the command line live in the
//! `oga` companion crate.
//!
//! Layout:
//! - [`geometry`]: [`Vec2`] and distances.
//! - [`scenario`]: agents, goals, parameters and validation.
//! - [`commgraph`]: hysteresis on communication links and connected components.
//! - [`assignment`]: cost matrices, Hungarian solver, brute-force oracle and
//!   the keep-or-swap decision rule.
//! - [`control`]: goal-seeking law, recentered barriers, safety surface, last
//!   resort law and the per-agent mode supervisor.
//! - [`sim`]: fixed-step closed loop, traces and metrics.
//! - [`generate`]: seeded random scenarios.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod assignment;
pub mod commgraph;
pub mod control;
pub mod generate;
pub mod geometry;
pub mod scenario;
pub mod sim;

pub use assignment::{Assignment, CostMatrix};
pub use commgraph::{CommHysteresis, ComponentSet, Link};
pub use control::{BarrierEvaluation, BarrierParams, ControlContext, Neighbor};
pub use geometry::{distance, Vec2};
pub use scenario::{AgentState, Mode, Scenario, ScenarioError, ValidatedScenario};
pub use sim::{SimConfig, SimTrace, StepReport, Termination};

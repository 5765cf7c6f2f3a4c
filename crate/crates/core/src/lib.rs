//! Leader-follower confinement through oscillatory leader inputs.
//!
//! A single kinematic leader circles a moving target point while N followers
//! with damped double-integrator dynamics are pushed away from it by a
//! repulsive power-law potential. Averaged over one leader orbit, the
//! repulsion becomes a restoring force toward the orbit center, which is what
//! keeps the followers close to the target trajectory.
//!
//! The crate is organised as:
//!
//! * [`dynamics`]: parameters, state, trajectories, interaction graphs and the
//!   vector fields of the leader-follower system.
//! * [`integrate`]: fixed-step RK4 integration with per-step event monitoring.
//! * [`averaging`]: the orbit-averaged field, its Jacobian at the orbit center
//!   and the associated spectra.
//! * [`confinement`]: verification of the confinement conditions, tracking
//!   error metrics, initial-condition sampling and parameter sweeps.
//! * [`scenarios`]: built-in scenarios and the JSON scenario file format.

pub mod averaging;
pub mod confinement;
pub mod dynamics;
pub mod integrate;
pub mod scenarios;

pub use averaging::{AveragedState, AveragingError, Spectrum, StabilityVerdict};
pub use confinement::{ConfinementReport, FollowerMetrics, SweepAxis, SweepCell, SweepResult};
pub use dynamics::{
    DynamicsError, FollowerState, InteractionGraph, SwarmState, SystemParams, Trajectory, Vec2,
};
pub use integrate::{Event, EventKind, IntegrationConfig, SimulationResult};
pub use scenarios::{Scenario, ScenarioError};

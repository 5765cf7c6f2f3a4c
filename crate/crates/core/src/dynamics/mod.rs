//! Vector fields of the leader-follower system.
//!
//! The leader is kinematic: its velocity is the control input, and with the
//! oscillatory-plus-drift control used throughout this crate its position has
//! a closed form (a circle of radius `R` riding on the slowed target curve).
//! Followers are damped double integrators pushed by the repulsive force
//! `A (p_f - p_l) / |p_f - p_l|^(2 alpha)`, optionally coupled by a consensus
//! protocol over an [`InteractionGraph`].

mod graph;
mod trajectory;

pub use graph::InteractionGraph;
pub use trajectory::{Knot, Trajectory, Waypoints};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Relative separation (in units of `R`) below which the repulsive force is
/// considered singular.
pub const SINGULAR_SEPARATION_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("follower-leader separation {distance:e} is below the singular threshold {threshold:e}")]
    SingularSeparation { distance: f64, threshold: f64 },
    #[error("trajectory parameter {theta} outside [0, 1]")]
    OutOfDomain { theta: f64 },
    #[error("time {t} outside the mission interval [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("invalid interaction graph: {0}")]
    InvalidGraph(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Physical and control constants of one run.
///
/// The drift rate `delta` is always `1 / horizon` and is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Repulsion amplitude `A`.
    #[serde(rename = "A")]
    pub amplitude: f64,
    /// Damping coefficient `k`.
    #[serde(rename = "k")]
    pub damping: f64,
    /// Potential exponent: the force falls off as `r^(1 - 2 alpha)`.
    pub alpha: f64,
    /// Angular frequency of the leader's orbit.
    pub omega: f64,
    /// Mission duration `T`.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Confinement radius `R`, also the radius of the leader's orbit.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Number of followers `N`.
    #[serde(rename = "N")]
    pub followers: usize,
    /// Initial phase of the leader on its orbit.
    #[serde(rename = "phi", default)]
    pub phase: f64,
}

impl SystemParams {
    pub fn delta(&self) -> f64 {
        1.0 / self.horizon
    }

    /// Returns every violated invariant, or `Ok` if there are none.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                bad.push(format!("{name} must be finite and > 0 (got {v})"));
            }
        };
        positive("A", self.amplitude);
        positive("k", self.damping);
        positive("alpha", self.alpha);
        positive("omega", self.omega);
        positive("T", self.horizon);
        positive("R", self.radius);
        if self.followers == 0 {
            bad.push("N must be at least 1".to_string());
        }
        if !self.phase.is_finite() {
            bad.push(format!("phi must be finite (got {})", self.phase));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(DynamicsError::InvalidParams(bad))
        }
    }

    /// Maps mission time onto the trajectory parameter `t / T`.
    ///
    /// Times within a relative `1e-9` of the interval ends are clamped so that
    /// RK stages landing on `T` up to rounding stay in the domain.
    pub fn theta(&self, t: f64) -> Result<f64> {
        let slack = 1e-9 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(DynamicsError::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok((t / self.horizon).clamp(0.0, 1.0))
    }

    pub fn singular_threshold(&self) -> f64 {
        SINGULAR_SEPARATION_RATIO * self.radius
    }
}

/// Position and velocity of one follower.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FollowerState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl FollowerState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        Self { x, vx, y, vy }
    }

    pub fn at_rest(p: Vec2) -> Self {
        Self::new(p.x, 0.0, p.y, 0.0)
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.vx, self.y, self.vy]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Leader position and follower states at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub t: f64,
    pub leader: Vec2,
    pub followers: Vec<FollowerState>,
}

impl SwarmState {
    /// Builds the state at time `t` with the leader placed by [`leader_state`].
    pub fn with_leader(
        t: f64,
        followers: Vec<FollowerState>,
        params: &SystemParams,
        traj: &Trajectory,
    ) -> Result<Self> {
        let (leader, _) = leader_state(t, params, traj)?;
        Ok(Self { t, leader, followers })
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.followers.len() != params.followers {
            return Err(DynamicsError::InvalidState(format!(
                "{} followers but N = {}",
                self.followers.len(),
                params.followers
            )));
        }
        let finite = self.t.is_finite()
            && self.leader.iter().all(|v| v.is_finite())
            && self.followers.iter().all(FollowerState::is_finite);
        if !finite {
            return Err(DynamicsError::InvalidState("non-finite component".into()));
        }
        Ok(())
    }
}

/// Time derivative of a [`SwarmState`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmRate {
    pub leader: Vec2,
    pub followers: Vec<FollowerState>,
}

/// Acceleration of a follower at `p_f` with velocity `v_f` due to a leader at `p_l`.
pub fn follower_accel(p_f: Vec2, v_f: Vec2, p_l: Vec2, params: &SystemParams) -> Result<Vec2> {
    let delta = p_f - p_l;
    let r2 = delta.norm_squared();
    let threshold = params.singular_threshold();
    if r2 < threshold * threshold {
        return Err(DynamicsError::SingularSeparation { distance: r2.sqrt(), threshold });
    }
    // [(dx)^2 + (dy)^2]^alpha, i.e. r^(2 alpha)
    let denom = r2.powf(params.alpha);
    Ok(delta * (params.amplitude / denom) - v_f * params.damping)
}

/// Leader velocity input: a circle of radius `R` at rate `omega` plus the
/// drift `delta * gamma'(delta t)` that carries the orbit center along the target.
pub fn leader_control(t: f64, params: &SystemParams, traj: &Trajectory) -> Result<Vec2> {
    let theta = params.theta(t)?;
    let (_, dgamma) = traj.eval(theta)?;
    let (s, c) = (params.omega * t + params.phase).sin_cos();
    let orbit = Vec2::new(-s, c) * (params.radius * params.omega);
    Ok(orbit + dgamma * params.delta())
}

/// Closed-form leader position and velocity at time `t`.
pub fn leader_state(t: f64, params: &SystemParams, traj: &Trajectory) -> Result<(Vec2, Vec2)> {
    let theta = params.theta(t)?;
    let (gamma, dgamma) = traj.eval(theta)?;
    let (s, c) = (params.omega * t + params.phase).sin_cos();
    let position = gamma + Vec2::new(c, s) * params.radius;
    let velocity = Vec2::new(-s, c) * (params.radius * params.omega) + dgamma * params.delta();
    Ok((position, velocity))
}

/// Consensus coupling felt by follower `i`: `-sum_j (p_i - p_j) - sum_j (v_i - v_j)`.
pub fn consensus_accel(i: usize, followers: &[FollowerState], graph: &InteractionGraph) -> Vec2 {
    let me = &followers[i];
    graph.neighbors(i).iter().fold(Vec2::zeros(), |acc, &j| {
        let other = &followers[j];
        acc - (me.position() - other.position()) - (me.velocity() - other.velocity())
    })
}

/// Writes follower rates `(v, a)` for every follower into `out`.
///
/// `deadband`, when set, zeroes the position rate of any follower moving
/// slower than the given speed (a crude stand-in for motor stiction).
pub(crate) fn follower_rates_into(
    leader: Vec2,
    followers: &[FollowerState],
    params: &SystemParams,
    graph: Option<&InteractionGraph>,
    deadband: Option<f64>,
    out: &mut [FollowerState],
) -> std::result::Result<(), (usize, DynamicsError)> {
    for (i, f) in followers.iter().enumerate() {
        let mut acc = follower_accel(f.position(), f.velocity(), leader, params).map_err(|e| (i, e))?;
        if let Some(g) = graph {
            acc += consensus_accel(i, followers, g);
        }
        let mut vel = f.velocity();
        if let Some(min_speed) = deadband {
            if vel.norm() < min_speed {
                vel = Vec2::zeros();
            }
        }
        out[i] = FollowerState::new(vel.x, acc.x, vel.y, acc.y);
    }
    Ok(())
}

/// Time derivative of the whole swarm.
///
/// The leader position is taken from [`leader_state`], not from `state.leader`.
pub fn system_rhs(
    t: f64,
    state: &SwarmState,
    params: &SystemParams,
    traj: &Trajectory,
    graph: Option<&InteractionGraph>,
) -> Result<SwarmRate> {
    let (leader, leader_vel) = leader_state(t, params, traj)?;
    let mut followers = vec![FollowerState::default(); state.followers.len()];
    follower_rates_into(leader, &state.followers, params, graph, None, &mut followers)
        .map_err(|(_, e)| e)?;
    Ok(SwarmRate { leader: leader_vel, followers })
}

/// Repulsion amplitude that makes the force magnitude 1 at separation `r_l`.
pub fn amplitude_for_radius(r_l: f64, alpha: f64) -> f64 {
    r_l.powf(2.0 * alpha - 1.0)
}

pub fn eval_trajectory(traj: &Trajectory, theta: f64) -> Result<(Vec2, Vec2)> {
    traj.eval(theta)
}

pub(crate) const TWO_PI: f64 = 2.0 * PI;

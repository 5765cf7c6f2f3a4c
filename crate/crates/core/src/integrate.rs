//! Fixed-step RK4 integration of the follower subsystem.
//!
//! Only the followers are integrated; the leader is placed by the closed form
//! in [`dynamics::leader_state`]. The step is tied to the oscillation period so
//! that every run of a given configuration takes exactly the same steps, which
//! makes results bit-reproducible.

use crate::dynamics::{
    self, follower_rates_into, DynamicsError, FollowerState, InteractionGraph, SwarmState, SystemParams,
    Trajectory, TWO_PI,
};
use serde::{Deserialize, Serialize};

/// Tolerance on the leader's distance check; the closed-form leader sits on
/// the circle of radius `R` up to rounding.
pub const LEADER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    /// RK4 steps per leader orbit; at least 8.
    pub substeps_per_oscillation: usize,
    /// Upper bound on stored samples (the stride is raised to respect it).
    pub max_samples: usize,
    /// Store every `sample_stride`-th step.
    pub sample_stride: usize,
    /// Optional speed deadband on follower motion; off by default.
    pub deadband: Option<f64>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self { substeps_per_oscillation: 32, max_samples: 20_000, sample_stride: 1, deadband: None }
    }
}

impl IntegrationConfig {
    /// Nominal step `min(2 pi / (omega * substeps), T / 10^4)`.
    pub fn nominal_step(&self, params: &SystemParams) -> f64 {
        (TWO_PI / (params.omega * self.substeps_per_oscillation as f64)).min(params.horizon / 1e4)
    }

    /// Number of steps and the actual step, chosen so that `steps * h = T`.
    pub fn step_plan(&self, params: &SystemParams) -> (usize, f64) {
        let n = (params.horizon / self.nominal_step(params)).ceil().max(1.0) as usize;
        (n, params.horizon / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    ConfinementBreach,
    LeaderTooClose,
    Singularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Follower index; `None` for leader events.
    pub agent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub params: SystemParams,
    pub samples: Vec<SwarmState>,
    pub events: Vec<Event>,
    pub terminated_early: bool,
    /// The RK4 step actually used.
    pub step: f64,
}

impl SimulationResult {
    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }
}

/// Checks both confinement inequalities for one state.
///
/// Followers breach when `|gamma(t/T) - p_i| >= R`; the leader is too close
/// when `|gamma(t/T) - p_l| < R - LEADER_TOLERANCE`.
pub fn monitor(state: &SwarmState, params: &SystemParams, traj: &Trajectory) -> Result<Vec<Event>, DynamicsError> {
    let (target, _) = traj.eval(params.theta(state.t)?)?;
    let mut events = Vec::new();
    for (i, f) in state.followers.iter().enumerate() {
        if (target - f.position()).norm() >= params.radius {
            events.push(Event { time: state.t, kind: EventKind::ConfinementBreach, agent: Some(i) });
        }
    }
    if (target - state.leader).norm() < params.radius - LEADER_TOLERANCE {
        events.push(Event { time: state.t, kind: EventKind::LeaderTooClose, agent: None });
    }
    Ok(events)
}

fn check_inputs(params: &SystemParams, initial: &SwarmState, graph: Option<&InteractionGraph>) -> Result<(), DynamicsError> {
    // A = 0 is admitted here: the pure-damping subsystem is a useful reference.
    let mut relaxed = *params;
    if relaxed.amplitude == 0.0 {
        relaxed.amplitude = 1.0;
    }
    relaxed.validate()?;
    if initial.t != 0.0 {
        return Err(DynamicsError::InvalidState(format!("initial time must be 0, got {}", initial.t)));
    }
    initial.validate(params)?;
    if let Some(g) = graph {
        if g.node_count() != params.followers {
            return Err(DynamicsError::InvalidGraph(format!(
                "graph has {} nodes but N = {}",
                g.node_count(),
                params.followers
            )));
        }
    }
    Ok(())
}

fn offset(base: &[FollowerState], rate: &[FollowerState], h: f64, out: &mut [FollowerState]) {
    for ((o, b), r) in out.iter_mut().zip(base).zip(rate) {
        *o = FollowerState::new(b.x + h * r.x, b.vx + h * r.vx, b.y + h * r.y, b.vy + h * r.vy);
    }
}

/// Tracks which agents are currently in violation so that each entry into a
/// violated state is recorded once.
struct EventLog {
    follower_breached: Vec<bool>,
    leader_close: bool,
    events: Vec<Event>,
}

impl EventLog {
    fn new(n: usize) -> Self {
        Self { follower_breached: vec![false; n], leader_close: false, events: Vec::new() }
    }

    fn observe(&mut self, t: f64, current: Vec<Event>) {
        let mut breached = vec![false; self.follower_breached.len()];
        let mut leader_close = false;
        for e in current {
            match (e.kind, e.agent) {
                (EventKind::ConfinementBreach, Some(i)) => {
                    breached[i] = true;
                    if !self.follower_breached[i] {
                        self.events.push(e);
                    }
                }
                (EventKind::LeaderTooClose, _) => {
                    leader_close = true;
                    if !self.leader_close {
                        self.events.push(e);
                    }
                }
                _ => self.events.push(Event { time: t, ..e }),
            }
        }
        self.follower_breached = breached;
        self.leader_close = leader_close;
    }
}

/// Integrates the followers over `[0, T]` with classical RK4.
///
/// Breaches are recorded but do not stop the run; a singular separation or a
/// non-finite state records a [`EventKind::Singularity`] event and ends it.
pub fn integrate(
    params: &SystemParams,
    traj: &Trajectory,
    initial: &SwarmState,
    graph: Option<&InteractionGraph>,
    cfg: &IntegrationConfig,
) -> Result<SimulationResult, DynamicsError> {
    check_inputs(params, initial, graph)?;
    if cfg.substeps_per_oscillation < 8 {
        return Err(DynamicsError::InvalidParams(vec![format!(
            "substeps_per_oscillation must be >= 8 (got {})",
            cfg.substeps_per_oscillation
        )]));
    }
    let (n_steps, h) = cfg.step_plan(params);
    let stride = cfg
        .sample_stride
        .max(1)
        .max(n_steps.div_ceil(cfg.max_samples.max(3) - 2));

    let n = params.followers;
    let mut y = initial.followers.clone();
    let mut k1 = vec![FollowerState::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut log = EventLog::new(n);
    let first = SwarmState::with_leader(0.0, y.clone(), params, traj)?;
    log.observe(0.0, monitor(&first, params, traj)?);
    let mut samples = vec![first];
    let mut terminated_early = false;
    let mut t_accepted = 0.0;

    let leader_at = |t: f64| dynamics::leader_state(t, params, traj).map(|(p, _)| p);

    for i in 0..n_steps {
        let t = i as f64 * h;
        let t_next = if i + 1 == n_steps { params.horizon } else { (i + 1) as f64 * h };
        let t_mid = t + 0.5 * h;

        let stage = (|| -> Result<(), (usize, DynamicsError)> {
            let no_agent = |e| (usize::MAX, e);
            follower_rates_into(leader_at(t).map_err(no_agent)?, &y, params, graph, cfg.deadband, &mut k1)?;
            offset(&y, &k1, 0.5 * h, &mut tmp);
            let mid = leader_at(t_mid).map_err(no_agent)?;
            follower_rates_into(mid, &tmp, params, graph, cfg.deadband, &mut k2)?;
            offset(&y, &k2, 0.5 * h, &mut tmp);
            follower_rates_into(mid, &tmp, params, graph, cfg.deadband, &mut k3)?;
            offset(&y, &k3, h, &mut tmp);
            follower_rates_into(leader_at(t_next).map_err(no_agent)?, &tmp, params, graph, cfg.deadband, &mut k4)?;
            Ok(())
        })();

        if let Err((agent, err)) = stage {
            if !matches!(err, DynamicsError::SingularSeparation { .. }) {
                return Err(err);
            }
            log.events.push(Event { time: t, kind: EventKind::Singularity, agent: Some(agent) });
            terminated_early = true;
            break;
        }

        for j in 0..n {
            let (a, b, c, d) = (k1[j], k2[j], k3[j], k4[j]);
            let w = h / 6.0;
            tmp[j] = FollowerState::new(
                y[j].x + w * (a.x + 2.0 * b.x + 2.0 * c.x + d.x),
                y[j].vx + w * (a.vx + 2.0 * b.vx + 2.0 * c.vx + d.vx),
                y[j].y + w * (a.y + 2.0 * b.y + 2.0 * c.y + d.y),
                y[j].vy + w * (a.vy + 2.0 * b.vy + 2.0 * c.vy + d.vy),
            );
        }
        if let Some(bad) = tmp.iter().position(|f| !f.is_finite()) {
            log.events.push(Event { time: t_next, kind: EventKind::Singularity, agent: Some(bad) });
            terminated_early = true;
            break;
        }
        std::mem::swap(&mut y, &mut tmp);
        t_accepted = t_next;

        let state = SwarmState::with_leader(t_next, y.clone(), params, traj)?;
        log.observe(t_next, monitor(&state, params, traj)?);
        if (i + 1) % stride == 0 || i + 1 == n_steps {
            samples.push(state);
        }
    }

    // keep the last accepted state when a run stops between strides
    if terminated_early && samples.last().map(|s| s.followers != y).unwrap_or(true) {
        samples.push(SwarmState::with_leader(t_accepted, y.clone(), params, traj)?);
    }

    Ok(SimulationResult { params: *params, samples, events: log.events, terminated_early, step: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Vec2;
    use std::f64::consts::PI;

    fn damping_params(k: f64, horizon: f64, omega: f64) -> SystemParams {
        SystemParams {
            amplitude: 0.0,
            damping: k,
            alpha: 2.0,
            omega,
            horizon,
            radius: 1.0,
            followers: 1,
            phase: 0.0,
        }
    }

    fn run_damping(p: &SystemParams, cfg: &IntegrationConfig, v0: f64) -> SimulationResult {
        let traj = Trajectory::stationary();
        let init = SwarmState::with_leader(0.0, vec![FollowerState::new(0.0, v0, 0.0, 0.0)], p, &traj).unwrap();
        integrate(p, &traj, &init, None, cfg).unwrap()
    }

    #[test]
    fn pure_damping_matches_exponential() {
        let p = damping_params(1.0, 1.0, 10.0);
        let r = run_damping(&p, &IntegrationConfig::default(), 1.0);
        let last = r.samples.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert!((last.followers[0].vx - (-1.0f64).exp()).abs() < 1e-8);
        assert!((last.followers[0].x - (1.0 - (-1.0f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn speed_decays_monotonically_without_forcing() {
        let p = damping_params(0.3, 10.0, 5.0);
        let r = run_damping(&p, &IntegrationConfig::default(), 0.4);
        let speeds: Vec<f64> = r.samples.iter().map(|s| s.followers[0].velocity().norm()).collect();
        assert!(speeds.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn step_plan_lands_on_horizon() {
        let p = damping_params(1.0, 40.0 * PI, 10.0);
        let cfg = IntegrationConfig::default();
        let (n, h) = cfg.step_plan(&p);
        assert!(h <= cfg.nominal_step(&p));
        assert!((n as f64 * h - p.horizon).abs() < 1e-9);
    }

    #[test]
    fn sample_cap_respected() {
        let p = damping_params(1.0, 50.0, 10.0);
        let cfg = IntegrationConfig { max_samples: 101, ..Default::default() };
        let r = run_damping(&p, &cfg, 0.2);
        assert!(r.samples.len() <= 101);
        assert_eq!(r.samples.first().unwrap().t, 0.0);
        assert_eq!(r.samples.last().unwrap().t, 50.0);
        assert!(r.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = damping_params(1.0, 1.0, 10.0);
        let traj = Trajectory::stationary();
        let init = SwarmState { t: 0.5, leader: Vec2::new(1.0, 0.0), followers: vec![FollowerState::default()] };
        assert!(integrate(&p, &traj, &init, None, &IntegrationConfig::default()).is_err());
        let init = SwarmState { t: 0.0, leader: Vec2::new(1.0, 0.0), followers: vec![] };
        assert!(integrate(&p, &traj, &init, None, &IntegrationConfig::default()).is_err());
        let init = SwarmState { t: 0.0, leader: Vec2::new(1.0, 0.0), followers: vec![FollowerState::default()] };
        let cfg = IntegrationConfig { substeps_per_oscillation: 4, ..Default::default() };
        assert!(integrate(&p, &traj, &init, None, &cfg).is_err());
        let g = InteractionGraph::edgeless(2);
        assert!(integrate(&p, &traj, &init, Some(&g), &IntegrationConfig::default()).is_err());
    }

    #[test]
    fn monitor_examples() {
        let mut p = damping_params(1.0, 1.0, 10.0);
        p.amplitude = 1.0;
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let on_target = SwarmState::with_leader(0.0, vec![FollowerState::at_rest(Vec2::new(2.0, 0.0))], &p, &traj).unwrap();
        assert!(monitor(&on_target, &p, &traj).unwrap().is_empty());
        let at_r = SwarmState::with_leader(0.0, vec![FollowerState::at_rest(Vec2::new(2.0, 1.0))], &p, &traj).unwrap();
        let ev = monitor(&at_r, &p, &traj).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, EventKind::ConfinementBreach);
        assert_eq!(ev[0].agent, Some(0));
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let s = SwarmState::with_leader(t, vec![FollowerState::at_rest(Vec2::new(2.0, 0.0))], &p, &traj).unwrap();
            assert!(monitor(&s, &p, &traj).unwrap().iter().all(|e| e.kind != EventKind::LeaderTooClose));
        }
    }

    #[test]
    fn singular_approach_terminates() {
        // follower parked on the leader's starting point
        let p = SystemParams {
            amplitude: 1.0,
            damping: 0.05,
            alpha: 10.0,
            omega: 10.0,
            horizon: 1.0,
            radius: 1.0,
            followers: 1,
            phase: 0.0,
        };
        let traj = Trajectory::stationary();
        let init = SwarmState::with_leader(0.0, vec![FollowerState::at_rest(Vec2::new(1.0, 0.0))], &p, &traj).unwrap();
        let r = integrate(&p, &traj, &init, None, &IntegrationConfig::default()).unwrap();
        assert!(r.terminated_early);
        assert_eq!(r.events.last().unwrap().kind, EventKind::Singularity);
        assert!(r.samples.iter().all(|s| s.followers.iter().all(FollowerState::is_finite)));
    }
}

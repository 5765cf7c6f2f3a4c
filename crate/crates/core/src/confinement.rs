//! Confinement verification, tracking-error metrics and parameter sweeps.

use crate::dynamics::{DynamicsError, FollowerState, SystemParams, Trajectory};
use crate::integrate::{EventKind, IntegrationConfig, SimulationResult, LEADER_TOLERANCE};
use crate::scenarios::Scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowerMetrics {
    pub max_dist: f64,
    /// Time-weighted (trapezoid) mean over the stored samples.
    pub mean_dist: f64,
    pub final_dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breach {
    pub time: f64,
    pub follower: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub confined: bool,
    pub first_breach: Option<Breach>,
    pub leader_min_distance: f64,
    pub per_follower: Vec<FollowerMetrics>,
    pub warnings: Vec<String>,
}

impl ConfinementReport {
    pub fn max_tracking_distance(&self) -> f64 {
        self.per_follower.iter().map(|m| m.max_dist).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("run terminated before the mission horizon")]
    IncompleteRun { report: Box<ConfinementReport> },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl VerifyError {
    /// The report computed from the partial run, if any.
    pub fn report(&self) -> Option<&ConfinementReport> {
        match self {
            VerifyError::IncompleteRun { report } => Some(report),
            VerifyError::Dynamics(_) => None,
        }
    }
}

/// Distances from each follower to the target point `gamma(t/T)` at every stored sample.
fn follower_distances(
    result: &SimulationResult,
    traj: &Trajectory,
) -> Result<Vec<Vec<f64>>, DynamicsError> {
    let params = &result.params;
    let n = result.samples.first().map_or(0, |s| s.followers.len());
    let mut dists = vec![Vec::with_capacity(result.samples.len()); n];
    for s in &result.samples {
        let (target, _) = traj.eval(params.theta(s.t)?)?;
        for (i, f) in s.followers.iter().enumerate() {
            dists[i].push((target - f.position()).norm());
        }
    }
    Ok(dists)
}

/// Per-follower `{max, mean, final}` distance to `gamma(t/T)`.
pub fn tracking_error(result: &SimulationResult, traj: &Trajectory) -> Result<Vec<FollowerMetrics>, DynamicsError> {
    let times: Vec<f64> = result.samples.iter().map(|s| s.t).collect();
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    Ok(follower_distances(result, traj)?
        .into_iter()
        .map(|d| {
            let max_dist = d.iter().copied().fold(0.0, f64::max);
            let final_dist = d.last().copied().unwrap_or(0.0);
            let mean_dist = if span > 0.0 {
                let area: f64 = d
                    .windows(2)
                    .zip(times.windows(2))
                    .map(|(dd, tt)| 0.5 * (dd[0] + dd[1]) * (tt[1] - tt[0]))
                    .sum();
                (area / span).min(max_dist)
            } else {
                d.first().copied().unwrap_or(0.0)
            };
            FollowerMetrics { max_dist, mean_dist, final_dist }
        })
        .collect())
}

/// Checks both confinement conditions over a run.
///
/// Followers must stay strictly inside distance `R` of `gamma(t/T)` and the
/// leader at least `R` away from it, at every stored sample and at every step
/// (through the integrator's events).
pub fn verify(
    result: &SimulationResult,
    traj: &Trajectory,
    params: &SystemParams,
) -> Result<ConfinementReport, VerifyError> {
    let per_follower = tracking_error(result, traj)?;
    let mut leader_min_distance = f64::INFINITY;
    let mut first_breach: Option<Breach> = None;
    for s in &result.samples {
        let (target, _) = traj.eval(params.theta(s.t)?)?;
        leader_min_distance = leader_min_distance.min((target - s.leader).norm());
        if first_breach.is_none() {
            if let Some(i) = s.followers.iter().position(|f| (target - f.position()).norm() >= params.radius) {
                first_breach = Some(Breach { time: s.t, follower: i });
            }
        }
    }
    if let Some(e) = result.first_event(EventKind::ConfinementBreach) {
        if first_breach.is_none_or(|b| e.time < b.time) {
            first_breach = Some(Breach { time: e.time, follower: e.agent.unwrap_or(0) });
        }
    }

    let mut warnings = Vec::new();
    if let Some(start) = result.samples.first() {
        let (g0, _) = traj.eval(0.0)?;
        if g0.norm() > 0.0 && !start.followers.is_empty() {
            let near_origin = start
                .followers
                .iter()
                .filter(|f| f.position().norm() < (f.position() - g0).norm())
                .count();
            if near_origin * 2 > start.followers.len() {
                warnings.push(format!(
                    "target starts at ({:.4}, {:.4}) but most followers start nearer the origin; \
                     initial conditions are usually centered on gamma(0)",
                    g0.x, g0.y
                ));
            }
        }
    }
    if let Some(e) = result.first_event(EventKind::Singularity) {
        warnings.push(format!("singular leader-follower separation at t = {}", e.time));
    }

    let confined = !result.terminated_early
        && first_breach.is_none()
        && leader_min_distance >= params.radius - LEADER_TOLERANCE
        && result.first_event(EventKind::LeaderTooClose).is_none();
    let report = ConfinementReport { confined, first_breach, leader_min_distance, per_follower, warnings };
    if result.terminated_early {
        return Err(VerifyError::IncompleteRun { report: Box::new(report) });
    }
    Ok(report)
}

/// The report regardless of whether the run finished.
pub fn verify_lenient(
    result: &SimulationResult,
    traj: &Trajectory,
    params: &SystemParams,
) -> Result<ConfinementReport, DynamicsError> {
    match verify(result, traj, params) {
        Ok(r) => Ok(r),
        Err(VerifyError::IncompleteRun { report }) => Ok(*report),
        Err(VerifyError::Dynamics(e)) => Err(e),
    }
}

/// `n` points uniform in the 4-ball of the given radius over `(x, vx, y, vy)`.
///
/// Follower `i` draws from its own ChaCha stream `i` under `seed`, so adding
/// followers leaves the draws of existing ones untouched.
pub fn sample_initial_conditions(n: usize, radius: f64, seed: u64) -> Vec<FollowerState> {
    let radial = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let dir: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius * radial.sample(&mut rng).powf(0.25);
            let scale = if norm > 0.0 { r / norm } else { 0.0 };
            FollowerState::from_array(dir.map(|v| v * scale))
        })
        .collect()
}

/// One swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "param", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    Omega(Vec<f64>),
    #[serde(rename = "T")]
    Horizon(Vec<f64>),
    IcRadius(Vec<f64>),
    Seed(Vec<u64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Omega(_) => "omega",
            SweepAxis::Horizon(_) => "T",
            SweepAxis::IcRadius(_) => "ic_radius",
            SweepAxis::Seed(_) => "seed",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Omega(v) | SweepAxis::Horizon(v) | SweepAxis::IcRadius(v) => v.len(),
            SweepAxis::Seed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, i: usize) -> f64 {
        match self {
            SweepAxis::Omega(v) | SweepAxis::Horizon(v) | SweepAxis::IcRadius(v) => v[i],
            SweepAxis::Seed(v) => v[i] as f64,
        }
    }

    fn apply(&self, i: usize, s: &mut Scenario) {
        match self {
            SweepAxis::Omega(v) => s.params.omega = v[i],
            SweepAxis::Horizon(v) => s.params.horizon = v[i],
            SweepAxis::IcRadius(v) => s.ic_radius = v[i],
            SweepAxis::Seed(v) => s.seed = v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// Grid index along each axis.
    pub index: Vec<usize>,
    /// Grid value along each axis.
    pub coords: Vec<f64>,
    pub seed: u64,
    /// Short SHA-256 digest of the cell's parameters.
    pub digest: String,
    pub confined: bool,
    pub max_dist: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<SweepAxis>,
    pub runs_per_cell: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn confined_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().filter(|c| c.confined).count() as f64 / self.cells.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("sweep axis `{0}` has no values")]
    EmptyAxis(&'static str),
    #[error("runs_per_cell must be at least 1")]
    NoRuns,
}

fn params_digest(s: &Scenario) -> String {
    let json = serde_json::to_string(&(&s.params, s.ic_radius, s.seed)).expect("params serialize");
    let hash = Sha256::digest(json.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Runs and verifies one scenario, folding failures into the cell.
pub fn run_cell(scenario: &Scenario, cfg: &IntegrationConfig) -> (bool, f64, Option<String>) {
    let outcome = scenario.run(cfg).map(|res| verify(&res, &scenario.traj, &scenario.params));
    match outcome {
        Ok(Ok(report)) => (report.confined, report.max_tracking_distance(), None),
        Ok(Err(VerifyError::IncompleteRun { report })) => {
            (false, report.max_tracking_distance(), Some("incomplete run (singular separation)".into()))
        }
        Ok(Err(VerifyError::Dynamics(e))) | Err(e) => (false, f64::NAN, Some(e.to_string())),
    }
}

/// Integrates and verifies every grid cell.
///
/// Cells are laid out row-major over `axes` (last axis fastest), each
/// repeated `runs_per_cell` times with seeds `seed, seed + 1, ...`. Cells run
/// in parallel on the current rayon pool; the output order depends only on
/// the grid.
pub fn sweep(
    base: &Scenario,
    axes: &[SweepAxis],
    runs_per_cell: usize,
    cfg: &IntegrationConfig,
) -> Result<SweepResult, SweepError> {
    if let Some(a) = axes.iter().find(|a| a.is_empty()) {
        return Err(SweepError::EmptyAxis(a.name()));
    }
    if runs_per_cell == 0 {
        return Err(SweepError::NoRuns);
    }
    let dims: Vec<usize> = axes.iter().map(SweepAxis::len).collect();
    let grid_size: usize = dims.iter().product();
    let jobs: Vec<(Vec<usize>, usize)> = (0..grid_size)
        .flat_map(|flat| {
            let mut index = vec![0; dims.len()];
            let mut rem = flat;
            for d in (0..dims.len()).rev() {
                index[d] = rem % dims[d];
                rem /= dims[d];
            }
            (0..runs_per_cell).map(move |r| (index.clone(), r))
        })
        .collect();
    let cells = jobs
        .par_iter()
        .map(|(index, run)| {
            let mut s = base.clone();
            for (axis, &i) in axes.iter().zip(index) {
                axis.apply(i, &mut s);
            }
            s.seed = s.seed.wrapping_add(*run as u64);
            let (confined, max_dist, error) = run_cell(&s, cfg);
            SweepCell {
                index: index.clone(),
                coords: axes.iter().zip(index).map(|(a, &i)| a.value(i)).collect(),
                seed: s.seed,
                digest: params_digest(&s),
                confined,
                max_dist,
                error,
            }
        })
        .collect();
    Ok(SweepResult { axes: axes.to_vec(), runs_per_cell, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{SwarmState, Vec2};
    use crate::integrate::Event;
    use std::f64::consts::PI;

    fn params() -> SystemParams {
        SystemParams {
            amplitude: 1.0,
            damping: 0.05,
            alpha: 10.0,
            omega: 10.0,
            horizon: 10.0,
            radius: 1.0,
            followers: 1,
            phase: 0.0,
        }
    }

    fn synthetic(traj: &Trajectory, offset: Vec2, leader_on_target: bool) -> SimulationResult {
        let p = params();
        let samples = (0..=10)
            .map(|i| {
                let t = i as f64;
                let (g, _) = traj.eval(t / p.horizon).unwrap();
                let mut s = SwarmState::with_leader(t, vec![FollowerState::at_rest(g + offset)], &p, traj).unwrap();
                if leader_on_target {
                    s.leader = g;
                }
                s
            })
            .collect();
        SimulationResult { params: p, samples, events: Vec::<Event>::new(), terminated_early: false, step: 0.1 }
    }

    #[test]
    fn follower_on_target_has_zero_error() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let m = tracking_error(&synthetic(&traj, Vec2::zeros(), false), &traj).unwrap();
        assert_eq!(m[0], FollowerMetrics { max_dist: 0.0, mean_dist: 0.0, final_dist: 0.0 });
    }

    #[test]
    fn constant_offset() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let m = tracking_error(&synthetic(&traj, Vec2::new(0.0, 0.3), false), &traj).unwrap();
        assert!((m[0].max_dist - 0.3).abs() < 1e-12);
        assert!((m[0].mean_dist - 0.3).abs() < 1e-12);
        assert!((m[0].final_dist - 0.3).abs() < 1e-12);
    }

    #[test]
    fn pinned_follower_breaches_at_start() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let r = verify(&synthetic(&traj, Vec2::new(2.0, 0.0), false), &traj, &params()).unwrap();
        assert!(!r.confined);
        assert_eq!(r.first_breach, Some(Breach { time: 0.0, follower: 0 }));
    }

    #[test]
    fn leader_on_target_is_not_confined() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let r = verify(&synthetic(&traj, Vec2::zeros(), true), &traj, &params()).unwrap();
        assert!(!r.confined);
        assert_eq!(r.leader_min_distance, 0.0);
        assert!(r.first_breach.is_none());
    }

    #[test]
    fn confined_synthetic_run() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let res = synthetic(&traj, Vec2::new(0.1, 0.0), false);
        let r = verify(&res, &traj, &params()).unwrap();
        assert!(r.confined);
        assert!((r.leader_min_distance - 1.0).abs() < 1e-12);
        assert_eq!(verify(&res, &traj, &params()).unwrap(), r);
    }

    #[test]
    fn origin_warning_when_target_starts_elsewhere() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let mut res = synthetic(&traj, Vec2::zeros(), false);
        res.samples[0].followers[0] = FollowerState::default();
        let r = verify(&res, &traj, &params()).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let r = verify(&synthetic(&traj, Vec2::zeros(), false), &traj, &params()).unwrap();
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn incomplete_runs_still_report() {
        let traj = Trajectory::Circle { radius: 2.0, turns: 1.0 };
        let mut res = synthetic(&traj, Vec2::zeros(), false);
        res.terminated_early = true;
        let err = verify(&res, &traj, &params()).unwrap_err();
        assert!(!err.report().unwrap().confined);
    }

    #[test]
    fn samples_inside_ball_and_reproducible() {
        let a = sample_initial_conditions(50, 0.125, 7);
        assert!(a.iter().all(|f| f.as_array().iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.125));
        assert_eq!(a, sample_initial_conditions(50, 0.125, 7));
        assert_ne!(a, sample_initial_conditions(50, 0.125, 8));
        // extending the population keeps earlier followers
        assert_eq!(&sample_initial_conditions(60, 0.125, 7)[..50], &a[..]);
    }

    #[test]
    fn ball_mean_norm() {
        // uniform d-ball: E|x| = d / (d + 1) = 0.8 for d = 4
        let s = sample_initial_conditions(100_000, 1.0, 11);
        let mean = s
            .iter()
            .map(|f| f.as_array().iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
            / s.len() as f64;
        assert!((mean - 0.8).abs() < 0.01, "mean norm {mean}");
    }

    #[test]
    fn sweep_rejects_empty_axes() {
        let s = crate::scenarios::case1();
        let cfg = IntegrationConfig::default();
        assert_eq!(sweep(&s, &[SweepAxis::Omega(vec![])], 1, &cfg), Err(SweepError::EmptyAxis("omega")));
        assert_eq!(sweep(&s, &[], 0, &cfg), Err(SweepError::NoRuns));
    }

    #[test]
    fn sweep_layout() {
        let mut s = crate::scenarios::case1();
        s.params.horizon = 2.0 * PI;
        s.params.followers = 1;
        let cfg = IntegrationConfig::default();
        let axes = [SweepAxis::Omega(vec![10.0, 20.0]), SweepAxis::Seed(vec![3, 4, 5])];
        let r = sweep(&s, &axes, 2, &cfg).unwrap();
        assert_eq!(r.cells.len(), 12);
        assert_eq!(r.cells[0].index, vec![0, 0]);
        assert_eq!(r.cells[1].seed, 4);
        assert_eq!(r.cells[2].index, vec![0, 1]);
        assert_eq!(r.cells[11].coords, vec![20.0, 5.0]);
        assert_eq!(r.cells[11].seed, 6);
        // batching: the first run of each cell does not depend on runs_per_cell
        let r1 = sweep(&s, &axes, 1, &cfg).unwrap();
        for (i, c) in r1.cells.iter().enumerate() {
            assert_eq!(c, &r.cells[2 * i]);
        }
    }
}

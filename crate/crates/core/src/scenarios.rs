//! Built-in scenarios and the JSON scenario file.
//!
//! A scenario file is a flat JSON object:
//!
//! ```json
//! {
//!   "name": "case1", "A": 1.0, "k": 0.05, "alpha": 10.0, "omega": 10.0,
//!   "T": 125.66370614359172, "R": 1.0, "N": 3, "phi": 0.0, "seed": 0,
//!   "ic_radius": 0.125,
//!   "trajectory": { "type": "circle", "radius": 2.0, "turns": 1.0 },
//!   "graph": { "edges": [[0, 1], [1, 2]] },
//!   "min_speed": 2.0
//! }
//! ```
//!
//! `phi`, `seed`, `graph` and `min_speed` are optional. Unknown keys are rejected.

use crate::confinement::sample_initial_conditions;
use crate::dynamics::{
    amplitude_for_radius, DynamicsError, FollowerState, InteractionGraph, SwarmState, SystemParams, Trajectory,
};
use crate::integrate::{integrate, IntegrationConfig, SimulationResult};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const BUILTIN_NAMES: [&str; 3] = ["case1", "case2", "experiment_circle"];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: SystemParams,
    pub traj: Trajectory,
    /// Radius of the 4-ball around `(gamma(0), 0)` from which initial
    /// follower states are drawn; zero places every follower at `gamma(0)` at rest.
    pub ic_radius: f64,
    pub graph: Option<InteractionGraph>,
    pub seed: u64,
    /// Follower speed deadband, off when `None`.
    pub min_speed: Option<f64>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
}

impl Scenario {
    pub fn n_followers(&self) -> usize {
        self.params.followers
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut bad = Vec::new();
        if let Err(DynamicsError::InvalidParams(v)) = self.params.validate() {
            bad.extend(v);
        }
        if let Err(e) = self.traj.validate() {
            bad.push(e.to_string());
        }
        if !(self.ic_radius.is_finite() && self.ic_radius >= 0.0) {
            bad.push(format!("ic_radius must be finite and >= 0 (got {})", self.ic_radius));
        }
        if let Some(g) = &self.graph {
            if g.node_count() != self.params.followers {
                bad.push(format!("graph has {} nodes but N = {}", g.node_count(), self.params.followers));
            }
        }
        if let Some(m) = self.min_speed {
            if !(m.is_finite() && m >= 0.0) {
                bad.push(format!("min_speed must be finite and >= 0 (got {m})"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Validation(bad))
        }
    }

    /// Follower states at `t = 0`: `gamma(0)` at rest plus a draw from the
    /// `ic_radius` ball, seeded by `self.seed`.
    pub fn initial_state(&self) -> Result<SwarmState, DynamicsError> {
        let (g0, _) = self.traj.eval(0.0)?;
        let n = self.params.followers;
        let offsets = if self.ic_radius > 0.0 {
            sample_initial_conditions(n, self.ic_radius, self.seed)
        } else {
            vec![FollowerState::default(); n]
        };
        let followers = offsets
            .into_iter()
            .map(|o| FollowerState::new(g0.x + o.x, o.vx, g0.y + o.y, o.vy))
            .collect();
        SwarmState::with_leader(0.0, followers, &self.params, &self.traj)
    }

    /// Integrates from [`Scenario::initial_state`] with the scenario's graph.
    /// A scenario `min_speed` takes precedence over `cfg.deadband`.
    pub fn run(&self, cfg: &IntegrationConfig) -> Result<SimulationResult, DynamicsError> {
        let cfg = IntegrationConfig { deadband: self.min_speed.or(cfg.deadband), ..*cfg };
        integrate(&self.params, &self.traj, &self.initial_state()?, self.graph.as_ref(), &cfg)
    }
}

/// Two-loop-free circle of radius 2, one turn over `T = 40 pi`.
pub fn case1() -> Scenario {
    Scenario {
        name: "case1".into(),
        params: SystemParams {
            amplitude: 1.0,
            damping: 0.05,
            alpha: 10.0,
            omega: 10.0,
            horizon: 40.0 * PI,
            radius: 1.0,
            followers: 3,
            phase: 0.0,
        },
        traj: Trajectory::Circle { radius: 2.0, turns: 1.0 },
        ic_radius: 0.125,
        graph: None,
        seed: 0,
        min_speed: None,
    }
}

/// `gamma(theta) = (10 cos 4 pi theta, 2 pi theta)` over `T = 80 pi`.
pub fn case2() -> Scenario {
    Scenario {
        name: "case2".into(),
        params: SystemParams {
            amplitude: 1.0,
            damping: 0.03,
            alpha: 5.0,
            omega: 20.0,
            horizon: 80.0 * PI,
            radius: 1.0,
            followers: 3,
            phase: 0.0,
        },
        traj: Trajectory::Lissajous { ax: 10.0, fx: 2.0, ay: 0.0, fy: 0.0, drift: [0.0, 2.0 * PI] },
        ic_radius: 0.5,
        graph: None,
        seed: 0,
        min_speed: None,
    }
}

/// Simulated-follower counterpart of the tabletop robot run.
///
/// Lengths are in centimetres: a 67 cm target circle traversed at 0.02 rad/s,
/// leader orbit radius 38 cm, and `A = 38^7` so that the repulsion has unit
/// magnitude at the orbit radius. The single follower starts at rest at the
/// orbit center.
pub fn experiment_circle() -> Scenario {
    let (orbit, alpha) = (38.0, 4.0);
    Scenario {
        name: "experiment_circle".into(),
        params: SystemParams {
            amplitude: amplitude_for_radius(orbit, alpha),
            damping: 1.0,
            alpha,
            omega: 2.0,
            horizon: 2.0 * PI / 0.02,
            radius: orbit,
            followers: 1,
            phase: 0.0,
        },
        traj: Trajectory::Circle { radius: 67.0, turns: 1.0 },
        ic_radius: 0.0,
        graph: None,
        seed: 0,
        min_speed: None,
    }
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "case1" => Ok(case1()),
        "case2" => Ok(case2()),
        "experiment_circle" | "experiment" => Ok(experiment_circle()),
        other => Err(ScenarioError::UnknownBuiltin(other.to_string())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(rename = "A")]
    amplitude: f64,
    k: f64,
    alpha: f64,
    omega: f64,
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "N")]
    followers: usize,
    #[serde(default)]
    phi: f64,
    #[serde(default)]
    seed: u64,
    ic_radius: f64,
    trajectory: Trajectory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<GraphFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_speed: Option<f64>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let p = &s.params;
        ScenarioFile {
            name: s.name.clone(),
            amplitude: p.amplitude,
            k: p.damping,
            alpha: p.alpha,
            omega: p.omega,
            horizon: p.horizon,
            radius: p.radius,
            followers: p.followers,
            phi: p.phase,
            seed: s.seed,
            ic_radius: s.ic_radius,
            trajectory: s.traj.clone(),
            graph: s.graph.as_ref().map(|g| GraphFile { edges: g.edges().iter().map(|&(i, j)| [i, j]).collect() }),
            min_speed: s.min_speed,
        }
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = ScenarioError;

    fn try_from(f: ScenarioFile) -> Result<Self, ScenarioError> {
        let params = SystemParams {
            amplitude: f.amplitude,
            damping: f.k,
            alpha: f.alpha,
            omega: f.omega,
            horizon: f.horizon,
            radius: f.radius,
            followers: f.followers,
            phase: f.phi,
        };
        let graph = match f.graph {
            None => None,
            Some(g) => Some(
                InteractionGraph::new(f.followers, g.edges.into_iter().map(|[i, j]| (i, j)))
                    .map_err(|e| ScenarioError::Validation(vec![e.to_string()]))?,
            ),
        };
        let s = Scenario {
            name: f.name,
            params,
            traj: f.trajectory,
            ic_radius: f.ic_radius,
            graph,
            seed: f.seed,
            min_speed: f.min_speed,
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Scenario::try_from(file)
}

pub fn to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from(s)).expect("scenario serializes")
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
    parse_scenario(&text)
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    let mut text = to_json(s);
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ScenarioError::Io { path: path.into(), source })
}

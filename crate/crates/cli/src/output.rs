//! File formats written by the command-line tool.

use herdsim_core::averaging::{is_confinement_stable, jacobian_origin, restoring_stiffness, spectrum_consensus, spectrum_single};
use herdsim_core::confinement::{Breach, ConfinementReport, FollowerMetrics, SweepAxis, SweepResult};
use herdsim_core::integrate::{Event, SimulationResult};
use herdsim_core::scenarios::{to_json, Scenario};
use herdsim_core::{Spectrum, Trajectory};
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

fn eigenvalues(s: &Spectrum) -> Vec<Eigenvalue> {
    s.eigenvalues.iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect()
}

#[derive(Debug, Serialize)]
pub struct Stability {
    pub stable: bool,
    pub margin: f64,
}

#[derive(Debug, Serialize)]
pub struct FollowerSummary {
    pub index: usize,
    #[serde(flatten)]
    pub metrics: FollowerMetrics,
}

/// Contents of `report.json`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub scenario: serde_json::Value,
    pub confined: bool,
    pub terminated_early: bool,
    pub first_breach: Option<Breach>,
    pub leader_min_distance: f64,
    pub max_tracking_distance: f64,
    pub followers: Vec<FollowerSummary>,
    pub events: Vec<Event>,
    pub warnings: Vec<String>,
    pub step: f64,
    pub samples: usize,
    pub stability: Stability,
}

impl RunReport {
    pub fn new(scenario: &Scenario, result: &SimulationResult, report: &ConfinementReport) -> Self {
        let verdict = is_confinement_stable(&scenario.params);
        RunReport {
            scenario: serde_json::from_str(&to_json(scenario)).expect("scenario JSON is valid"),
            confined: report.confined,
            terminated_early: result.terminated_early,
            first_breach: report.first_breach,
            leader_min_distance: report.leader_min_distance,
            max_tracking_distance: report.max_tracking_distance(),
            followers: report
                .per_follower
                .iter()
                .enumerate()
                .map(|(index, &metrics)| FollowerSummary { index, metrics })
                .collect(),
            events: result.events.clone(),
            warnings: report.warnings.clone(),
            step: result.step,
            samples: result.samples.len(),
            stability: Stability { stable: verdict.stable, margin: verdict.margin },
        }
    }
}

/// Output of `herdsim analyze`.
#[derive(Debug, Serialize)]
pub struct Analysis {
    pub scenario: String,
    pub stable: bool,
    pub margin: f64,
    /// Restoring stiffness `A (alpha - 1) / R^(2 alpha)` of the averaged system.
    pub beta: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus_eigenvalues: Option<Vec<Eigenvalue>>,
    /// Row-major Jacobian of the averaged field at the orbit center, state order `(x, vx, y, vy)`.
    pub jacobian: [[f64; 4]; 4],
}

impl Analysis {
    pub fn new(scenario: &Scenario, gamma_gain: f64) -> Self {
        let p = &scenario.params;
        let verdict = is_confinement_stable(p);
        let j = jacobian_origin(p);
        Analysis {
            scenario: scenario.name.clone(),
            stable: verdict.stable,
            margin: verdict.margin,
            beta: restoring_stiffness(p),
            eigenvalues: eigenvalues(&spectrum_single(p)),
            consensus_eigenvalues: scenario.graph.as_ref().map(|g| eigenvalues(&spectrum_consensus(p, g, gamma_gain))),
            jacobian: std::array::from_fn(|r| std::array::from_fn(|c| j[(r, c)])),
        }
    }
}

/// Writes one row per stored sample: `t,x_l,y_l` then
/// `x_i,y_i,vx_i,vy_i,dist_i` per follower, `dist_i` measured to the target.
pub fn write_trajectory_csv<W: Write>(out: W, result: &SimulationResult, traj: &Trajectory) -> csv::Result<()> {
    let n = result.params.followers;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "x_l".into(), "y_l".into()];
    for i in 0..n {
        header.extend(["x", "y", "vx", "vy", "dist"].map(|c| format!("{c}_{i}")));
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for s in &result.samples {
        let theta = result.params.theta(s.t).expect("sample times lie in [0, T]");
        let (g, _) = traj.eval(theta).expect("trajectory validated");
        row.clear();
        row.extend([s.t, s.leader.x, s.leader.y].map(|v| v.to_string()));
        for f in &s.followers {
            let dist = (f.position() - g).norm();
            row.extend([f.x, f.y, f.vx, f.vy, dist].map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sweep cell: axis values, run seed, verdict, worst distance, digest.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    // A seed axis sets the base seed; the per-run seed gets its own column.
    let mut header: Vec<String> = sweep
        .axes
        .iter()
        .map(|a| match a {
            SweepAxis::Seed(_) => "base_seed".to_string(),
            _ => a.name().to_string(),
        })
        .collect();
    header.extend(["seed", "confined", "max_dist", "digest"].map(String::from));
    w.write_record(&header)?;
    for cell in &sweep.cells {
        let mut row: Vec<String> = cell.coords.iter().map(f64::to_string).collect();
        row.extend([cell.seed.to_string(), cell.confined.to_string(), cell.max_dist.to_string(), cell.digest.clone()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

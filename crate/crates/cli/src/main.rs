//! `herdsim`: simulate, analyze and sweep leader-follower confinement scenarios.
//!
//! Exit codes: 0 when the run stayed confined (or the command succeeded),
//! 1 on a confinement breach, 2 on usage or configuration errors.

mod args;
mod output;
mod plot;

use args::{AnalyzeArgs, Cli, Command, ScenariosArgs, SimulateArgs, SweepArgs};
use clap::Parser;
use herdsim_core::confinement::{sweep, verify, VerifyError};
use herdsim_core::scenarios::{builtin, to_json, BUILTIN_NAMES};
use output::{write_sweep_csv, write_trajectory_csv, Analysis, RunReport};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

const EXIT_BREACH: u8 = 1;
const EXIT_CONFIG: u8 = 2;

struct Failure {
    code: u8,
    message: String,
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: e.to_string() }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) }
}

/// Prints to stdout, ignoring a closed pipe (e.g. `herdsim analyze case1 | head`).
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Scenarios(a) => scenarios(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("herdsim: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn simulate(a: &SimulateArgs) -> Result<u8, Failure> {
    let scenario = a.scenario.resolve().map_err(config_error)?;
    let result = scenario.run(&a.steps.config()).map_err(config_error)?;
    let report = match verify(&result, &scenario.traj, &scenario.params) {
        Ok(r) => r,
        Err(VerifyError::IncompleteRun { report }) => *report,
        Err(e @ VerifyError::Dynamics(_)) => return Err(config_error(e)),
    };

    fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    let csv_path = a.out.join("trajectory.csv");
    let file = File::create(&csv_path).map_err(|e| io_error(&csv_path, e))?;
    write_trajectory_csv(BufWriter::new(file), &result, &scenario.traj).map_err(|e| io_error(&csv_path, e))?;

    let json_path = a.out.join("report.json");
    let body = serde_json::to_string_pretty(&RunReport::new(&scenario, &result, &report)).expect("report serializes");
    fs::write(&json_path, body + "\n").map_err(|e| io_error(&json_path, e))?;

    if a.plot {
        let svg_path = a.out.join("paths.svg");
        fs::write(&svg_path, plot::render_svg(&result, &scenario.traj)).map_err(|e| io_error(&svg_path, e))?;
    }

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit(&format!(
        "{}: {} (max tracking distance {:.6}, leader min distance {:.6}) -> {}",
        scenario.name,
        if report.confined { "confined" } else { "NOT confined" },
        report.max_tracking_distance(),
        report.leader_min_distance,
        a.out.display()
    ));
    Ok(if report.confined { 0 } else { EXIT_BREACH })
}

fn analyze(a: &AnalyzeArgs) -> Result<u8, Failure> {
    let scenario = a.scenario.resolve().map_err(config_error)?;
    if !(a.gamma_gain > 0.0 && a.gamma_gain.is_finite()) {
        return Err(config_error(format!("--gamma-gain must be positive (got {})", a.gamma_gain)));
    }
    let analysis = Analysis::new(&scenario, a.gamma_gain);
    emit(&serde_json::to_string_pretty(&analysis).expect("analysis serializes"));
    Ok(0)
}

fn run_sweep(a: &SweepArgs) -> Result<u8, Failure> {
    let base = a.scenario.resolve().map_err(config_error)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(config_error("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(config_error)?;
    let cfg = a.steps.config();
    let result = pool.install(|| sweep(&base, &a.axes, a.runs, &cfg)).map_err(config_error)?;

    let path = a.out_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    write_sweep_csv(BufWriter::new(file), &result).map_err(|e| io_error(&path, e))?;
    for cell in result.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!("warning: cell {:?} seed {}: {}", cell.coords, cell.seed, cell.error.as_deref().unwrap_or_default());
    }
    emit(&format!(
        "{} cells, {:.1}% confined -> {}",
        result.cells.len(),
        100.0 * result.confined_fraction(),
        path.display()
    ));
    Ok(0)
}

fn scenarios(a: &ScenariosArgs) -> Result<u8, Failure> {
    if let Some(name) = &a.show {
        emit(&to_json(&builtin(name).map_err(config_error)?));
        return Ok(0);
    }
    for name in BUILTIN_NAMES {
        let s = builtin(name).expect("built-in exists");
        let p = &s.params;
        emit(&format!(
            "{name:<18} A={} k={} alpha={} omega={} T={:.4} R={} N={} ic_radius={}",
            p.amplitude, p.damping, p.alpha, p.omega, p.horizon, p.radius, p.followers, s.ic_radius
        ));
    }
    Ok(0)
}

use clap::{Args, Parser, Subcommand};
use herdsim_core::confinement::SweepAxis;
use herdsim_core::integrate::IntegrationConfig;
use herdsim_core::scenarios::{builtin, load_scenario, Scenario, ScenarioError, BUILTIN_NAMES};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "herdsim", version, about = "Leader-follower confinement by an orbiting leader")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write trajectory CSV, JSON report and optional SVG.
    Simulate(SimulateArgs),
    /// Print the stability analysis of the averaged system as JSON.
    Analyze(AnalyzeArgs),
    /// Run a scenario over a parameter grid and write one CSV row per cell.
    Sweep(SweepArgs),
    /// List the built-in scenarios, or print one as a scenario file.
    Scenarios(ScenariosArgs),
}

/// Scenario selection plus parameter overrides shared by all commands.
#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario name or path to a scenario JSON file.
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub ic_radius: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Damping coefficient.
    #[arg(long = "k")]
    pub damping: Option<f64>,
    /// Mission duration `T`.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Leader phase at t = 0.
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    /// RK4 steps per leader orbit.
    #[arg(long, default_value_t = 32)]
    pub substeps: usize,
    /// Upper bound on stored samples.
    #[arg(long, default_value_t = 20_000)]
    pub max_samples: usize,
}

impl StepArgs {
    pub fn config(&self) -> IntegrationConfig {
        IntegrationConfig {
            substeps_per_oscillation: self.substeps,
            max_samples: self.max_samples,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub steps: StepArgs,
    /// Output directory.
    #[arg(long, env = "HERDSIM_OUT", default_value = "herdsim-out")]
    pub out: PathBuf,
    /// Also write an SVG of the leader, follower and target paths.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Velocity consensus gain used for the coupled spectrum.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_gain: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub steps: StepArgs,
    /// Grid axis such as `omega=5,10,20,40`; repeat for more axes.
    /// Axes: omega, T, ic_radius, seed.
    #[arg(long = "axis", value_parser = parse_axis)]
    pub axes: Vec<SweepAxis>,
    /// Runs per cell, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV file; defaults to `sweep.csv` in `$HERDSIM_OUT` (or `herdsim-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn out_path(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            PathBuf::from(std::env::var_os("HERDSIM_OUT").unwrap_or_else(|| "herdsim-out".into())).join("sweep.csv")
        })
    }
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    /// Print this built-in as a scenario file.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
    pub show: Option<String>,
}

fn parse_axis(spec: &str) -> Result<SweepAxis, String> {
    let (name, values) = spec.split_once('=').ok_or_else(|| format!("expected NAME=V1,V2,... (got `{spec}`)"))?;
    let items: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if items.is_empty() {
        return Err(format!("axis `{name}` has no values"));
    }
    let floats = || -> Result<Vec<f64>, String> {
        items
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| format!("bad value `{v}` on axis `{name}`: {e}")))
            .collect()
    };
    match name.trim() {
        "omega" => Ok(SweepAxis::Omega(floats()?)),
        "T" => Ok(SweepAxis::Horizon(floats()?)),
        "ic_radius" | "ic-radius" => Ok(SweepAxis::IcRadius(floats()?)),
        "seed" => items
            .iter()
            .map(|v| v.parse::<u64>().map_err(|e| format!("bad seed `{v}`: {e}")))
            .collect::<Result<_, _>>()
            .map(SweepAxis::Seed),
        other => Err(format!("unknown axis `{other}` (expected omega, T, ic_radius or seed)")),
    }
}

impl ScenarioArgs {
    /// Loads the scenario (a file path wins over a built-in of the same
    /// name), applies overrides and validates the result.
    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        let path = Path::new(&self.scenario);
        let mut s = if path.is_file() || BUILTIN_NAMES.iter().chain(&["experiment"]).all(|n| *n != self.scenario) {
            load_scenario(path)?
        } else {
            builtin(&self.scenario)?
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.omega {
            s.params.omega = v;
        }
        if let Some(v) = self.ic_radius {
            s.ic_radius = v;
        }
        if let Some(v) = self.alpha {
            s.params.alpha = v;
        }
        if let Some(v) = self.damping {
            s.params.damping = v;
        }
        if let Some(v) = self.horizon {
            s.params.horizon = v;
        }
        if let Some(v) = self.phi {
            s.params.phase = v;
        }
        s.validate()?;
        Ok(s)
    }
}

//! Command-line definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::scenario::Preset;

#[derive(Debug, Parser)]
#[command(
    name = "kspace",
    version,
    about = "Contamination dynamics of a growing knowledge space"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the mean-field contamination curve.
    Trajectory(TrajectoryArgs),
    /// Locate the stationary contamination from clean and saturated starts.
    FixedPoint(FixedPointArgs),
    /// Final contamination over an (R_prag, R_comp) grid.
    Sweep(SweepArgs),
    /// Monte Carlo ensemble envelope.
    Simulate(SimulateArgs),
    /// Check the mean-field curve against the Monte Carlo envelope.
    Compare(CompareArgs),
}

/// Scenario selection. Precedence: preset, then `--scenario` file, then
/// individual flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Scenario file with `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub p_err: Option<f64>,
    /// Fixed base count; sets both `b_min` and `b_max`.
    #[arg(long, conflicts_with_all = ["b_min", "b_max"])]
    pub b: Option<u32>,
    #[arg(long)]
    pub b_min: Option<u32>,
    #[arg(long)]
    pub b_max: Option<u32>,
    #[arg(long)]
    pub r_prag: Option<f64>,
    #[arg(long)]
    pub r_comp: Option<f64>,
    #[arg(long)]
    pub c0: Option<u64>,
    #[arg(long)]
    pub cp0: Option<u64>,
    #[arg(long)]
    pub c_end: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Data file; the JSON sidecar is written next to it. Defaults to stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Divide `c` and `c_p` by `c0` in the output.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PlotArgs {
    /// Gnuplot script (with its data file alongside), or an SVG when the
    /// path ends in `.svg`.
    #[arg(long, value_name = "FILE")]
    pub emit_plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
    /// Step in `c` for the concept-domain integrator.
    #[arg(long, default_value_t = 0.25)]
    pub dc: f64,
    /// Fall back to time-domain integration when cleanup stalls concept growth.
    #[arg(long)]
    pub time_domain: bool,
    #[arg(long, default_value_t = 0.25)]
    pub dt: f64,
    /// Time horizon of the fallback; defaults to `steps`.
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub scan_step: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FixedPointArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Report file. Defaults to stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum StartChoice {
    Clean,
    #[default]
    Contaminated,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// `start:stop:count`
    #[arg(long, default_value = "0:4:17", allow_hyphen_values = true)]
    pub r_prag_axis: String,
    /// `start:stop:count`
    #[arg(long, default_value = "0:4:17", allow_hyphen_values = true)]
    pub r_comp_axis: String,
    #[arg(long, value_enum, default_value_t = StartChoice::Contaminated)]
    pub k0: StartChoice,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
    /// Worker threads for the epochs; output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Band widening on both sides of `[k_min, k_max]`.
    #[arg(long, default_value_t = 0.02)]
    pub slack: f64,
    /// Containment fraction required to pass.
    #[arg(long, default_value_t = 0.95)]
    pub min_fraction: f64,
    /// Only checkpoints with `c_mean <= c_limit * c0` are compared.
    #[arg(long, default_value_t = 5.0)]
    pub c_limit: f64,
}

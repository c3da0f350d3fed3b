use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Broadening analysis and mean-field simulation of driven Rydberg lattices.
///
/// Files use MHz (ordinary frequency), µs and µm throughout.
#[derive(Debug, Parser)]
#[command(name = "rydbroad", version)]
pub struct Cli {
    /// JSON input for the command: a simulation config or manifest for
    /// `simulate`, an operating point for `predict`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the seed of a simulation config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads for the lattice integrator (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interaction volumes from contaminant channel data.
    Beta(BetaArgs),
    /// Width and resonant rate for one operating point, as a CSV row.
    Predict(PredictArgs),
    /// Predictions over a logarithmic (Ω, f) grid.
    Sweep(SweepArgs),
    /// Integrate the mean-field lattice to steady state.
    Simulate(SimulateArgs),
    /// Fit a spectrum or a decay trace.
    Fit(FitArgs),
    /// Collapse measured widths and rates onto a broadening law.
    Collapse(CollapseArgs),
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    /// Channel data file (JSON); the bundled 87Rb 18s data if omitted.
    #[arg(long)]
    pub channels: Option<PathBuf>,
    /// Also report β3 rescaled to this effective principal quantum number.
    #[arg(long)]
    pub nstar: Option<f64>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Dipole,
    Vdw,
}

#[derive(Debug, Args, Clone)]
pub struct VolumeArgs {
    /// Dipole interaction volume, µm³.
    #[arg(long, default_value_t = 116.0, conflicts_with = "channels")]
    pub beta3: f64,
    /// Take β3 from a channel data file instead.
    #[arg(long)]
    pub channels: Option<PathBuf>,
    /// Which family fills the gamma_MHz / r0_MHz columns.
    #[arg(long, value_enum, default_value_t = FamilyArg::Dipole)]
    pub truth: FamilyArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, requires = "f")]
    pub omega_mhz: Option<f64>,
    #[arg(long, requires = "omega_mhz")]
    pub f: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta_mhz: f64,
    #[command(flatten)]
    pub volumes: VolumeArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub omega_min_mhz: f64,
    #[arg(long)]
    pub omega_max_mhz: f64,
    #[arg(long, default_value_t = 10)]
    pub n_omega: usize,
    #[arg(long)]
    pub f_min: f64,
    #[arg(long)]
    pub f_max: f64,
    #[arg(long, default_value_t = 10)]
    pub n_f: usize,
    #[arg(long, default_value_t = 0.0)]
    pub delta_mhz: f64,
    #[command(flatten)]
    pub volumes: VolumeArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Override t_max_us from the config.
    #[arg(long)]
    pub t_max_us: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Lorentzian,
    Decay,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(value_enum)]
    pub model: FitModel,
    /// Spectrum CSV (delta_MHz, signal[, sigma]) or trace CSV (t_us, counts).
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// CSV with omega_MHz, f, gamma_MHz, r0_MHz columns.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Dipole)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 116.0, conflicts_with = "channels")]
    pub beta3: f64,
    #[arg(long)]
    pub channels: Option<PathBuf>,
}

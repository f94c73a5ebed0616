//! `fiberqed`: spectra, saturation curves, fits and thermal-lock runs from the
//! command line. Every output file is accompanied by a `*.manifest.json`.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use commands::lock;

#[derive(Debug, Parser)]
#[command(
    name = "fiberqed",
    version,
    about = "Atom-cavity transmission, fitting and thermal-lock simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Transmission against probe detuning.
    Spectrum(SpectrumArgs),
    /// On-resonance transmission against input power, with and without atoms.
    Saturation(SaturationArgs),
    /// Fit a model to a CSV dataset.
    Fit(FitArgs),
    /// Fit the ring model to an empty-cavity scan (synthetic unless --data is given).
    EmptyCavity(EmptyCavityArgs),
    /// Thermal lock or heater-scan simulation.
    Lock(LockArgs),
    /// Summarize one or more runs from their manifests.
    Report(ReportArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

/// Parameter file and overrides shared by the model commands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Parameter JSON; the built-in reference set when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Collective cooperativity C.
    #[arg(long)]
    pub cooperativity: Option<f64>,
    /// Saturation photon number.
    #[arg(long)]
    pub n_sat: Option<f64>,
    /// Transverse atomic decay rate γ⊥/2π (MHz).
    #[arg(long)]
    pub gamma_perp_mhz: Option<f64>,
    /// Intrinsic cavity loss rate κ_i/2π (MHz).
    #[arg(long)]
    pub kappa_i_mhz: Option<f64>,
    /// External coupling rate κ_ex/2π (MHz).
    #[arg(long)]
    pub kappa_ex_mhz: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// Standard deviation of additive Gaussian noise on the transmission.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Seed for the noise generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Lowest,
    Highest,
    /// Follow the previous point while sweeping up.
    Up,
    /// Follow the previous point while sweeping down.
    Down,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Input power (W); overrides the params file drive.
    #[arg(long, conflicts_with = "y")]
    pub pin: Option<f64>,
    /// Normalized drive amplitude |y| instead of a power.
    #[arg(long)]
    pub y: Option<f64>,
    /// Sweep width (MHz), centered on --center-mhz.
    #[arg(long, default_value_t = 40.0)]
    pub span_mhz: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center_mhz: f64,
    #[arg(long, default_value_t = 801)]
    pub points: usize,
    /// Cavity resonance offset from the atomic line (MHz); aligned when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub cavity_offset_mhz: Option<f64>,
    #[arg(long, value_enum, default_value_t = Branch::Lowest)]
    pub branch: Branch,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SaturationArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lowest input power (W).
    #[arg(long, default_value_t = 1e-12)]
    pub pmin: f64,
    /// Highest input power (W).
    #[arg(long, default_value_t = 1e-8)]
    pub pmax: f64,
    /// Number of log-spaced powers.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    AtomicSpectrum,
    EmptyRing,
    SaturationCurve,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Dataset CSV: abscissa, transmission and an optional `sigma` column.
    #[arg(long)]
    pub data: PathBuf,
    /// FitSpec JSON. Without it, --model and --free describe the fit.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "spec")]
    pub model: Option<ModelChoice>,
    /// Comma-separated free parameters.
    #[arg(long, value_delimiter = ',')]
    pub free: Vec<String>,
    /// Pin a parameter, e.g. `--fix p_in_w=3e-10`. Repeatable.
    #[arg(long, value_name = "NAME=VALUE", value_parser = parse_assignment, allow_hyphen_values = true)]
    #[serde(default)]
    pub fix: Vec<(String, f64)>,
    /// Seed for the jittered starts; overrides the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the result and exit 0 even if a parameter is unidentifiable.
    #[arg(long)]
    pub allow_degenerate: bool,
    /// Fit spec resolved from --spec, embedded by the manifest for replay.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_spec: Option<fiberqed_core::FitSpec>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EmptyCavityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Measured scan CSV (detuning MHz, transmission). Synthetic when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Synthetic scan width (MHz); three FSRs when omitted.
    #[arg(long)]
    pub span_mhz: Option<f64>,
    #[arg(long, default_value_t = 2221)]
    pub points: usize,
    /// Position of the first synthetic resonance (MHz).
    #[arg(long, default_value_t = 25.0, allow_hyphen_values = true)]
    pub offset_mhz: f64,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub allow_degenerate: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LockMode {
    /// Closed-loop lock with an optional step disturbance.
    Lock,
    /// Up and down heater scans across the resonance.
    Scan,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LockArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON with optional `thermal` and `lock` blocks; demo values otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LockMode::Lock)]
    pub mode: LockMode,
    /// Simulated time (s) in lock mode.
    #[arg(long, default_value_t = 0.15)]
    pub duration: f64,
    /// Step disturbance of the resonance, in cold linewidths.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub step_linewidths: f64,
    /// Time of the step (s).
    #[arg(long, default_value_t = 0.05)]
    pub step_time: f64,
    /// Thermal and lock configuration resolved from --config, embedded by the
    /// manifest for replay.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_config: Option<lock::LockFile>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Manifests of the runs to summarize.
    #[arg(required = true, num_args = 1..)]
    pub manifests: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Directory for the reproduced outputs.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, None) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

fn parse_assignment(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or("expected NAME=VALUE")?;
    let value = value.trim().parse::<f64>().map_err(|e| format!("{name}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

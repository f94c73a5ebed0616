pub mod fitting;
pub mod lock;
pub mod model;
pub mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fiberqed_core::ParamFile;

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{Command, ModelArgs};

/// Runs `command`. `params` replaces the params file and flag overrides when
/// replaying a manifest.
pub fn run(command: Command, params: Option<ParamFile>) -> CliResult<()> {
    match &command {
        Command::Spectrum(a) => model::spectrum(&command, a, params),
        Command::Saturation(a) => model::saturation(&command, a, params),
        Command::Fit(a) => fitting::fit(a),
        Command::EmptyCavity(a) => fitting::empty_cavity(&command, a, params),
        Command::Lock(a) => lock::lock(a, params),
        Command::Report(a) => report::report(a),
        Command::Replay(a) => replay(&a.manifest, &a.out),
    }
}

fn replay(manifest_path: &Path, out: &Path) -> CliResult<()> {
    let manifest = RunManifest::load(manifest_path)?;
    let params = if manifest.params.is_null() {
        None
    } else {
        Some(serde_json::from_value::<ParamFile>(manifest.params.clone())?)
    };
    let mut command = manifest.command;
    let out = out.to_path_buf();
    match &mut command {
        Command::Spectrum(a) => a.out.out = out,
        Command::Saturation(a) => a.out.out = out,
        Command::Fit(a) => a.out.out = out,
        Command::EmptyCavity(a) => a.out.out = out,
        Command::Lock(a) => a.out.out = out,
        Command::Report(a) => a.out.out = out,
        Command::Replay(_) => return Err(CliError::invalid("a manifest cannot record a replay")),
    }
    run(command, params)
}

/// Params file (or the reference set) with command-line overrides applied.
pub fn resolve_params(args: &ModelArgs, replayed: Option<ParamFile>) -> CliResult<ParamFile> {
    if let Some(p) = replayed {
        p.validate()?;
        return Ok(p);
    }
    let mut p = match &args.params {
        Some(path) => ParamFile::load(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?,
        None => ParamFile::reference(),
    };
    if let Some(c) = args.cooperativity {
        p.ensemble.cooperativity = c;
    }
    if let Some(n) = args.n_sat {
        p.ensemble.n_sat = n;
    }
    if let Some(g) = args.gamma_perp_mhz {
        p.ensemble.gamma_perp_mhz = Some(g);
        p.ensemble.gamma_d_mhz = None;
    }
    if let Some(k) = args.kappa_i_mhz {
        p.cavity.kappa_i_mhz = k;
    }
    if let Some(k) = args.kappa_ex_mhz {
        p.cavity.kappa_ex_mhz = k;
    }
    p.validate()?;
    Ok(p)
}

pub fn prepare_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::invalid(format!("cannot create {}: {e}", dir.display())))
}

pub fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path: PathBuf = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::invalid(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

pub fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> CliResult<()> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn check_noise(sd: f64) -> CliResult<()> {
    if sd.is_finite() && sd >= 0.0 {
        Ok(())
    } else {
        Err(CliError::invalid(format!(
            "--noise must be a non-negative number, got {sd}"
        )))
    }
}

use fiberqed_core::fit::{gaussian_noise, saturation_curve};
use fiberqed_core::spectrum::{self, linspace, logspace, SpectrumPoint};
use fiberqed_core::{io, BranchPolicy, Drive, DriveParams, LockCondition, ParamFile, SweepDirection};
use serde_json::json;

use super::{check_noise, create, prepare_out, resolve_params};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{Branch, Command, SaturationArgs, SpectrumArgs};

fn policy(branch: Branch) -> BranchPolicy {
    match branch {
        Branch::Lowest => BranchPolicy::Lowest,
        Branch::Highest => BranchPolicy::Highest,
        Branch::Up => BranchPolicy::FollowSweep(SweepDirection::Up),
        Branch::Down => BranchPolicy::FollowSweep(SweepDirection::Down),
    }
}

pub fn spectrum(command: &Command, args: &SpectrumArgs, replayed: Option<ParamFile>) -> CliResult<()> {
    check_noise(args.noise.noise)?;
    if args.points < 2 || !(args.span_mhz > 0.0) {
        return Err(CliError::invalid("need --points >= 2 and a positive --span-mhz"));
    }
    let replaying = replayed.is_some();
    let mut file = resolve_params(&args.model, replayed)?;
    if !replaying && (args.pin.is_some() || args.y.is_some()) {
        let mut drive = file.drive.unwrap_or(fiberqed_core::params::DriveSection {
            p_in_w: None,
            y: None,
            delta_atom_mhz: 0.0,
            delta_cavity_mhz: 0.0,
        });
        drive.p_in_w = args.pin;
        drive.y = args.y;
        file.drive = Some(drive);
    }
    let params = file.validate()?;
    let drive = params.drive.as_ref().map_or(Drive::Amplitude(0.0), DriveParams::drive);

    let lock = match args.cavity_offset_mhz {
        Some(offset) => LockCondition::Independent {
            cavity_offset_mhz: offset,
        },
        None => LockCondition::Aligned,
    };
    let half = args.span_mhz / 2.0;
    let grid = linspace(args.center_mhz - half, args.center_mhz + half, args.points);
    let points = spectrum::spectrum(
        &grid,
        lock,
        drive,
        &params.cavity,
        &params.ensemble,
        policy(args.branch),
    )?;
    let clean: Vec<f64> = points.iter().map(|p| p.transmission).collect();
    let modes = spectrum::normal_modes(&points);
    let noisy = gaussian_noise(&clean, args.noise.noise, args.noise.seed);
    let written: Vec<SpectrumPoint> = grid
        .iter()
        .zip(&noisy)
        .map(|(&d, &t)| SpectrumPoint {
            detuning_mhz: d,
            transmission: t,
        })
        .collect();

    let out = &args.out.out;
    prepare_out(out)?;
    io::write_spectrum(create(out, "spectrum.csv")?, &written)?;
    let mut manifest = RunManifest::new(command, serde_json::to_value(file)?);
    manifest.outputs.push("spectrum.csv".into());
    manifest.summary = json!({
        "drive_amplitude": drive.amplitude(&params.cavity, params.ensemble.n_sat()),
        "normal_modes": modes.len(),
        "feature_positions_mhz": modes.iter().map(|m| m.position).collect::<Vec<_>>(),
        "splitting_mhz": spectrum::measured_splitting_mhz(&points),
        "min_transmission": clean.iter().copied().fold(f64::INFINITY, f64::min),
    });
    manifest.write(out, "spectrum")?;
    println!(
        "spectrum: {} points, {} normal-mode feature(s) -> {}",
        points.len(),
        modes.len(),
        out.join("spectrum.csv").display()
    );
    Ok(())
}

pub fn saturation(command: &Command, args: &SaturationArgs, replayed: Option<ParamFile>) -> CliResult<()> {
    check_noise(args.noise.noise)?;
    if !(args.pmin > 0.0 && args.pmax > args.pmin) || args.points < 2 {
        return Err(CliError::invalid("need 0 < --pmin < --pmax and --points >= 2"));
    }
    let file = resolve_params(&args.model, replayed)?;
    let params = file.validate()?;
    let powers = logspace(args.pmin, args.pmax, args.points);
    let mut curve = saturation_curve(&powers, &params.cavity, &params.ensemble)?;
    let (first, last) = (curve[0].t_atoms, curve[curve.len() - 1].t_atoms);
    let atoms: Vec<f64> = curve.iter().map(|p| p.t_atoms).collect();
    for (p, t) in curve
        .iter_mut()
        .zip(gaussian_noise(&atoms, args.noise.noise, args.noise.seed))
    {
        p.t_atoms = t;
    }

    let out = &args.out.out;
    prepare_out(out)?;
    io::write_saturation(create(out, "saturation.csv")?, &curve)?;
    let mut manifest = RunManifest::new(command, serde_json::to_value(file)?);
    manifest.outputs.push("saturation.csv".into());
    manifest.summary = json!({
        "t_atoms_lowest_power": first,
        "t_atoms_highest_power": last,
        "t_empty": curve[0].t_empty,
    });
    manifest.write(out, "saturation")?;
    println!(
        "saturation: T from {first:.4} to {last:.4} over {} powers -> {}",
        curve.len(),
        out.join("saturation.csv").display()
    );
    Ok(())
}

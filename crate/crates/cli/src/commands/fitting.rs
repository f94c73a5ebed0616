use fiberqed_core::fit::{self, gaussian_noise, Dataset, FitError, FitResult, FitSpec, ModelKind};
use fiberqed_core::spectrum::linspace;
use fiberqed_core::{io, ParamFile, RingModel};
use serde_json::json;

use super::{check_noise, create, prepare_out, resolve_params, write_json};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{Command, EmptyCavityArgs, FitArgs, ModelChoice};

fn kind(choice: ModelChoice) -> ModelKind {
    match choice {
        ModelChoice::AtomicSpectrum => ModelKind::AtomicSpectrum,
        ModelChoice::EmptyRing => ModelKind::EmptyRing,
        ModelChoice::SaturationCurve => ModelKind::SaturationCurve,
    }
}

/// Runs the fit, turning the two result-bearing failures into a result plus
/// the error to report after the outputs are written.
fn run_fit(data: &Dataset, spec: &FitSpec, allow_degenerate: bool) -> CliResult<(FitResult, Option<FitError>)> {
    match fit::fit(data, spec) {
        Ok(r) => Ok((r, None)),
        Err(FitError::Degenerate { result, .. }) if allow_degenerate => Ok((*result, None)),
        Err(e) => match e.partial_result().cloned() {
            Some(r) => Ok((r, Some(e))),
            None => Err(e.into()),
        },
    }
}

fn write_fit_outputs(
    out: &std::path::Path,
    data: &Dataset,
    result: &FitResult,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    let ymodel = result.predict(data.x())?;
    write_json(out, "fit_result.json", result)?;
    io::write_fit_residuals(create(out, "fit_residuals.csv")?, data, &ymodel)?;
    manifest.outputs.push("fit_result.json".into());
    manifest.outputs.push("fit_residuals.csv".into());
    Ok(())
}

fn describe(result: &FitResult) -> String {
    result
        .free
        .iter()
        .map(|name| {
            let v = result.estimates[name];
            match result.uncertainties.get(name).copied().flatten() {
                Some(u) => format!("{name} = {v:.6} ± {u:.2e}"),
                None => format!("{name} = {v:.6}"),
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let data = Dataset::from_csv_path(&args.data)?;
    let mut spec = match (&args.resolved_spec, &args.spec) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            FitSpec::from_json(&text)?
        }
        (None, None) => FitSpec::new(kind(
            args.model
                .ok_or_else(|| CliError::invalid("--model or --spec is required"))?,
        )),
    };
    if args.resolved_spec.is_none() {
        if let Some(m) = args.model {
            spec.model = kind(m);
        }
        if !args.free.is_empty() {
            spec.free = args.free.clone();
        }
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
        for (name, value) in &args.fix {
            spec.fixed.insert(name.clone(), *value);
        }
    }

    let (result, failure) = run_fit(&data, &spec, args.allow_degenerate)?;
    let out = &args.out.out;
    prepare_out(out)?;
    let mut recorded = args.clone();
    recorded.resolved_spec = Some(spec);
    let mut manifest = RunManifest::new(&Command::Fit(recorded), serde_json::Value::Null);
    manifest.inputs.push(args.data.clone());
    if let Some(s) = &args.spec {
        manifest.inputs.push(s.clone());
    }
    write_fit_outputs(out, &data, &result, &mut manifest)?;
    manifest.summary = json!({
        "converged": result.converged,
        "degenerate": result.degenerate,
        "residual_rms": result.residual_rms,
        "free": result.free,
        "estimates": result.estimates,
        "derived": result.derived,
    });
    manifest.write(out, "fit")?;
    println!("fit: {} (rms {:.3e})", describe(&result), result.residual_rms);
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn empty_cavity(command: &Command, args: &EmptyCavityArgs, replayed: Option<ParamFile>) -> CliResult<()> {
    check_noise(args.noise.noise)?;
    let file = resolve_params(&args.model, replayed)?;
    let params = file.validate()?;
    let out = &args.out.out;
    prepare_out(out)?;
    let mut manifest = RunManifest::new(command, serde_json::to_value(file)?);

    let data = match &args.data {
        Some(path) => {
            manifest.inputs.push(path.clone());
            Dataset::from_csv_path(path)?
        }
        None => {
            let truth = RingModel::from_cavity(&params.cavity, args.offset_mhz * 1e6)
                .map_err(|e| CliError::invalid(format!("ring model: {e}")))?;
            let span = args.span_mhz.unwrap_or(3.0 * file.cavity.fsr_mhz);
            if !(span > 0.0) || args.points < 10 {
                return Err(CliError::invalid("need a positive span and at least 10 points"));
            }
            let x = linspace(0.0, span, args.points);
            let clean: Vec<f64> = x.iter().map(|nu| truth.transmission(nu * 1e6)).collect();
            let y = gaussian_noise(&clean, args.noise.noise, args.noise.seed);
            let points: Vec<_> = x
                .iter()
                .zip(&y)
                .map(|(&d, &t)| fiberqed_core::SpectrumPoint {
                    detuning_mhz: d,
                    transmission: t,
                })
                .collect();
            io::write_spectrum(create(out, "ring_scan.csv")?, &points)?;
            manifest.outputs.push("ring_scan.csv".into());
            Dataset::new(x, y, None)?
        }
    };

    let spec = FitSpec::new(ModelKind::EmptyRing).seed(args.noise.seed);
    let (result, failure) = run_fit(&data, &spec, args.allow_degenerate)?;
    write_fit_outputs(out, &data, &result, &mut manifest)?;
    manifest.summary = json!({
        "finesse": result.derived.get("finesse"),
        "fsr_mhz": result.get("fsr_mhz"),
        "linewidth_mhz": result.derived.get("linewidth_mhz"),
        "kappa_i_mhz": result.derived.get("kappa_i_mhz"),
        "kappa_ex_mhz": result.derived.get("kappa_ex_mhz"),
        "t_coupler": result.get("t_coupler"),
        "a_roundtrip": result.get("a_roundtrip"),
        "converged": result.converged,
    });
    manifest.write(out, "empty_cavity")?;
    let d = |k: &str| result.derived.get(k).copied().unwrap_or(f64::NAN);
    println!(
        "empty cavity: finesse {:.2}, FSR {:.3} MHz, kappa_i/2pi {:.4} MHz, kappa_ex/2pi {:.4} MHz",
        d("finesse"),
        result.get("fsr_mhz").unwrap_or(f64::NAN),
        d("kappa_i_mhz"),
        d("kappa_ex_mhz")
    );
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

use std::fmt::Write as _;
use std::path::Path;

use fiberqed_core::spectrum::{self, linspace};
use fiberqed_core::steady_state::{g_eff_from_nsat, n_eff_from_cooperativity, splitting_estimate};
use fiberqed_core::units::angular_to_mhz;
use fiberqed_core::{BranchPolicy, Drive, LockCondition, ParamFile, RingModel};
use serde_json::Value;

use super::{create, prepare_out};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, MANIFEST_SUFFIX};
use crate::ReportArgs;

struct Row {
    run: String,
    quantity: &'static str,
    value: f64,
    unit: &'static str,
}

fn params_rows(run: &str, file: &ParamFile, rows: &mut Vec<Row>) -> CliResult<()> {
    let p = file.validate()?;
    let (cavity, ensemble) = (p.cavity, p.ensemble);
    let mut push = |quantity, value, unit| {
        rows.push(Row {
            run: run.to_string(),
            quantity,
            value,
            unit,
        })
    };
    if let Ok(ring) = RingModel::from_cavity(&cavity, 0.0) {
        push("finesse", ring.finesse(), "");
    }
    push("linewidth", cavity.fwhm() / 1e6, "MHz");
    push(
        "splitting_estimate",
        splitting_estimate(ensemble.cooperativity(), cavity.kappa(), ensemble.gamma_perp()) / 1e6,
        "MHz",
    );
    let grid = linspace(-40.0, 40.0, 8001);
    let weak = spectrum::spectrum(
        &grid,
        LockCondition::Aligned,
        Drive::Amplitude(0.0),
        &cavity,
        &ensemble,
        BranchPolicy::Lowest,
    )?;
    if let Some(s) = spectrum::measured_splitting_mhz(&weak) {
        push("splitting_weak_drive", s, "MHz");
    }
    let g = g_eff_from_nsat(ensemble.n_sat(), ensemble.gamma_perp(), ensemble.gamma_par());
    push("g_eff", angular_to_mhz(g), "MHz");
    push(
        "n_eff",
        n_eff_from_cooperativity(ensemble.cooperativity(), g, cavity.kappa(), ensemble.gamma_perp()),
        "",
    );
    Ok(())
}

fn summary_rows(run: &str, summary: &Value, rows: &mut Vec<Row>) {
    const KEYS: &[(&str, &str, &str)] = &[
        ("finesse", "fitted_finesse", ""),
        ("fsr_mhz", "fitted_fsr", "MHz"),
        ("kappa_i_mhz", "fitted_kappa_i", "MHz"),
        ("kappa_ex_mhz", "fitted_kappa_ex", "MHz"),
        ("splitting_mhz", "measured_splitting", "MHz"),
        ("dwell_ratio", "dwell_ratio", ""),
        ("relock_after_step_tau", "relock_time", "tau"),
        ("rms_error_mhz", "lock_rms_error", "MHz"),
    ];
    for &(key, quantity, unit) in KEYS {
        if let Some(value) = summary.get(key).and_then(Value::as_f64) {
            rows.push(Row {
                run: run.to_string(),
                quantity,
                value,
                unit,
            });
        }
    }
    let free: Vec<&str> = summary
        .get("free")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default();
    if let Some(est) = summary.get("estimates").and_then(Value::as_object) {
        for (key, quantity) in [
            ("cooperativity", "fitted_cooperativity"),
            ("n_sat", "fitted_n_sat"),
            ("gamma_perp_mhz", "fitted_gamma_perp"),
        ] {
            if let Some(value) = est.get(key).and_then(Value::as_f64).filter(|_| free.contains(&key)) {
                rows.push(Row {
                    run: run.to_string(),
                    quantity,
                    value,
                    unit: if key == "gamma_perp_mhz" { "MHz" } else { "" },
                });
            }
        }
    }
}

fn run_label(index: usize, path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("run");
    let stem = name.strip_suffix(MANIFEST_SUFFIX).unwrap_or(name);
    format!("{:02}_{stem}", index + 1)
}

pub fn report(args: &ReportArgs) -> CliResult<()> {
    if args.manifests.is_empty() {
        return Err(CliError::invalid("no manifests given"));
    }
    let loaded = args
        .manifests
        .iter()
        .map(|p| RunManifest::load(p).map(|m| (p.clone(), m)))
        .collect::<CliResult<Vec<_>>>()?;

    let out = &args.out.out;
    prepare_out(out)?;
    let mut rows = Vec::new();
    let mut copied = Vec::new();
    for (i, (path, manifest)) in loaded.iter().enumerate() {
        let label = run_label(i, path);
        if !manifest.params.is_null() {
            let file: ParamFile = serde_json::from_value(manifest.params.clone())?;
            params_rows(&label, &file, &mut rows)?;
        }
        summary_rows(&label, &manifest.summary, &mut rows);

        let bundle = out.join("bundle").join(&label);
        prepare_out(&bundle)?;
        for src in manifest.output_paths(path) {
            if src.extension().is_some_and(|e| e == "csv") {
                let name = src.file_name().expect("output file name");
                std::fs::copy(&src, bundle.join(name))
                    .map_err(|e| CliError::invalid(format!("cannot copy {}: {e}", src.display())))?;
                copied.push(format!("bundle/{label}/{}", name.to_string_lossy()));
            }
        }
    }

    let mut csv = csv::Writer::from_writer(create(out, "derived.csv")?);
    csv.write_record(["run", "quantity", "value", "unit"])?;
    for r in &rows {
        csv.write_record([r.run.as_str(), r.quantity, &r.value.to_string(), r.unit])?;
    }
    csv.flush()?;

    let width = rows.iter().map(|r| r.run.len()).max().unwrap_or(3).max(3);
    let mut text = String::new();
    writeln!(text, "{:<width$}  {:<22}  {:>14}  unit", "run", "quantity", "value").unwrap();
    for r in &rows {
        writeln!(
            text,
            "{:<width$}  {:<22}  {:>14.6}  {}",
            r.run, r.quantity, r.value, r.unit
        )
        .unwrap();
    }
    if !copied.is_empty() {
        writeln!(text, "\nbundled tables:").unwrap();
        for c in &copied {
            writeln!(text, "  {c}").unwrap();
        }
    }
    std::fs::write(out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

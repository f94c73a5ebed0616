use fiberqed_core::thermal::{lock_loop, scan_experiment, LockConfig, ScanConfig, ThermalParams};
use fiberqed_core::{io, ParamFile, SweepDirection};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create, prepare_out, resolve_params, write_json};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{Command, LockArgs, LockMode};

/// Lock configuration file. Missing blocks take the demonstration values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock: Option<LockConfig>,
}

pub fn lock(args: &LockArgs, replayed: Option<ParamFile>) -> CliResult<()> {
    let file = resolve_params(&args.model, replayed)?;
    let cavity = file.validate()?.cavity;
    let config_file = match (&args.resolved_config, &args.config) {
        (Some(c), _) => *c,
        (None, Some(path)) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?
        }
        (None, None) => LockFile::default(),
    };
    let heater_power = config_file.lock.map_or(2e-3, |l| l.heater_power);
    let thermal = config_file
        .thermal
        .unwrap_or_else(|| ThermalParams::demo(&cavity, heater_power));
    thermal.validate()?;
    let config = config_file.lock.unwrap_or_else(|| LockConfig::demo(&cavity, &thermal));
    let resolved = LockFile {
        thermal: Some(thermal),
        lock: Some(config),
    };

    let out = &args.out.out;
    prepare_out(out)?;
    let mut recorded = args.clone();
    recorded.resolved_config = Some(resolved);
    let mut manifest = RunManifest::new(&Command::Lock(recorded), serde_json::to_value(file)?);
    if let Some(c) = &args.config {
        manifest.inputs.push(c.clone());
    }
    let w = cavity.fwhm();

    match args.mode {
        LockMode::Lock => {
            let step = args.step_linewidths * w;
            let t0 = args.step_time;
            let disturbance = move |t: f64| if t >= t0 { step } else { 0.0 };
            let run = lock_loop(args.duration, &disturbance, &thermal, &config, &cavity)?;
            io::write_time_series(create(out, "lock_timeseries.csv")?, &run.samples)?;
            let m = run.metrics;
            let relock_after_step = m.relock_time_s.map(|t| (t - t0).max(0.0));
            let metrics = json!({
                "rms_error_mhz": m.rms_error_hz / 1e6,
                "max_abs_error_mhz": m.max_abs_error_hz / 1e6,
                "final_error_mhz": m.final_error_hz / 1e6,
                "overshoot_mhz": m.overshoot_hz / 1e6,
                "relock_time_s": m.relock_time_s,
                "relock_after_step_s": relock_after_step,
                "relock_after_step_tau": relock_after_step.map(|t| t / thermal.tau_th),
                "linewidth_mhz": w / 1e6,
                "step_mhz": step / 1e6,
            });
            write_json(out, "lock_metrics.json", &metrics)?;
            manifest
                .outputs
                .extend(["lock_timeseries.csv".to_string(), "lock_metrics.json".to_string()]);
            manifest.summary = metrics;
            manifest.write(out, "lock")?;
            println!(
                "lock: rms error {:.3e} MHz, re-lock {}",
                m.rms_error_hz / 1e6,
                relock_after_step.map_or("never".to_string(), |t| format!(
                    "{:.2} tau after the step",
                    t / thermal.tau_th
                ))
            );
        }
        LockMode::Scan => {
            let mut dwell = [0.0; 2];
            for (i, (dir, name)) in [
                (SweepDirection::Up, "scan_up.csv"),
                (SweepDirection::Down, "scan_down.csv"),
            ]
            .into_iter()
            .enumerate()
            {
                let trace = scan_experiment(&ScanConfig::demo(dir, &cavity, &thermal), &thermal, &config, &cavity)?;
                io::write_time_series(create(out, name)?, &trace.samples)?;
                manifest.outputs.push(name.to_string());
                dwell[i] = trace.dwell_time_s;
            }
            let metrics = json!({
                "dwell_up_s": dwell[0],
                "dwell_down_s": dwell[1],
                "dwell_ratio": dwell[1] / dwell[0],
            });
            write_json(out, "scan_metrics.json", &metrics)?;
            manifest.outputs.push("scan_metrics.json".into());
            manifest.summary = metrics;
            manifest.write(out, "scan")?;
            println!(
                "scan: dwell up {:.4} s, down {:.4} s, ratio {:.2}",
                dwell[0],
                dwell[1],
                dwell[1] / dwell[0]
            );
        }
    }
    Ok(())
}

//! CSV writers for the result tables.
//!
//! Numbers are written in Rust's shortest round-trip form, so identical runs
//! produce identical bytes.

use std::io::Write;

use crate::fit::{Dataset, SaturationPoint};
use crate::spectrum::SpectrumPoint;
use crate::thermal::ThermalSample;

pub type CsvResult = Result<(), csv::Error>;

fn write_rows<W: Write, const N: usize>(out: W, header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum<W: Write>(out: W, points: &[SpectrumPoint]) -> CsvResult {
    write_rows(
        out,
        ["detuning_mhz", "transmission"],
        points.iter().map(|p| [p.detuning_mhz, p.transmission]),
    )
}

pub fn write_saturation<W: Write>(out: W, points: &[SaturationPoint]) -> CsvResult {
    write_rows(
        out,
        ["power_w", "t_atoms", "t_empty"],
        points.iter().map(|p| [p.power_w, p.t_atoms, p.t_empty]),
    )
}

pub fn write_time_series<W: Write>(out: W, samples: &[ThermalSample]) -> CsvResult {
    write_rows(
        out,
        [
            "time_s",
            "heater_detuning_mhz",
            "resonance_offset_mhz",
            "p_circ_w",
            "probe_transmission",
        ],
        samples.iter().map(|s| {
            [
                s.time_s,
                s.heater_detuning_hz / 1e6,
                s.resonance_offset_hz / 1e6,
                s.p_circ_w,
                s.probe_transmission,
            ]
        }),
    )
}

/// `x,yobs,ymodel,residual` with `residual = yobs − ymodel`.
pub fn write_fit_residuals<W: Write>(out: W, data: &Dataset, ymodel: &[f64]) -> CsvResult {
    write_rows(
        out,
        ["x", "yobs", "ymodel", "residual"],
        data.x()
            .iter()
            .zip(data.yobs())
            .zip(ymodel)
            .map(|((&x, &y), &m)| [x, y, m, y - m]),
    )
}

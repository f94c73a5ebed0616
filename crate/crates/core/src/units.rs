//! Frequency unit conventions.
//!
//! Rates are stored internally as angular frequencies in rad/s. Everything
//! that crosses a file or command-line boundary is expressed as an ordinary
//! frequency `ν = ω / 2π`, usually in MHz.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::params::ParamError;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant `h = 2πħ` (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Group index assumed when turning a free spectral range into a fiber length.
pub const DEFAULT_GROUP_INDEX: f64 = 1.45;

const MEGA: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrequencyUnit {
    /// Angular frequency, rad/s.
    RadPerSec,
    /// Ordinary frequency, Hz.
    Hz,
    /// Ordinary frequency, MHz.
    MHz,
}

impl FrequencyUnit {
    /// Multiplier taking a value in this unit to rad/s.
    fn to_angular(self) -> f64 {
        match self {
            FrequencyUnit::RadPerSec => 1.0,
            FrequencyUnit::Hz => TAU,
            FrequencyUnit::MHz => TAU * MEGA,
        }
    }
}

impl FromStr for FrequencyUnit {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "rad/s" | "rad_per_s" => Ok(FrequencyUnit::RadPerSec),
            "Hz" | "hz" => Ok(FrequencyUnit::Hz),
            "MHz" | "mhz" => Ok(FrequencyUnit::MHz),
            other => Err(ParamError::UnknownUnit(other.to_string())),
        }
    }
}

impl fmt::Display for FrequencyUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrequencyUnit::RadPerSec => "rad/s",
            FrequencyUnit::Hz => "Hz",
            FrequencyUnit::MHz => "MHz",
        })
    }
}

/// Converts `value` between frequency units.
pub fn convert(value: f64, from: FrequencyUnit, to: FrequencyUnit) -> f64 {
    if from == to {
        return value;
    }
    value * from.to_angular() / to.to_angular()
}

/// String-keyed variant of [`convert`], for unit names read from files.
pub fn convert_named(value: f64, from: &str, to: &str) -> Result<f64, ParamError> {
    Ok(convert(value, from.parse()?, to.parse()?))
}

#[inline]
pub fn mhz_to_angular(mhz: f64) -> f64 {
    mhz * (TAU * MEGA)
}

#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (TAU * MEGA)
}

#[inline]
pub fn hz_to_angular(hz: f64) -> f64 {
    hz * TAU
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Round-trip time of light in the ring, `1 / FSR`.
pub fn round_trip_time(fsr_hz: f64) -> f64 {
    1.0 / fsr_hz
}

/// Physical ring length for a given free spectral range and group index.
pub fn cavity_length(fsr_hz: f64, group_index: f64) -> f64 {
    SPEED_OF_LIGHT / (group_index * fsr_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn one_megahertz_angular() {
        let w = TAU * 1.0e6;
        assert_relative_eq!(
            convert(w, FrequencyUnit::RadPerSec, FrequencyUnit::MHz),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(angular_to_mhz(w), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn round_trip_time_and_length() {
        let fsr = 148.0e6;
        assert_relative_eq!(round_trip_time(fsr), 6.757e-9, max_relative = 1e-4);
        let length = cavity_length(fsr, DEFAULT_GROUP_INDEX);
        assert!((length - 1.4).abs() < 0.01, "length {length}");
    }

    #[test]
    fn unknown_unit_is_rejected() {
        assert!(matches!(
            "GHz".parse::<FrequencyUnit>(),
            Err(ParamError::UnknownUnit(u)) if u == "GHz"
        ));
        assert!(convert_named(1.0, "MHz", "furlongs").is_err());
        assert_relative_eq!(convert_named(1.0, "MHz", "Hz").unwrap(), 1.0e6);
    }

    proptest! {
        #[test]
        fn conversions_round_trip(value in -1.0e12f64..1.0e12, a in 0usize..3, b in 0usize..3) {
            let units = [FrequencyUnit::RadPerSec, FrequencyUnit::Hz, FrequencyUnit::MHz];
            let (from, to) = (units[a], units[b]);
            let back = convert(convert(value, from, to), to, from);
            prop_assert!((back - value).abs() <= 4.0 * f64::EPSILON * value.abs());
        }
    }
}

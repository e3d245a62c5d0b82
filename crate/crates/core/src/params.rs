//! Physical constants of the cavity, the atoms, the trap and the drive.
//!
//! All rates are angular frequencies in rad/s with the HWHM convention,
//! lengths are in metres and temperatures in kelvin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / (2.0 * PI)
}

/// Shorthand for `2π × mhz × 10⁶`.
#[inline]
pub fn mhz(mhz: f64) -> f64 {
    hz_to_rad(mhz * 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cavity field decay (HWHM).
    pub kappa: f64,
    /// Cavity field decay through the output mirror.
    pub kappa_t: f64,
    /// Atomic dipole decay (HWHM).
    pub gamma: f64,
    /// Maximum single-atom coupling on the cavity axis at an antinode.
    pub g_max: f64,
    pub lambda_probe: f64,
    pub lambda_trap: f64,
    pub cavity_length: f64,
    pub mode_waist: f64,
    pub trap_depth: f64,
    pub temperature: f64,
    pub drive_waist: f64,
    /// Coupling entering the scattering formulas. `None` uses `g_max`.
    pub coupling: Option<f64>,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            kappa: mhz(4.0),
            kappa_t: mhz(1.15),
            gamma: mhz(3.0),
            g_max: mhz(0.33),
            lambda_probe: 780e-9,
            lambda_trap: 805e-9,
            cavity_length: 15e-3,
            mode_waist: 127e-6,
            trap_depth: 140e-6,
            temperature: 25e-6,
            drive_waist: 1e-3,
            coupling: None,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("kappa_t", self.kappa_t),
            ("gamma", self.gamma),
            ("g_max", self.g_max),
            ("lambda_probe", self.lambda_probe),
            ("lambda_trap", self.lambda_trap),
            ("cavity_length", self.cavity_length),
            ("mode_waist", self.mode_waist),
            ("trap_depth", self.trap_depth),
            ("temperature", self.temperature),
            ("drive_waist", self.drive_waist),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if let Some(g) = self.coupling {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid(format!("coupling must be >= 0, got {g}")));
            }
        }
        if self.lambda_trap == self.lambda_probe {
            return Err(Error::invalid(
                "lambda_trap must differ from lambda_probe (incommensurate lattice)",
            ));
        }
        if self.temperature >= self.trap_depth {
            return Err(Error::invalid(format!(
                "temperature {} K must be below the trap depth {} K",
                self.temperature, self.trap_depth
            )));
        }
        Ok(())
    }

    /// Probe wave number 2π/λ.
    #[inline]
    pub fn k_probe(&self) -> f64 {
        2.0 * PI / self.lambda_probe
    }

    /// Lattice site spacing λ_trap/2.
    #[inline]
    pub fn lattice_spacing(&self) -> f64 {
        self.lambda_trap / 2.0
    }

    /// Coupling used in the collective amplitude.
    #[inline]
    pub fn g(&self) -> f64 {
        self.coupling.unwrap_or(self.g_max)
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.coupling = Some(g);
        self
    }

    /// RMS thermal displacement about a lattice site in the harmonic
    /// approximation of the well: (λ_trap/2π)·sqrt(T / 2U₀).
    pub fn thermal_sigma_x(&self) -> f64 {
        self.lambda_trap / (2.0 * PI) * (self.temperature / (2.0 * self.trap_depth)).sqrt()
    }

    /// Angular frequency of the probe light.
    pub fn probe_omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_probe
    }

    /// Half the summed linewidths, the width of a vacuum Rabi peak.
    #[inline]
    pub fn rabi_peak_hwhm(&self) -> f64 {
        (self.kappa + self.gamma) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SystemParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_commensurate_and_hot() {
        let mut p = SystemParams::default();
        p.lambda_trap = p.lambda_probe;
        assert!(p.validate().is_err());

        let mut p = SystemParams::default();
        p.temperature = p.trap_depth;
        assert!(p.validate().is_err());

        let p = SystemParams {
            kappa: 0.0,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn thermal_sigma_default() {
        // 805 nm / 2π · sqrt(25/280)
        let s = SystemParams::default().thermal_sigma_x();
        let expected = 805e-9 / (2.0 * PI) * (25.0f64 / 280.0).sqrt();
        assert!((s - expected).abs() < 1e-18);
        assert!((s - 38.28e-9).abs() < 0.1e-9);
    }
}

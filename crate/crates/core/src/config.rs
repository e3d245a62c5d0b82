//! JSON scenario configuration.
//!
//! Every physical quantity carries its unit in the field name; frequencies
//! are given in Hz (cycles, not radians) and converted at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::DetectionChain;
use crate::ensemble::{EnsembleKind, SamplerConfig};
use crate::error::{Error, Result};
use crate::multilevel::{
    clebsch_gordan_table, pumping_steady_state, Polarization, PopulationDistribution,
};
use crate::params::{hz_to_rad, SystemParams};
use crate::scattering::{detuning_grid, DriveParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    VrsWaterfall,
    PowerSweep,
    Scaling,
    Raman,
    Calibrate,
    OracleBeta,
    CgDump,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::VrsWaterfall => "vrs-waterfall",
            Self::PowerSweep => "power-sweep",
            Self::Scaling => "scaling",
            Self::Raman => "raman",
            Self::Calibrate => "calibrate",
            Self::OracleBeta => "oracle-beta",
            Self::CgDump => "cg-dump",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub kappa_hz: f64,
    pub kappa_t_hz: f64,
    pub gamma_hz: f64,
    pub g_max_hz: f64,
    /// Coupling used in the amplitude; `null` derives g_eff from the
    /// pumped populations.
    pub coupling_hz: Option<f64>,
    pub lambda_probe_m: f64,
    pub lambda_trap_m: f64,
    pub cavity_length_m: f64,
    pub mode_waist_m: f64,
    pub trap_depth_k: f64,
    pub temperature_k: f64,
    pub drive_waist_m: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        let hz = crate::params::rad_to_hz;
        Self {
            kappa_hz: hz(p.kappa),
            kappa_t_hz: hz(p.kappa_t),
            gamma_hz: hz(p.gamma),
            g_max_hz: hz(p.g_max),
            coupling_hz: None,
            lambda_probe_m: p.lambda_probe,
            lambda_trap_m: p.lambda_trap,
            cavity_length_m: p.cavity_length,
            mode_waist_m: p.mode_waist,
            trap_depth_k: p.trap_depth,
            temperature_k: p.temperature,
            drive_waist_m: p.drive_waist,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopulationSpec {
    /// Pumping steady state under the σ⁺/σ⁻ drive.
    SteadyState,
    Uniform,
    Stretched,
    Explicit([f64; 5]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub kind: EnsembleKind,
    pub cloud_rms_x_m: Option<f64>,
    pub transverse_rms_m: Option<f64>,
    pub illuminated_length_m: Option<f64>,
    pub thermal_sigma_x_m: Option<f64>,
    pub population: PopulationSpec,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            kind: EnsembleKind::Lattice,
            cloud_rms_x_m: None,
            transverse_rms_m: None,
            illuminated_length_m: None,
            thermal_sigma_x_m: None,
            population: PopulationSpec::SteadyState,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    /// Effective drive amplitude η/2π at `power_uw`.
    pub eta_hz: f64,
    pub power_uw: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self {
            eta_hz: 1.0e6,
            power_uw: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub xi: f64,
    pub exposure_s: f64,
    pub time_resolution_s: f64,
    pub background_cps: f64,
    pub dark_cps: f64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        let c = DetectionChain::default();
        Self {
            xi: c.xi,
            exposure_s: c.exposure,
            time_resolution_s: c.time_resolution,
            background_cps: c.background_rate,
            dark_cps: c.dark_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_span_hz: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_span_hz: 50e6,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub delta_a_hz: f64,
    pub scan_half_span_hz: f64,
    pub scan_points: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            delta_a_hz: -90e6,
            scan_half_span_hz: 20e6,
            scan_points: 401,
        }
    }
}

/// A full scenario description. Absent fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    pub system: SystemConfig,
    pub sampler: SamplerSection,
    pub drive: DriveSection,
    pub detection: DetectionSection,
    pub grid: GridSection,
    pub atom_numbers: Vec<usize>,
    pub powers_uw: Vec<f64>,
    /// Powers at or above this are flagged saturated and left out of fits.
    pub saturation_power_uw: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub n_components: usize,
    pub calibration: CalibrationSection,
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: ScenarioName::VrsWaterfall,
            system: SystemConfig::default(),
            sampler: SamplerSection::default(),
            drive: DriveSection::default(),
            detection: DetectionSection::default(),
            grid: GridSection::default(),
            atom_numbers: vec![10_000],
            powers_uw: vec![10.0, 16.0, 32.0, 64.0],
            saturation_power_uw: Some(128.0),
            realizations: 70,
            seed: 1,
            n_components: 4,
            calibration: CalibrationSection::default(),
            output_dir: None,
        }
    }
}

impl ScenarioConfig {
    /// Parses JSON text, either a plain config or a run manifest wrapping
    /// one. Syntax and type errors report line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            Error::config(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        if value.get("manifest_version").is_some() {
            let inner = value
                .get("config")
                .cloned()
                .ok_or_else(|| Error::config("config", "manifest has no config"))?;
            let cfg: ScenarioConfig = serde_json::from_value(inner)
                .map_err(|e| Error::config("config", e.to_string()))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        // Re-parse from text so field errors carry positions.
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("line {} column {}", e.line(), e.column()));
            Error::config(field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.system_params()
            .and_then(|p| p.validate())
            .map_err(|e| Error::config("system", e.to_string()))?;
        if self.grid.points == 0 || !(self.grid.half_span_hz >= 0.0) {
            return Err(Error::config("grid", "grid must be nonempty with nonnegative span"));
        }
        if self.realizations == 0 {
            return Err(Error::config("realizations", "must be >= 1"));
        }
        let needs_atoms = !matches!(self.scenario, ScenarioName::CgDump);
        if needs_atoms && self.atom_numbers.is_empty() {
            return Err(Error::config("atom_numbers", "must be nonempty"));
        }
        if self.scenario == ScenarioName::PowerSweep && self.powers_uw.is_empty() {
            return Err(Error::config("powers_uw", "must be nonempty"));
        }
        if self.powers_uw.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::config("powers_uw", "powers must be positive"));
        }
        if !(1..=4).contains(&self.n_components) {
            return Err(Error::config("n_components", "must be 1..=4"));
        }
        if !(self.drive.power_uw > 0.0) || !self.drive.eta_hz.is_finite() {
            return Err(Error::config("drive", "power_uw must be > 0 and eta_hz finite"));
        }
        self.detection_chain()
            .validate()
            .map_err(|e| Error::config("detection", e.to_string()))?;
        self.sampler_config()
            .map_err(|e| Error::config("sampler", e.to_string()))?;
        if self.calibration.scan_points < 5 {
            return Err(Error::config("calibration.scan_points", "must be >= 5"));
        }
        Ok(())
    }

    /// System parameters with the coupling resolved.
    pub fn system_params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let mut p = SystemParams {
            kappa: hz_to_rad(s.kappa_hz),
            kappa_t: hz_to_rad(s.kappa_t_hz),
            gamma: hz_to_rad(s.gamma_hz),
            g_max: hz_to_rad(s.g_max_hz),
            lambda_probe: s.lambda_probe_m,
            lambda_trap: s.lambda_trap_m,
            cavity_length: s.cavity_length_m,
            mode_waist: s.mode_waist_m,
            trap_depth: s.trap_depth_k,
            temperature: s.temperature_k,
            drive_waist: s.drive_waist_m,
            coupling: None,
        };
        p.coupling = Some(match s.coupling_hz {
            Some(g) => hz_to_rad(g),
            None => {
                let scheme = clebsch_gordan_table(p.gamma);
                crate::multilevel::effective_coupling(&scheme, &self.population()?, p.g_max)
            }
        });
        Ok(p)
    }

    pub fn population(&self) -> Result<PopulationDistribution> {
        match &self.sampler.population {
            PopulationSpec::SteadyState => pumping_steady_state(
                &clebsch_gordan_table(1.0),
                &[Polarization::SigmaPlus, Polarization::SigmaMinus],
            ),
            PopulationSpec::Uniform => Ok(PopulationDistribution::uniform()),
            PopulationSpec::Stretched => Ok(PopulationDistribution::stretched()),
            PopulationSpec::Explicit(p) => PopulationDistribution::new(*p),
        }
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let s = &self.sampler;
        for (name, v) in [
            ("cloud_rms_x_m", s.cloud_rms_x_m),
            ("transverse_rms_m", s.transverse_rms_m),
            ("illuminated_length_m", s.illuminated_length_m),
            ("thermal_sigma_x_m", s.thermal_sigma_x_m),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("{name} must be >= 0")));
                }
            }
        }
        Ok(SamplerConfig {
            kind: s.kind,
            cloud_rms_x: s.cloud_rms_x_m,
            transverse_rms: s.transverse_rms_m,
            illuminated_length: s.illuminated_length_m,
            thermal_sigma_x: s.thermal_sigma_x_m,
            population: self.population()?,
        })
    }

    pub fn drive_params(&self) -> DriveParams {
        DriveParams::resonant(hz_to_rad(self.drive.eta_hz), 0.0, self.drive.power_uw * 1e-6)
    }

    pub fn detection_chain(&self) -> DetectionChain {
        let d = &self.detection;
        DetectionChain {
            xi: d.xi,
            exposure: d.exposure_s,
            time_resolution: d.time_resolution_s,
            background_rate: d.background_cps,
            dark_rate: d.dark_cps,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        detuning_grid(hz_to_rad(self.grid.half_span_hz), self.grid.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"scenario": "cg-dump"}"#).unwrap();
        assert_eq!(cfg.scenario, ScenarioName::CgDump);
        assert_eq!(cfg.grid.points, 101);
        assert_eq!(cfg.realizations, 70);
    }

    #[test]
    fn unknown_scenario_names_field() {
        let err = ScenarioConfig::from_json(r#"{"scenario": "vrs"}"#).unwrap_err();
        match err {
            Error::Config { message, .. } => assert!(message.contains("vrs"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let err = ScenarioConfig::from_json(r#"{"scenario": "raman", "kappa": 3}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "kappa"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = ScenarioConfig::from_json("{\n \"scenario\": ,\n}").unwrap_err();
        match err {
            Error::Config { field, .. } => assert!(field.starts_with("line 2"), "{field}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors_name_fields() {
        let err = ScenarioConfig::from_json(r#"{"realizations": 0}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "realizations"));
        let err = ScenarioConfig::from_json(r#"{"grid": {"half_span_hz": 1e6, "points": 0}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "grid"));
    }

    #[test]
    fn default_coupling_is_population_average() {
        let cfg = ScenarioConfig {
            sampler: SamplerSection {
                population: PopulationSpec::Uniform,
                ..Default::default()
            },
            ..Default::default()
        };
        let g = cfg.system_params().unwrap().g();
        assert!((crate::params::rad_to_hz(g) / 0.225e6 - 1.0).abs() < 0.02);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ScenarioConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }
}

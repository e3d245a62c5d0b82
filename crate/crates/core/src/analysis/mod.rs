//! Parameter extraction from simulated or measured spectra.

pub mod lm;
mod lorentzian;
mod regression;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use lorentzian::{
    auto_initialize, extract_rabi_peaks, fit_lorentzian_sum, FitOptions, LorentzComponent,
    LorentzianSum, RabiPeak, RabiPeaks, SpectrumData, Weighting, MAX_COMPONENTS,
};
pub use regression::{
    calibrate_atom_number, fit_parabola_geff, fit_power_law_beta, ParabolaFit, PowerLawFit,
    ScalingConvention, DISPERSIVE_MIN_DETUNING_RATIO,
};

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub parameters: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Unweighted residual 2-norm.
    pub residual_norm: f64,
    pub data_norm: f64,
    /// Weighted sum of squared residuals.
    pub chi_squared: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Parameters that ended on their lower bound.
    pub at_bound: Vec<bool>,
}

impl FitResult {
    pub fn std_error(&self, index: usize) -> f64 {
        self.covariance[index][index].max(0.0).sqrt()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.parameters[i])
    }

    pub fn write_json<W: Write>(&self, writer: W) -> crate::Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

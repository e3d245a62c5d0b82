//! Photodetection: flux from intracavity photon number, shot noise,
//! log-normal rate estimates, and the absolute peak-rate prediction.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::ensemble::{rng_from_seed, split_seed};
use crate::error::{Error, Result};
use crate::params::{rad_to_hz, SystemParams, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionChain {
    /// Overall detection efficiency in (0, 1].
    pub xi: f64,
    /// Photon-count integration window (s).
    pub exposure: f64,
    pub time_resolution: f64,
    /// Ambient light, counts/s.
    pub background_rate: f64,
    /// Detector dark counts, counts/s.
    pub dark_rate: f64,
}

impl DetectionChain {
    /// Single-photon counting modules: 50 % efficiency, 100 µs windows.
    pub fn counting_module() -> Self {
        Self {
            xi: 0.5,
            exposure: 100e-6,
            time_resolution: 1e-6,
            background_rate: 50.0,
            dark_rate: 1.0,
        }
    }

    /// Nanowire detector path: 7 % efficiency, 1 ms windows.
    pub fn nanowire() -> Self {
        Self {
            xi: 0.07,
            exposure: 1e-3,
            ..Self::counting_module()
        }
    }

    /// Same chain with all background sources switched off.
    pub fn without_background(mut self) -> Self {
        self.background_rate = 0.0;
        self.dark_rate = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::invalid(format!("xi must lie in (0, 1], got {}", self.xi)));
        }
        for (name, v) in [
            ("exposure", self.exposure),
            ("time_resolution", self.time_resolution),
            ("background_rate", self.background_rate),
            ("dark_rate", self.dark_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.time_resolution > self.exposure {
            return Err(Error::invalid("time_resolution exceeds exposure"));
        }
        Ok(())
    }
}

impl Default for DetectionChain {
    fn default() -> Self {
        Self::counting_module()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Polarization preserving (Rayleigh) output.
    Y,
    /// Rotated (Raman) output.
    Z,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Y => "y",
            Channel::Z => "z",
        })
    }
}

/// Detected counts/s for a mean intracavity photon number:
/// ξ·2κ_T·n + background + dark.
pub fn photon_rate_from_intensity(intensity: f64, params: &SystemParams, chain: &DetectionChain) -> f64 {
    chain.xi * 2.0 * params.kappa_t * intensity + chain.background_rate + chain.dark_rate
}

/// Convention relating drive waist to the drive cross section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveAreaConvention {
    /// A = π w².
    #[default]
    WaistDisk,
    /// A = π w² / 2, the Gaussian effective area.
    GaussianEffective,
}

impl DriveAreaConvention {
    pub fn area(self, waist: f64) -> f64 {
        match self {
            Self::WaistDisk => PI * waist * waist,
            Self::GaussianEffective => PI * waist * waist / 2.0,
        }
    }
}

/// Peak count rate per µW of drive power at a vacuum Rabi resonance,
/// ξ κ_T · (1/8)·3λ²/(2π A) · γ/((κ+γ)/2)² · 1/(ħω), in counts/(s·µW).
pub fn predicted_peak_rate_per_power(params: &SystemParams, chain: &DetectionChain) -> f64 {
    predicted_peak_rate_per_power_with(params, chain, DriveAreaConvention::default())
}

pub fn predicted_peak_rate_per_power_with(
    params: &SystemParams,
    chain: &DetectionChain,
    convention: DriveAreaConvention,
) -> f64 {
    let lambda = params.lambda_probe;
    let area = convention.area(params.drive_waist);
    let cross_section = 3.0 * lambda * lambda / (2.0 * PI * area);
    let hwhm = params.rabi_peak_hwhm();
    let photons_per_microwatt = 1e-6 / (HBAR * params.probe_omega());
    chain.xi * params.kappa_t / 8.0 * cross_section * params.gamma / (hwhm * hwhm)
        * photons_per_microwatt
}

/// Counts of one channel at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub channel: Channel,
    /// Drive detuning (rad/s).
    pub delta: f64,
    pub counts: Vec<u64>,
    pub exposure: f64,
    pub seed: u64,
    /// Sample mean count divided by the exposure.
    pub mean_rate: f64,
    pub lognormal: Option<LogNormalEstimate>,
}

impl CountRecord {
    fn new(channel: Channel, delta: f64, counts: Vec<u64>, exposure: f64, seed: u64) -> Self {
        let mean = counts.iter().sum::<u64>() as f64 / counts.len().max(1) as f64;
        let lognormal = lognormal_estimate(&counts, exposure).ok();
        Self {
            channel,
            delta,
            counts,
            exposure,
            seed,
            mean_rate: mean / exposure,
            lognormal,
        }
    }

    /// Sample mean and unbiased variance of the counts.
    pub fn count_moments(&self) -> (f64, f64) {
        crate::scattering::mean_var(self.counts.iter().map(|&c| c as f64), self.counts.len())
    }
}

fn poisson_draw<R: Rng>(rng: &mut R, mean: f64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// `n_shots` independent Poisson counts at a constant rate.
pub fn sample_counts(
    rate: f64,
    chain: &DetectionChain,
    n_shots: usize,
    seed: u64,
    channel: Channel,
    delta: f64,
) -> Result<CountRecord> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::invalid(format!("rate must be >= 0, got {rate}")));
    }
    if n_shots == 0 {
        return Err(Error::invalid("n_shots must be >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mean = rate * chain.exposure;
    let counts = (0..n_shots)
        .map(|_| poisson_draw(&mut rng, mean))
        .collect::<Result<Vec<_>>>()?;
    Ok(CountRecord::new(channel, delta, counts, chain.exposure, seed))
}

/// One shot per supplied rate: the Poisson mean itself fluctuates from shot
/// to shot, compounding shot noise with the field statistics.
pub fn sample_compound_counts(
    rates: &[f64],
    chain: &DetectionChain,
    seed: u64,
    channel: Channel,
    delta: f64,
) -> Result<CountRecord> {
    if rates.is_empty() {
        return Err(Error::invalid("no rates supplied"));
    }
    let counts = rates
        .iter()
        .enumerate()
        .map(|(i, &rate)| {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::invalid(format!("rate must be >= 0, got {rate}")));
            }
            let mut rng = rng_from_seed(split_seed(seed, i as u64));
            poisson_draw(&mut rng, rate * chain.exposure)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountRecord::new(channel, delta, counts, chain.exposure, seed))
}

/// Count added to empty windows before taking logarithms.
pub const ZERO_COUNT_OFFSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalEstimate {
    /// Mean of ln(rate).
    pub location: f64,
    /// Standard deviation of ln(rate), maximum likelihood.
    pub scale: f64,
    /// exp(location + scale²/2).
    pub mean_rate: f64,
    /// Delta-method standard error of `mean_rate`.
    pub error_bar: f64,
    pub n: usize,
}

/// Maximum-likelihood log-normal fit to per-shot rates, with empty
/// windows counted as [`ZERO_COUNT_OFFSET`].
pub fn lognormal_estimate(counts: &[u64], exposure: f64) -> Result<LogNormalEstimate> {
    lognormal_estimate_with_offset(counts, exposure, ZERO_COUNT_OFFSET)
}

pub fn lognormal_estimate_with_offset(
    counts: &[u64],
    exposure: f64,
    zero_offset: f64,
) -> Result<LogNormalEstimate> {
    if counts.is_empty() {
        return Err(Error::DegenerateData("no counts".into()));
    }
    if !(exposure > 0.0) {
        return Err(Error::invalid("exposure must be positive"));
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::DegenerateData("all counts are zero".into()));
    }
    if !(zero_offset > 0.0) {
        return Err(Error::invalid("zero-count offset must be positive"));
    }
    let n = counts.len() as f64;
    let logs: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let c = if c == 0 { zero_offset } else { c as f64 };
            (c / exposure).ln()
        })
        .collect();
    let location = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - location).powi(2)).sum::<f64>() / n;
    let mean_rate = (location + var / 2.0).exp();
    let error_bar = mean_rate * (var / n + var * var / (2.0 * n)).sqrt();
    Ok(LogNormalEstimate {
        location,
        scale: var.sqrt(),
        mean_rate,
        error_bar,
        n: counts.len(),
    })
}

/// Multiplicative shot-to-shot atom-number correction of the peak
/// intensity, 1 − (4g²/(κ+γ)²)·(δN²/N̄).
pub fn atom_noise_correction_factor(params: &SystemParams, n_mean: f64, n_var: f64) -> f64 {
    let width = params.kappa + params.gamma;
    1.0 - 4.0 * params.g().powi(2) / (width * width) * (n_var / n_mean)
}

/// S_max = (4η²N^(β−1)/(κ+γ)²) × the atom-noise correction factor.
pub fn atom_noise_corrected_peak(
    eta: f64,
    n_mean: f64,
    n_var: f64,
    beta: f64,
    params: &SystemParams,
) -> Result<f64> {
    if !(n_mean > 0.0) {
        return Err(Error::invalid(format!("mean atom number must be > 0, got {n_mean}")));
    }
    if !(n_var >= 0.0) {
        return Err(Error::invalid(format!("atom number variance must be >= 0, got {n_var}")));
    }
    let factor = atom_noise_correction_factor(params, n_mean, n_var);
    if factor <= 0.0 {
        return Err(Error::OutOfRegime(factor));
    }
    let width = params.kappa + params.gamma;
    Ok(4.0 * eta * eta * n_mean.powf(beta - 1.0) / (width * width) * factor)
}

/// Writes `delta_Hz,channel,shot_index,counts,exposure_s,seed` rows.
pub fn write_count_records<W: Write>(records: &[CountRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["delta_Hz", "channel", "shot_index", "counts", "exposure_s", "seed"])?;
    for rec in records {
        for (i, c) in rec.counts.iter().enumerate() {
            w.write_record([
                format!("{:.6}", rad_to_hz(rec.delta)),
                rec.channel.to_string(),
                i.to_string(),
                c.to_string(),
                format!("{:e}", rec.exposure),
                rec.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::mhz;

    #[test]
    fn rate_without_light_or_background() {
        let p = SystemParams::default();
        let chain = DetectionChain::default().without_background();
        assert_eq!(photon_rate_from_intensity(0.0, &p, &chain), 0.0);
    }

    #[test]
    fn rate_of_peak_photon_number() {
        // 0.5 · 2 · 2π·1.15 MHz · 0.014
        let p = SystemParams::default();
        let chain = DetectionChain::default().without_background();
        let r = photon_rate_from_intensity(0.014, &p, &chain);
        let expected = 0.5 * 2.0 * mhz(1.15) * 0.014;
        assert!((r - expected).abs() < 1e-9);
        assert!((r - 1.0116e5).abs() < 0.001e5);
        let r2 = photon_rate_from_intensity(0.028, &p, &chain);
        assert!((r2 - 2.0 * r).abs() < 1e-9);
    }

    #[test]
    fn predicted_rate_scales_with_xi() {
        let p = SystemParams::default();
        let mut chain = DetectionChain::default();
        let full = predicted_peak_rate_per_power(&p, &chain);
        chain.xi = 1e-12;
        assert!(predicted_peak_rate_per_power(&p, &chain) < 1e-9 * full);
    }

    #[test]
    fn area_conventions_differ_by_two() {
        let p = SystemParams::default();
        let c = DetectionChain::default();
        let disk = predicted_peak_rate_per_power_with(&p, &c, DriveAreaConvention::WaistDisk);
        let gauss =
            predicted_peak_rate_per_power_with(&p, &c, DriveAreaConvention::GaussianEffective);
        assert!((gauss / disk - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_zero_counts() {
        let rec = sample_counts(0.0, &DetectionChain::default(), 50, 1, Channel::Y, 0.0).unwrap();
        assert!(rec.counts.iter().all(|&c| c == 0));
        assert!(rec.lognormal.is_none());
    }

    #[test]
    fn poisson_mean() {
        let chain = DetectionChain {
            exposure: 1e-3,
            ..DetectionChain::default()
        };
        let rec = sample_counts(1e4, &chain, 10_000, 3, Channel::Y, 0.0).unwrap();
        let (mean, var) = rec.count_moments();
        assert!((mean - 10.0).abs() < 0.3, "{mean}");
        assert!((var / mean - 1.0).abs() < 0.1);

        let rec = sample_counts(1e3, &DetectionChain::default(), 20_000, 4, Channel::Z, 0.0).unwrap();
        let (mean, _) = rec.count_moments();
        // σ = sqrt(0.1/20000) ≈ 0.0022
        assert!((mean - 0.1).abs() < 0.01, "{mean}");
    }

    #[test]
    fn constant_counts_lognormal() {
        let est = lognormal_estimate(&[7; 20], 1e-3).unwrap();
        assert!((est.mean_rate - 7000.0).abs() < 1e-9);
        assert!(est.scale < 1e-12);
        assert!(est.error_bar < 1e-9);
    }

    #[test]
    fn lognormal_zero_handling() {
        assert!(matches!(
            lognormal_estimate(&[0, 0, 0], 1e-4),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(lognormal_estimate(&[], 1e-4), Err(Error::DegenerateData(_))));
        let est = lognormal_estimate(&[0, 1, 3, 0, 2], 1e-4).unwrap();
        assert!(est.mean_rate.is_finite() && est.error_bar.is_finite());
        // zeros enter as 0.5 counts
        let manual = [0.5f64, 1.0, 3.0, 0.5, 2.0].map(|c| (c / 1e-4).ln());
        let loc = manual.iter().sum::<f64>() / 5.0;
        assert!((est.location - loc).abs() < 1e-12);
    }

    #[test]
    fn correction_factor_values() {
        let p = SystemParams::default();
        let f = atom_noise_correction_factor(&p, 5000.0, 5000.0);
        let expected = 1.0 - 4.0 * (0.33f64 / 7.0).powi(2);
        assert!((f - expected).abs() < 1e-12);
        assert!((f - 0.991).abs() < 5e-4);

        let eta = 3e6;
        let s = atom_noise_corrected_peak(eta, 5000.0, 0.0, 1.0, &p).unwrap();
        let width = p.kappa + p.gamma;
        assert_eq!(s, 4.0 * eta * eta / (width * width));

        let zero_g = p.with_coupling(0.0);
        assert_eq!(atom_noise_correction_factor(&zero_g, 10.0, 1e6), 1.0);
    }

    #[test]
    fn correction_out_of_regime() {
        let p = SystemParams::default();
        assert!(matches!(
            atom_noise_corrected_peak(1.0, 1.0, 1e6, 1.0, &p),
            Err(Error::OutOfRegime(_))
        ));
        assert!(atom_noise_corrected_peak(1.0, 0.0, 0.0, 1.0, &p).is_err());
        assert!(atom_noise_corrected_peak(1.0, 1.0, -1.0, 1.0, &p).is_err());
    }

    #[test]
    fn chain_validation() {
        DetectionChain::counting_module().validate().unwrap();
        DetectionChain::nanowire().validate().unwrap();
        let bad = DetectionChain {
            xi: 1.5,
            ..DetectionChain::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn count_csv_schema() {
        let rec = sample_counts(5e4, &DetectionChain::default(), 3, 9, Channel::Z, mhz(1.0)).unwrap();
        let mut buf = Vec::new();
        write_count_records(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("delta_Hz,channel,shot_index,counts,exposure_s,seed"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "1000000.000000");
        assert_eq!(first[1], "z");
        assert_eq!(first[5], "9");
        assert_eq!(text.lines().count(), 4);
    }
}

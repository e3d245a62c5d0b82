//! Collective intracavity field of the driven atom array.
//!
//! The y-polarized amplitude of a single configuration is
//!
//! ```text
//! α_y = η g S₁ / [(iΔ_A − γ)(iΔ_C − κ) + g² S₂]
//! S₁ = Σ_a w_a cos(k x_a) cos(k z_a),   S₂ = Σ_a w_a² cos²(k x_a)
//! ```
//!
//! Spectra are ensemble statistics of |α_y|² over independently sampled
//! configurations. A realization's configuration is shared by every grid
//! point, so each realization is a full detuning scan.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{split_seed, AtomEnsemble, SamplerConfig};
use crate::error::{Error, Result};
use crate::multilevel::LevelScheme;
use crate::params::{mhz, SystemParams};

/// Smallest admissible |D|².
pub const DENOMINATOR_FLOOR: f64 = 1e-30;

/// Default scan: 101 points over ±2π×50 MHz.
pub const DEFAULT_GRID_POINTS: usize = 101;
pub const DEFAULT_GRID_HALF_SPAN_MHZ: f64 = 50.0;

/// Small-parameter threshold above which the Lorentzian peak form is
/// reported as unreliable.
pub const LORENTZIAN_REGIME_WARN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Effective drive amplitude (rad/s).
    pub eta: f64,
    /// ω − ω_A.
    pub delta_a: f64,
    /// ω − ω_C.
    pub delta_c: f64,
    /// Transverse drive power (W).
    pub power: f64,
}

impl DriveParams {
    /// Atoms and cavity on common resonance, Δ_A = Δ_C = Δ.
    pub fn resonant(eta: f64, delta: f64, power: f64) -> Self {
        Self {
            eta,
            delta_a: delta,
            delta_c: delta,
            power,
        }
    }

    pub fn at_detuning(mut self, delta: f64) -> Self {
        self.delta_a = delta;
        self.delta_c = delta;
        self
    }

    /// Rescales power and η together, keeping η² ∝ power.
    pub fn with_power(mut self, power: f64) -> Self {
        if self.power > 0.0 {
            self.eta *= (power / self.power).sqrt();
        }
        self.power = power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(Error::invalid(format!("drive power must be >= 0, got {}", self.power)));
        }
        if !self.eta.is_finite() {
            return Err(Error::invalid("drive amplitude must be finite"));
        }
        Ok(())
    }
}

/// Evenly spaced detunings over ±`half_span` (rad/s).
pub fn detuning_grid(half_span: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn default_grid() -> Vec<f64> {
    detuning_grid(mhz(DEFAULT_GRID_HALF_SPAN_MHZ), DEFAULT_GRID_POINTS)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Position sums that fully determine a configuration's spectra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnsembleSums {
    /// Σ w cos(kx) cos(kz), the Bragg amplitude into the y mode.
    pub s1: f64,
    /// Σ w² cos²(kx) = N_eff.
    pub s2: f64,
    /// Σ w² cos²(kx) B², the incoherent Raman weight.
    pub raman: f64,
    pub n_atoms: usize,
}

impl EnsembleSums {
    pub fn compute(
        ensemble: &AtomEnsemble,
        _params: &SystemParams,
        scheme: Option<&LevelScheme>,
    ) -> Self {
        let k = ensemble.wave_number;
        let mut s1 = CompensatedSum::default();
        let mut s2 = CompensatedSum::default();
        let mut raman = CompensatedSum::default();
        for i in 0..ensemble.len() {
            let w = ensemble.radial_weight[i];
            let cx = (k * ensemble.positions_x[i]).cos();
            let cz = (k * ensemble.positions_z[i]).cos();
            s1.add(w * cx * cz);
            let mode = w * w * cx * cx;
            s2.add(mode);
            if let Some(s) = scheme {
                raman.add(mode * s.raman_weight_sq(i32::from(ensemble.mf_state[i])));
            }
        }
        Self {
            s1: s1.value(),
            s2: s2.value(),
            raman: raman.value(),
            n_atoms: ensemble.len(),
        }
    }
}

/// (iΔ_A − γ)(iΔ_C − κ) + g² S₂.
pub fn collective_denominator(
    params: &SystemParams,
    delta_a: f64,
    delta_c: f64,
    g: f64,
    s2: f64,
) -> Complex64 {
    Complex64::new(-params.gamma, delta_a) * Complex64::new(-params.kappa, delta_c)
        + Complex64::new(g * g * s2, 0.0)
}

fn amplitude_from_sums(
    sums: &EnsembleSums,
    params: &SystemParams,
    drive: &DriveParams,
) -> Result<Complex64> {
    let g = params.g();
    let d = collective_denominator(params, drive.delta_a, drive.delta_c, g, sums.s2);
    let d2 = d.norm_sqr();
    if d2 < DENOMINATOR_FLOOR {
        return Err(Error::Singular(d2));
    }
    Ok(Complex64::new(drive.eta * g * sums.s1, 0.0) / d)
}

/// Intracavity amplitude of the y-polarized mode for one configuration.
pub fn field_amplitude_y(
    ensemble: &AtomEnsemble,
    params: &SystemParams,
    drive: &DriveParams,
) -> Result<Complex64> {
    let sums = EnsembleSums::compute(ensemble, params, None);
    amplitude_from_sums(&sums, params, drive)
}

/// Per-Δ ensemble statistics of the cavity output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    pub mean_intensity: Vec<f64>,
    /// Unbiased sample variance of |α|² across realizations.
    pub var_intensity: Vec<f64>,
    pub mean_amplitude: Vec<Complex64>,
    /// Unbiased sample variance E|α − ᾱ|² across realizations.
    #[serde(default)]
    pub var_amplitude: Vec<f64>,
    pub n_realizations: usize,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Standard error of the mean amplitude at each grid point.
    pub fn amplitude_sem(&self) -> Vec<f64> {
        let n = self.n_realizations.max(1) as f64;
        self.var_amplitude.iter().map(|v| (v / n).sqrt()).collect()
    }

    /// Standard error of the mean intensity at each grid point.
    pub fn intensity_sem(&self) -> Vec<f64> {
        let n = self.n_realizations.max(1) as f64;
        self.var_intensity.iter().map(|v| (v / n).sqrt()).collect()
    }

    /// Index of the largest mean intensity with detuning of the given sign.
    pub fn peak_index(&self, positive: bool) -> Option<usize> {
        self.detunings
            .iter()
            .enumerate()
            .filter(|(_, &d)| if positive { d > 0.0 } else { d < 0.0 })
            .max_by(|(i, _), (j, _)| self.mean_intensity[*i].total_cmp(&self.mean_intensity[*j]))
            .map(|(i, _)| i)
    }
}

/// Samples `n_realizations` configurations and reduces each to its sums.
///
/// Realization `r` is drawn with `split_seed(seed, r)`; the output order
/// is the realization order regardless of thread scheduling.
pub fn sample_realizations(
    params: &SystemParams,
    n_atoms: usize,
    n_realizations: usize,
    seed: u64,
    sampler: &SamplerConfig,
    scheme: Option<&LevelScheme>,
) -> Result<Vec<EnsembleSums>> {
    (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let ens = sampler.sample(params, n_atoms, split_seed(seed, r as u64))?;
            Ok(EnsembleSums::compute(&ens, params, scheme))
        })
        .collect()
}

/// |α_y|² of every realization at one detuning.
pub fn realization_intensities(
    sums: &[EnsembleSums],
    params: &SystemParams,
    drive: &DriveParams,
) -> Result<Vec<f64>> {
    sums.iter()
        .map(|s| amplitude_from_sums(s, params, drive).map(|a| a.norm_sqr()))
        .collect()
}

/// Collects y-channel statistics over realizations already reduced to sums.
pub fn spectrum_from_sums(
    sums: &[EnsembleSums],
    params: &SystemParams,
    drive_template: &DriveParams,
    grid: &[f64],
) -> Result<SpectrumResult> {
    if sums.is_empty() {
        return Err(Error::invalid("at least one realization is required"));
    }
    let n = sums.len();
    let mut out = SpectrumResult {
        detunings: grid.to_vec(),
        mean_intensity: Vec::with_capacity(grid.len()),
        var_intensity: Vec::with_capacity(grid.len()),
        mean_amplitude: Vec::with_capacity(grid.len()),
        var_amplitude: Vec::with_capacity(grid.len()),
        n_realizations: n,
    };
    for &delta in grid {
        let drive = drive_template.at_detuning(delta);
        let amps = sums
            .iter()
            .map(|s| amplitude_from_sums(s, params, &drive))
            .collect::<Result<Vec<_>>>()?;
        let (mean_i, var_i) = mean_var(amps.iter().map(|a| a.norm_sqr()), n);
        let (mean_re, var_re) = mean_var(amps.iter().map(|a| a.re), n);
        let (mean_im, var_im) = mean_var(amps.iter().map(|a| a.im), n);
        out.mean_intensity.push(mean_i);
        out.var_intensity.push(var_i);
        out.mean_amplitude.push(Complex64::new(mean_re, mean_im));
        out.var_amplitude.push(var_re + var_im);
    }
    Ok(out)
}

/// Mean and unbiased variance (zero for a single sample).
pub fn mean_var(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().collect::<CompensatedSum>().value() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = values
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    (mean, ss / (nf - 1.0))
}

/// Monte Carlo y-channel spectrum over a detuning grid with Δ_A = Δ_C = Δ.
pub fn sweep_spectrum(
    params: &SystemParams,
    drive_template: &DriveParams,
    n_atoms: usize,
    grid: &[f64],
    n_realizations: usize,
    seed: u64,
    sampler: &SamplerConfig,
) -> Result<SpectrumResult> {
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations must be >= 1"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("detuning grid is empty"));
    }
    drive_template.validate()?;
    let sums = sample_realizations(params, n_atoms, n_realizations, seed, sampler, None)?;
    spectrum_from_sums(&sums, params, drive_template, grid)
}

/// Monte Carlo estimate of ⟨|Σ_a w_a cos(k x_a) cos(k z_a)|²⟩.
pub fn fluctuation_scaling_oracle(
    params: &SystemParams,
    n_atoms: usize,
    n_realizations: usize,
    seed: u64,
    sampler: &SamplerConfig,
) -> Result<f64> {
    if n_atoms == 0 {
        return Err(Error::invalid("fluctuation oracle needs N >= 1"));
    }
    if n_realizations < 100 {
        return Err(Error::invalid(format!(
            "fluctuation oracle needs >= 100 realizations, got {n_realizations}"
        )));
    }
    let sums = sample_realizations(params, n_atoms, n_realizations, seed, sampler, None)?;
    let total: CompensatedSum = sums.iter().map(|s| s.s1 * s.s1).collect();
    Ok(total.value() / n_realizations as f64)
}

/// Leading-order Lorentzian around one normal mode:
/// (η² N^(β−1)/8) / [(Δ + sign·√N_eff·g)² + ((κ+γ)/2)²].
///
/// `sign = +1` describes the peak at negative detuning.
#[allow(clippy::too_many_arguments)]
pub fn lorentzian_peak_model(
    delta: f64,
    params: &SystemParams,
    n_atoms: usize,
    n_eff: f64,
    eta: f64,
    beta: f64,
    sign: f64,
) -> f64 {
    let center = -sign.signum() * n_eff.sqrt() * params.g();
    let hwhm = params.rabi_peak_hwhm();
    let height = eta * eta * (n_atoms as f64).powf(beta - 1.0) / 8.0;
    height / ((delta - center).powi(2) + hwhm * hwhm)
}

/// (κ² + γ²) / (N_eff g²); the Lorentzian peak form needs this ≪ 1.
pub fn validate_lorentzian_regime(params: &SystemParams, n_eff: f64) -> f64 {
    let g = params.g();
    let small = (params.kappa.powi(2) + params.gamma.powi(2)) / (n_eff * g * g);
    if small >= LORENTZIAN_REGIME_WARN {
        log::warn!("Lorentzian peak approximation outside its regime: (κ²+γ²)/(N_eff g²) = {small:.3}");
    }
    small
}

/// Normalized transmission of a cavity-driven probe with the atoms
/// acting as a dispersive medium, scanned over Δ_C at fixed Δ_A.
///
/// Unity on the empty-cavity resonance; the atomic shift moves the
/// maximum to Δ_C ≈ N_eff g² Δ_A / (Δ_A² + γ²).
pub fn dispersive_transmission(
    sums: &EnsembleSums,
    params: &SystemParams,
    delta_a: f64,
    grid_delta_c: &[f64],
) -> Result<Vec<f64>> {
    let g = params.g();
    let atom = Complex64::new(-params.gamma, delta_a).norm_sqr();
    grid_delta_c
        .iter()
        .map(|&dc| {
            let d2 = collective_denominator(params, delta_a, dc, g, sums.s2).norm_sqr();
            if d2 < DENOMINATOR_FLOOR {
                return Err(Error::Singular(d2));
            }
            Ok(params.kappa * params.kappa * atom / d2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleKind, SamplerConfig};

    fn single_atom() -> AtomEnsemble {
        AtomEnsemble {
            positions_x: vec![0.0],
            positions_z: vec![0.0],
            radial_weight: vec![1.0],
            mf_state: vec![0],
            wave_number: SystemParams::default().k_probe(),
        }
    }

    #[test]
    fn empty_ensemble_has_no_field() {
        let p = SystemParams::default();
        let e = AtomEnsemble::empty(p.k_probe());
        let a = field_amplitude_y(&e, &p, &DriveParams::resonant(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(a, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_atom_on_resonance() {
        let p = SystemParams::default();
        let eta = 1e5;
        let a = field_amplitude_y(&single_atom(), &p, &DriveParams::resonant(eta, 0.0, 0.0))
            .unwrap();
        let g = p.g_max;
        let expected = eta * g / (p.gamma * p.kappa + g * g);
        assert!((a.re - expected).abs() <= 1e-15 * expected);
        assert_eq!(a.im, 0.0);
    }

    #[test]
    fn intensity_quadratic_in_eta() {
        let p = SystemParams::default();
        let e = SamplerConfig::default().sample(&p, 300, 4).unwrap();
        let d = DriveParams::resonant(1.0, mhz(7.0), 1e-6);
        let a1 = field_amplitude_y(&e, &p, &d).unwrap().norm_sqr();
        let a3 = field_amplitude_y(&e, &p, &DriveParams { eta: 3.0, ..d }).unwrap().norm_sqr();
        assert!((a3 / a1 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn power_rescaling_keeps_eta_squared_linear() {
        let d = DriveParams::resonant(2.0, 0.0, 10e-6).with_power(40e-6);
        assert!((d.eta - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_endpoints() {
        let g = default_grid();
        assert_eq!(g.len(), 101);
        assert!((g[0] + mhz(50.0)).abs() < 1e-6);
        assert!((g[100] - mhz(50.0)).abs() < 1e-6);
        assert!(g[50].abs() < 1e-6);
    }

    #[test]
    fn zero_atoms_zero_spectrum() {
        let p = SystemParams::default();
        let s = sweep_spectrum(
            &p,
            &DriveParams::resonant(1e6, 0.0, 0.0),
            0,
            &default_grid(),
            5,
            1,
            &SamplerConfig::default(),
        )
        .unwrap();
        assert!(s.mean_intensity.iter().all(|&x| x == 0.0));
        assert!(s.var_intensity.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let p = SystemParams::default();
        let d = DriveParams::resonant(1.0, 0.0, 0.0);
        let s = SamplerConfig::default();
        assert!(sweep_spectrum(&p, &d, 10, &[], 3, 0, &s).is_err());
        assert!(sweep_spectrum(&p, &d, 10, &[0.0], 0, 0, &s).is_err());
    }

    #[test]
    fn commensurate_has_no_fluctuations() {
        let p = SystemParams::default();
        let s = sweep_spectrum(
            &p,
            &DriveParams::resonant(1e6, 0.0, 0.0),
            100,
            &[0.0, mhz(3.3), mhz(10.0)],
            4,
            11,
            &SamplerConfig::new(EnsembleKind::Commensurate),
        )
        .unwrap();
        for i in 0..s.len() {
            let coherent = s.mean_amplitude[i].norm_sqr();
            assert!((coherent - s.mean_intensity[i]).abs() <= 1e-12 * s.mean_intensity[i]);
            assert!(s.var_intensity[i] <= 1e-20 * s.mean_intensity[i].powi(2));
        }
    }

    #[test]
    fn commensurate_peak_at_ten_g() {
        // N_eff = 100 → Δ = ±10 g, with g large enough to resolve the peaks
        let p = SystemParams::default().with_coupling(mhz(2.0));
        let e = SamplerConfig::new(EnsembleKind::Commensurate)
            .sample(&p, 100, 0)
            .unwrap();
        let step = mhz(0.01);
        let grid = detuning_grid(mhz(30.0), 6001);
        let best = grid
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let ia = field_amplitude_y(&e, &p, &DriveParams::resonant(1.0, a, 0.0))
                    .unwrap()
                    .norm_sqr();
                let ib = field_amplitude_y(&e, &p, &DriveParams::resonant(1.0, b, 0.0))
                    .unwrap()
                    .norm_sqr();
                ia.total_cmp(&ib)
            })
            .unwrap();
        // exact maximum sits at sqrt(100 g² − (κ²+γ²)/2), the scan must find it
        let exact = (100.0 * p.g().powi(2) - (p.kappa.powi(2) + p.gamma.powi(2)) / 2.0).sqrt();
        assert!((best.abs() - exact).abs() <= step);
        // and the leading-order law ±10 g is within one peak width of it
        assert!((best.abs() - 10.0 * p.g()).abs() < p.rabi_peak_hwhm());
    }

    #[test]
    fn regime_parameter() {
        let p = SystemParams::default();
        let small = validate_lorentzian_regime(&p, 5000.0);
        assert!((small - 25.0 / (5000.0 * 0.1089)).abs() < 1e-12);
        assert!((validate_lorentzian_regime(&p, 100.0) - 2.2957).abs() < 1e-3);
        let mut zero = p;
        zero.kappa = 0.0;
        zero.gamma = 0.0;
        assert_eq!(validate_lorentzian_regime(&zero, 5000.0), 0.0);
    }

    #[test]
    fn lorentzian_model_values() {
        let p = SystemParams::default().with_coupling(mhz(0.26));
        let n_eff: f64 = 5000.0;
        let eta = 2.0e6;
        let center = n_eff.sqrt() * p.g();
        let hwhm = p.rabi_peak_hwhm();
        let peak = lorentzian_peak_model(-center, &p, 10_000, n_eff, eta, 1.0, 1.0);
        assert!((peak - eta * eta / 8.0 / (hwhm * hwhm)).abs() < 1e-12 * peak);
        // half maximum one HWHM away
        let half = lorentzian_peak_model(-center + hwhm, &p, 10_000, n_eff, eta, 1.0, 1.0);
        assert!((half / peak - 0.5).abs() < 1e-12);
        assert!((hwhm - mhz(3.5)).abs() < 1e-6);
        // β = 1 removes the N dependence
        let other = lorentzian_peak_model(-center, &p, 77, n_eff, eta, 1.0, 1.0);
        assert_eq!(peak, other);
        // mirrored peak
        let pos = lorentzian_peak_model(center, &p, 10_000, n_eff, eta, 1.0, -1.0);
        assert_eq!(pos, peak);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn dispersive_peak_shift() {
        let p = SystemParams::default();
        let sums = EnsembleSums {
            s2: 5000.0,
            ..Default::default()
        };
        let delta_a = mhz(-90.0);
        let grid = detuning_grid(mhz(20.0), 4001);
        let t = dispersive_transmission(&sums, &p, delta_a, &grid).unwrap();
        let i = (0..t.len()).max_by(|&a, &b| t[a].total_cmp(&t[b])).unwrap();
        let expected = 5000.0 * p.g_max.powi(2) * delta_a / (delta_a.powi(2) + p.gamma.powi(2));
        assert!((grid[i] - expected).abs() <= mhz(0.01));
        let empty = dispersive_transmission(&EnsembleSums::default(), &p, delta_a, &[0.0]).unwrap();
        assert!((empty[0] - 1.0).abs() < 1e-12);
    }
}

//! Scenario runner: turns a [`ScenarioConfig`] into CSV tables, JSON fit
//! summaries and a run manifest.
//!
//! Every random draw is derived from the config seed, so a rerun of the
//! same config, or of the manifest it produced, rewrites identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    calibrate_atom_number, extract_rabi_peaks, fit_lorentzian_sum, fit_parabola_geff,
    fit_power_law_beta, FitOptions, FitResult, ParabolaFit, PowerLawFit, RabiPeaks,
    ScalingConvention, SpectrumData,
};
use crate::config::{ScenarioConfig, ScenarioName};
use crate::detection::{
    photon_rate_from_intensity, predicted_peak_rate_per_power, sample_compound_counts,
    write_count_records, Channel, CountRecord, DetectionChain,
};
use crate::ensemble::{split_seed, EnsembleKind, SamplerConfig};
use crate::error::{Error, Result};
use crate::multilevel::{clebsch_gordan_table, raman_spectrum_from_sums, LevelScheme};
use crate::params::{hz_to_rad, rad_to_hz, SystemParams};
use crate::scattering::{
    detuning_grid, dispersive_transmission, fluctuation_scaling_oracle, mean_var,
    sample_realizations, spectrum_from_sums, DriveParams, EnsembleSums, SpectrumResult,
};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Stream offset separating shot-noise draws from configuration draws.
const COUNT_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub dataset: String,
    pub seed: u64,
}

/// What a run consumed and produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub crate_version: String,
    pub scenario: ScenarioName,
    /// The resolved config, without its output directory.
    pub config: ScenarioConfig,
    pub seeds: Vec<SeedRecord>,
    pub outputs: Vec<String>,
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    params: SystemParams,
    sampler: SamplerConfig,
    drive: DriveParams,
    chain: DetectionChain,
    scheme: LevelScheme,
    grid: Vec<f64>,
    out: PathBuf,
    outputs: Vec<String>,
    seeds: Vec<SeedRecord>,
}

fn num(x: f64) -> String {
    x.to_string()
}

fn fit_to_hz(fit: &FitResult) -> FitResult {
    let scale: Vec<f64> = fit
        .names
        .iter()
        .map(|n| {
            if n.starts_with("center") || n.starts_with("hwhm") {
                1.0 / (2.0 * std::f64::consts::PI)
            } else {
                1.0
            }
        })
        .collect();
    let mut out = fit.clone();
    for (i, s) in scale.iter().enumerate() {
        out.parameters[i] *= s;
        for (j, t) in scale.iter().enumerate() {
            out.covariance[i][j] *= s * t;
        }
    }
    out.names = fit
        .names
        .iter()
        .map(|n| {
            if n.starts_with("center") || n.starts_with("hwhm") {
                format!("{n}_hz")
            } else {
                n.clone()
            }
        })
        .collect();
    out
}

#[derive(Serialize)]
struct PeaksHz {
    lower_center_hz: f64,
    lower_center_err_hz: f64,
    lower_hwhm_hz: f64,
    lower_height: f64,
    upper_center_hz: f64,
    upper_center_err_hz: f64,
    upper_hwhm_hz: f64,
    upper_height: f64,
    half_splitting_hz: f64,
}

impl From<&RabiPeaks> for PeaksHz {
    fn from(p: &RabiPeaks) -> Self {
        Self {
            lower_center_hz: rad_to_hz(p.lower.center),
            lower_center_err_hz: rad_to_hz(p.lower.center_err),
            lower_hwhm_hz: rad_to_hz(p.lower.hwhm),
            lower_height: p.lower.height,
            upper_center_hz: rad_to_hz(p.upper.center),
            upper_center_err_hz: rad_to_hz(p.upper.center_err),
            upper_hwhm_hz: rad_to_hz(p.upper.hwhm),
            upper_height: p.upper.height,
            half_splitting_hz: rad_to_hz(p.half_splitting()),
        }
    }
}

#[derive(Serialize)]
struct DatasetFit {
    n_atoms: usize,
    n_eff: f64,
    fit: Option<FitResult>,
    peaks: Option<PeaksHz>,
    error: Option<String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ScenarioConfig, out: &Path) -> Result<Self> {
        cfg.validate()?;
        fs::create_dir_all(out)?;
        let params = cfg.system_params()?;
        Ok(Self {
            cfg,
            sampler: cfg.sampler_config()?,
            drive: cfg.drive_params(),
            chain: cfg.detection_chain(),
            scheme: clebsch_gordan_table(params.gamma),
            grid: cfg.grid(),
            params,
            out: out.to_path_buf(),
            outputs: Vec::new(),
            seeds: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.outputs.push(name.to_owned());
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let file = self.create(name)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut file = self.create(name)?;
        serde_json::to_writer_pretty(&mut file, value)?;
        writeln!(file)?;
        file.flush()?;
        Ok(())
    }

    fn dataset_seed(&mut self, label: String, index: usize) -> u64 {
        let seed = split_seed(self.cfg.seed, index as u64);
        self.seeds.push(SeedRecord {
            dataset: label,
            seed,
        });
        seed
    }

    fn realizations(&self, n_atoms: usize, seed: u64) -> Result<Vec<EnsembleSums>> {
        sample_realizations(
            &self.params,
            n_atoms,
            self.cfg.realizations,
            seed,
            &self.sampler,
            Some(&self.scheme),
        )
    }

    /// Per-realization y intensities at every grid point.
    fn intensity_table(&self, sums: &[EnsembleSums], drive: &DriveParams) -> Result<Vec<Vec<f64>>> {
        self.grid
            .iter()
            .map(|&d| crate::scattering::realization_intensities(sums, &self.params, &drive.at_detuning(d)))
            .collect()
    }

    /// One compound-Poisson shot per realization at each grid point.
    fn count_records(
        &self,
        table: &[Vec<f64>],
        scale: f64,
        channel: Channel,
        seed: u64,
    ) -> Result<Vec<CountRecord>> {
        table
            .iter()
            .zip(&self.grid)
            .enumerate()
            .map(|(k, (row, &delta))| {
                let rates: Vec<f64> = row
                    .iter()
                    .map(|&i| photon_rate_from_intensity(i * scale, &self.params, &self.chain))
                    .collect();
                sample_compound_counts(
                    &rates,
                    &self.chain,
                    split_seed(seed, COUNT_STREAM + k as u64),
                    channel,
                    delta,
                )
            })
            .collect()
    }

    fn fit_peaks(&self, spec: &SpectrumResult) -> Result<(FitResult, RabiPeaks)> {
        let data = SpectrumData {
            x: spec.detunings.clone(),
            y: spec.mean_intensity.clone(),
            sigma: None,
        };
        let opts = FitOptions::new(self.params.kappa + self.params.gamma).uniform();
        // a slowly drifting weak component is reported, not fatal
        let fit = match fit_lorentzian_sum(&data, self.cfg.n_components, None, &opts) {
            Err(Error::NonConvergence { best, .. }) => *best,
            other => other?,
        };
        let peaks = extract_rabi_peaks(&fit)?;
        Ok((fit, peaks))
    }

    fn background(&self) -> f64 {
        self.chain.background_rate + self.chain.dark_rate
    }

    fn finish(self) -> Result<RunManifest> {
        let mut config = self.cfg.clone();
        config.output_dir = None;
        let mut outputs = self.outputs;
        outputs.sort();
        let manifest = RunManifest {
            manifest_version: MANIFEST_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_owned(),
            scenario: config.scenario,
            config,
            seeds: self.seeds,
            outputs,
        };
        let mut file = BufWriter::new(File::create(self.out.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(&mut file, &manifest)?;
        writeln!(file)?;
        file.flush()?;
        Ok(manifest)
    }
}

fn n_eff_mean(sums: &[EnsembleSums]) -> f64 {
    mean_var(sums.iter().map(|s| s.s2), sums.len()).0
}

fn fit_outcome<T>(label: &str, r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (Error::UnresolvedSplitting(_)
        | Error::NonConvergence { .. }
        | Error::IllConditioned(_)
        | Error::DegenerateData(_))) => {
            log::warn!("{label}: {e}");
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(e),
    }
}

/// Runs `cfg` and writes its outputs plus `manifest.json` into `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunManifest> {
    let mut run = Run::new(cfg, out)?;
    match cfg.scenario {
        ScenarioName::VrsWaterfall => vrs_waterfall(&mut run)?,
        ScenarioName::PowerSweep => power_sweep(&mut run)?,
        ScenarioName::Scaling => scaling(&mut run)?,
        ScenarioName::Raman => raman(&mut run)?,
        ScenarioName::Calibrate => calibrate(&mut run)?,
        ScenarioName::OracleBeta => oracle_beta(&mut run)?,
        ScenarioName::CgDump => {
            let scheme = run.scheme.clone();
            let file = run.create("cg_table.csv")?;
            scheme.write_csv(file)?;
        }
    }
    run.finish()
}

fn vrs_waterfall(run: &mut Run) -> Result<()> {
    let mut summary = Vec::new();
    let mut fits = Vec::new();
    let mut parabola_points = Vec::new();
    for (i, &n) in run.cfg.atom_numbers.clone().iter().enumerate() {
        let seed = run.dataset_seed(format!("N={n}"), i);
        let sums = run.realizations(n, seed)?;
        let n_eff = n_eff_mean(&sums);
        let spec = spectrum_from_sums(&sums, &run.params, &run.drive, &run.grid)?;
        let table = run.intensity_table(&sums, &run.drive)?;
        let records = run.count_records(&table, 1.0, Channel::Y, seed)?;

        let sem = spec.intensity_sem();
        let rows: Vec<Vec<String>> = (0..spec.len())
            .map(|k| {
                let ln = records[k].lognormal;
                vec![
                    num(rad_to_hz(spec.detunings[k])),
                    num(spec.mean_intensity[k]),
                    num(sem[k]),
                    num(photon_rate_from_intensity(spec.mean_intensity[k], &run.params, &run.chain)),
                    num(ln.map_or(f64::NAN, |l| l.mean_rate)),
                    num(ln.map_or(f64::NAN, |l| l.error_bar)),
                ]
            })
            .collect();
        run.write_csv(
            &format!("vrs_N{n}.csv"),
            &[
                "delta_Hz",
                "intensity_mean",
                "intensity_sem",
                "rate_cps",
                "lognormal_rate_cps",
                "lognormal_err_cps",
            ],
            &rows,
        )?;
        let file = run.create(&format!("counts_N{n}.csv"))?;
        write_count_records(&records, file)?;

        let outcome = fit_outcome(&format!("N={n}"), run.fit_peaks(&spec))?;
        let (fit, peaks, error) = match outcome {
            Ok((fit, peaks)) => {
                if !fit.converged {
                    log::warn!("N={n}: fit not converged, using best iterate");
                }
                parabola_points.push((n_eff, peaks.half_splitting()));
                (Some(fit), Some(peaks), None)
            }
            Err(e) => (None, None, Some(e)),
        };
        summary.push(vec![
            n.to_string(),
            num(n_eff),
            num(peaks.map_or(f64::NAN, |p| rad_to_hz(p.lower.center))),
            num(peaks.map_or(f64::NAN, |p| rad_to_hz(p.upper.center))),
            num(peaks.map_or(f64::NAN, |p| rad_to_hz(p.half_splitting()))),
            num(peaks.map_or(f64::NAN, |p| rad_to_hz(p.lower.hwhm))),
            num(peaks.map_or(f64::NAN, |p| rad_to_hz(p.upper.hwhm))),
            seed.to_string(),
        ]);
        fits.push(DatasetFit {
            n_atoms: n,
            n_eff,
            fit: fit.as_ref().map(fit_to_hz),
            peaks: peaks.as_ref().map(PeaksHz::from),
            error,
        });
    }
    run.write_csv(
        "vrs_summary.csv",
        &[
            "n_atoms",
            "n_eff",
            "lower_center_Hz",
            "upper_center_Hz",
            "half_splitting_Hz",
            "lower_hwhm_Hz",
            "upper_hwhm_Hz",
            "seed",
        ],
        &summary,
    )?;
    run.write_json("vrs_fits.json", &fits)?;

    #[derive(Serialize)]
    struct ParabolaHz {
        g_eff_hz: f64,
        g_eff_err_hz: f64,
        n_points: usize,
        g_model_hz: f64,
    }
    let g_model_hz = rad_to_hz(run.params.g());
    let parabola = fit_outcome("parabola", fit_parabola_geff(&parabola_points))?;
    let value = match parabola {
        Ok(ParabolaFit {
            g_eff,
            g_eff_err,
            n_points,
        }) => serde_json::to_value(ParabolaHz {
            g_eff_hz: rad_to_hz(g_eff),
            g_eff_err_hz: rad_to_hz(g_eff_err),
            n_points,
            g_model_hz,
        })?,
        Err(e) => serde_json::json!({ "error": e, "g_model_hz": g_model_hz }),
    };
    run.write_json("parabola_fit.json", &value)
}

fn power_sweep(run: &mut Run) -> Result<()> {
    let n = run.cfg.atom_numbers[0];
    let seed = run.dataset_seed(format!("N={n}"), 0);
    let sums = run.realizations(n, seed)?;
    let table = run.intensity_table(&sums, &run.drive)?;
    let raman_rows: Vec<Vec<f64>> = run
        .grid
        .iter()
        .map(|&d| {
            sums.iter()
                .map(|s| {
                    raman_spectrum_from_sums(std::slice::from_ref(s), &run.params, &run.drive, &[d])
                        .map(|r| r.mean_intensity[0])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let p_ref = run.cfg.drive.power_uw;
    let bg = run.background();
    let saturation = run.cfg.saturation_power_uw.unwrap_or(f64::INFINITY);

    let mut summary = Vec::new();
    let mut fits = Vec::new();
    for (j, &p) in run.cfg.powers_uw.clone().iter().enumerate() {
        let scale = p / p_ref;
        let stream = split_seed(seed, j as u64);
        let y = run.count_records(&table, scale, Channel::Y, stream)?;
        let z = run.count_records(&raman_rows, scale, Channel::Z, split_seed(stream, 1))?;
        // sample mean and its standard error over the runs
        let per_uw = |r: &CountRecord| {
            let (m, v) = r.count_moments();
            let sem = (v / r.counts.len() as f64).sqrt() / r.exposure;
            ((m / r.exposure - bg) / p, sem / p)
        };
        let y_per_uw: Vec<(f64, f64)> = y.iter().map(per_uw).collect();
        let z_per_uw: Vec<(f64, f64)> = z.iter().map(per_uw).collect();
        let rows: Vec<Vec<String>> = (0..run.grid.len())
            .map(|k| {
                let (yr, ye) = y_per_uw[k];
                let (zr, ze) = z_per_uw[k];
                vec![num(rad_to_hz(run.grid[k])), num(yr), num(ye), num(zr), num(ze)]
            })
            .collect();
        run.write_csv(
            &format!("power_{p}uW.csv"),
            &[
                "delta_Hz",
                "y_rate_per_uW",
                "y_err_per_uW",
                "z_rate_per_uW",
                "z_err_per_uW",
            ],
            &rows,
        )?;
        let mut records = y;
        records.extend(z);
        let file = run.create(&format!("counts_{p}uW.csv"))?;
        write_count_records(&records, file)?;

        let saturated = p >= saturation;
        let spec = SpectrumResult {
            detunings: run.grid.clone(),
            mean_intensity: y_per_uw.iter().map(|v| v.0).collect(),
            var_intensity: vec![0.0; run.grid.len()],
            mean_amplitude: vec![Default::default(); run.grid.len()],
            var_amplitude: vec![0.0; run.grid.len()],
            n_realizations: 1,
        };
        let (peaks, error) = if saturated {
            (None, Some("saturated, excluded from fit".to_owned()))
        } else {
            match fit_outcome(&format!("P={p}uW"), run.fit_peaks(&spec))? {
                Ok((fit, peaks)) => {
                    let note = (!fit.converged).then(|| "fit not converged, best iterate".to_owned());
                    fits.push((p, fit_to_hz(&fit)));
                    (Some(peaks), note)
                }
                Err(e) => (None, Some(e)),
            }
        };
        summary.push(vec![
            num(p),
            saturated.to_string(),
            num(peaks.map_or(f64::NAN, |q| q.lower.height)),
            num(peaks.map_or(f64::NAN, |q| q.upper.height)),
            num(peaks.map_or(f64::NAN, |q| rad_to_hz(q.half_splitting()))),
            error.unwrap_or_default(),
        ]);
    }
    run.write_csv(
        "power_sweep_summary.csv",
        &[
            "power_uW",
            "saturated",
            "y_peak_lower_per_uW",
            "y_peak_upper_per_uW",
            "half_splitting_Hz",
            "note",
        ],
        &summary,
    )?;
    let fits: Vec<serde_json::Value> = fits
        .into_iter()
        .map(|(p, f)| serde_json::json!({ "power_uw": p, "fit": f }))
        .collect();
    let value = serde_json::json!({
        "n_atoms": n,
        "n_eff": n_eff_mean(&sums),
        "predicted_peak_rate_per_uw": predicted_peak_rate_per_power(&run.params, &run.chain),
        "fits": fits,
    });
    run.write_json("power_sweep_fits.json", &value)
}

fn scaling(run: &mut Run) -> Result<()> {
    let mut rows = Vec::new();
    let mut raw_points = Vec::new();
    let mut raw_sigma = Vec::new();
    let mut peak_points = Vec::new();
    let mut peak_sigma = Vec::new();
    let eta2 = run.drive.eta * run.drive.eta;
    for (i, &n) in run.cfg.atom_numbers.clone().iter().enumerate() {
        let seed = run.dataset_seed(format!("N={n}"), i);
        let sums = run.realizations(n, seed)?;
        let r = sums.len();
        let (s1_mean, s1_var) = mean_var(sums.iter().map(|s| s.s1 * s.s1), r);
        let s1_sem = (s1_var / r as f64).sqrt();
        let spec = spectrum_from_sums(&sums, &run.params, &run.drive, &run.grid)?;
        let raman = raman_spectrum_from_sums(&sums, &run.params, &run.drive, &run.grid)?;
        let sem = spec.intensity_sem();
        let k = spec.peak_index(true).unwrap_or(0);
        let kz = raman.peak_index(true).unwrap_or(0);
        let y_peak = spec.mean_intensity[k] / eta2;
        let y_sem = sem[k] / eta2;
        let z_peak = raman.mean_intensity[kz] / eta2;
        raw_points.push((n as f64, s1_mean));
        raw_sigma.push(s1_sem);
        peak_points.push((n as f64, y_peak));
        peak_sigma.push(y_sem);
        rows.push(vec![
            n.to_string(),
            num(n_eff_mean(&sums)),
            num(s1_mean),
            num(s1_sem),
            num(rad_to_hz(spec.detunings[k])),
            num(y_peak),
            num(y_sem),
            num(z_peak),
            seed.to_string(),
        ]);
    }
    run.write_csv(
        "scaling.csv",
        &[
            "n_atoms",
            "n_eff",
            "s1_sq_mean",
            "s1_sq_sem",
            "peak_delta_Hz",
            "y_peak_per_drive",
            "y_peak_sem",
            "z_peak_per_drive",
            "seed",
        ],
        &rows,
    )?;
    let fit = |pts: &[(f64, f64)], sig: &[f64], conv| -> Result<serde_json::Value> {
        let sig = sig.iter().all(|&s| s > 0.0).then_some(sig);
        Ok(match fit_outcome("power law", fit_power_law_beta(pts, sig, conv))? {
            Ok(f) => serde_json::to_value::<PowerLawFit>(f)?,
            Err(e) => serde_json::json!({ "error": e }),
        })
    };
    let value = serde_json::json!({
        "raw_statistic": fit(&raw_points, &raw_sigma, ScalingConvention::RawStatistic)?,
        "peak_rate_per_drive": fit(&peak_points, &peak_sigma, ScalingConvention::PeakRatePerDrive)?,
    });
    run.write_json("scaling_fit.json", &value)
}

fn raman(run: &mut Run) -> Result<()> {
    let mut peaks = Vec::new();
    for (i, &n) in run.cfg.atom_numbers.clone().iter().enumerate() {
        let seed = run.dataset_seed(format!("N={n}"), i);
        let sums = run.realizations(n, seed)?;
        let y = spectrum_from_sums(&sums, &run.params, &run.drive, &run.grid)?;
        let z = raman_spectrum_from_sums(&sums, &run.params, &run.drive, &run.grid)?;
        let rate = |i: f64| photon_rate_from_intensity(i, &run.params, &run.chain);
        let rows: Vec<Vec<String>> = (0..y.len())
            .map(|k| {
                vec![
                    num(rad_to_hz(y.detunings[k])),
                    num(y.mean_intensity[k]),
                    num(z.mean_intensity[k]),
                    num(rate(y.mean_intensity[k])),
                    num(rate(z.mean_intensity[k])),
                ]
            })
            .collect();
        run.write_csv(
            &format!("raman_N{n}.csv"),
            &["delta_Hz", "y_intensity", "z_intensity", "y_rate_cps", "z_rate_cps"],
            &rows,
        )?;
        let at = |s: &SpectrumResult, pos: bool| {
            s.peak_index(pos).map_or(f64::NAN, |k| rad_to_hz(s.detunings[k]))
        };
        let n_eff = n_eff_mean(&sums);
        peaks.push(serde_json::json!({
            "n_atoms": n,
            "n_eff": n_eff,
            "predicted_peak_hz": rad_to_hz(n_eff.sqrt() * run.params.g()),
            "y_lower_peak_hz": at(&y, false),
            "y_upper_peak_hz": at(&y, true),
            "z_lower_peak_hz": at(&z, false),
            "z_upper_peak_hz": at(&z, true),
            "seed": seed,
        }));
    }
    run.write_json("raman_peaks.json", &peaks)
}

fn calibrate(run: &mut Run) -> Result<()> {
    let cal = run.cfg.calibration.clone();
    let delta_a = hz_to_rad(cal.delta_a_hz);
    let scan = detuning_grid(hz_to_rad(cal.scan_half_span_hz), cal.scan_points);
    let opts = FitOptions::new(2.0 * run.params.kappa).uniform();
    let mut rows = Vec::new();
    for (i, &n) in run.cfg.atom_numbers.clone().iter().enumerate() {
        let seed = run.dataset_seed(format!("N={n}"), i);
        let sums = run.realizations(n, seed)?;
        for (r, s) in sums.iter().enumerate() {
            let t = dispersive_transmission(s, &run.params, delta_a, &scan)?;
            let data = SpectrumData {
                x: scan.clone(),
                y: t,
                sigma: None,
            };
            let fit = fit_lorentzian_sum(&data, 1, None, &opts)?;
            let shift = fit.parameters[1];
            let n_cal = calibrate_atom_number(shift, &run.params, delta_a)?;
            rows.push(vec![
                n.to_string(),
                r.to_string(),
                num(s.s2),
                num(rad_to_hz(shift)),
                num(n_cal),
                num(n_cal / s.s2 - 1.0),
            ]);
        }
    }
    run.write_csv(
        "calibration.csv",
        &[
            "n_atoms",
            "realization",
            "n_eff_true",
            "shift_Hz",
            "n_eff_calibrated",
            "relative_error",
        ],
        &rows,
    )
}

fn oracle_beta(run: &mut Run) -> Result<()> {
    let mut rows = Vec::new();
    let mut fits = serde_json::Map::new();
    for (j, kind) in [EnsembleKind::Uniform, EnsembleKind::Commensurate, run.sampler.kind]
        .into_iter()
        .enumerate()
    {
        if j == 2 && kind != EnsembleKind::Lattice {
            continue;
        }
        let label = serde_json::to_value(kind)?
            .as_str()
            .unwrap_or_default()
            .to_owned();
        let sampler = SamplerConfig {
            kind,
            ..run.sampler.clone()
        };
        let mut points = Vec::new();
        for (i, &n) in run.cfg.atom_numbers.clone().iter().enumerate() {
            let seed = run.dataset_seed(format!("{label} N={n}"), j * 1000 + i);
            let value =
                fluctuation_scaling_oracle(&run.params, n, run.cfg.realizations, seed, &sampler)?;
            points.push((n as f64, value));
            rows.push(vec![label.clone(), n.to_string(), num(value), seed.to_string()]);
        }
        let fit = match fit_outcome(
            &label,
            fit_power_law_beta(&points, None, ScalingConvention::RawStatistic),
        )? {
            Ok(f) => serde_json::to_value(f)?,
            Err(e) => serde_json::json!({ "error": e }),
        };
        fits.insert(label, fit);
    }
    run.write_csv(
        "oracle_beta.csv",
        &["kind", "n_atoms", "s1_sq_mean", "seed"],
        &rows,
    )?;
    run.write_json("oracle_beta.json", &fits)
}

//! Multi-Lorentzian decomposition of Rabi-split spectra.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{self, Problem};
use super::FitResult;
use crate::detection::CountRecord;
use crate::error::{Error, Result};
use crate::scattering::SpectrumResult;

pub const MAX_COMPONENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzComponent {
    /// Peak height above the offset.
    pub amplitude: f64,
    pub center: f64,
    pub hwhm: f64,
}

impl LorentzComponent {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.hwhm;
        self.amplitude / (1.0 + u * u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianSum {
    pub components: Vec<LorentzComponent>,
    pub offset: f64,
}

impl LorentzianSum {
    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.components.iter().map(|c| c.eval(x)).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.components.len() > MAX_COMPONENTS {
            return Err(Error::invalid(format!(
                "component count must be 1..={MAX_COMPONENTS}, got {}",
                self.components.len()
            )));
        }
        for c in &self.components {
            if !(c.amplitude >= 0.0 && c.hwhm > 0.0 && c.center.is_finite()) {
                return Err(Error::invalid(format!("invalid Lorentzian component {c:?}")));
            }
        }
        if !(self.offset >= 0.0) {
            return Err(Error::invalid("offset must be >= 0"));
        }
        Ok(())
    }

    fn to_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| [c.amplitude, c.center, c.hwhm])
            .collect();
        p.push(self.offset);
        p
    }

    fn from_params(p: &[f64]) -> Self {
        let n = (p.len() - 1) / 3;
        Self {
            components: (0..n)
                .map(|i| LorentzComponent {
                    amplitude: p[3 * i],
                    center: p[3 * i + 1],
                    hwhm: p[3 * i + 2],
                })
                .collect(),
            offset: p[3 * n],
        }
    }

    pub fn parameter_names(n_components: usize) -> Vec<String> {
        let mut names: Vec<String> = (0..n_components)
            .flat_map(|i| {
                [
                    format!("amplitude_{i}"),
                    format!("center_{i}"),
                    format!("hwhm_{i}"),
                ]
            })
            .collect();
        names.push("offset".into());
        names
    }
}

/// Spectrum samples to fit: abscissa, values and optional 1σ errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl From<&SpectrumResult> for SpectrumData {
    fn from(s: &SpectrumResult) -> Self {
        let sigma = (s.n_realizations > 1).then(|| s.intensity_sem());
        Self {
            x: s.detunings.clone(),
            y: s.mean_intensity.clone(),
            sigma,
        }
    }
}

impl SpectrumData {
    /// Per-detuning count records as a rate spectrum, using the log-normal
    /// mean and error bar where available and the sample mean otherwise.
    pub fn from_count_records(records: &[CountRecord]) -> Self {
        let mut sigma = Vec::with_capacity(records.len());
        let mut have_sigma = true;
        let y = records
            .iter()
            .map(|r| match r.lognormal {
                Some(est) => {
                    sigma.push(est.error_bar);
                    est.mean_rate
                }
                None => {
                    have_sigma = false;
                    r.mean_rate
                }
            })
            .collect();
        Self {
            x: records.iter().map(|r| r.delta).collect(),
            y,
            sigma: have_sigma.then_some(sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Inverse variance when errors are supplied, uniform otherwise.
    #[default]
    InverseVariance,
    Uniform,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub weighting: Weighting,
    /// Sum of the two linewidths (κ+γ), the scale of the auto-initializer.
    pub linewidth_sum: f64,
    pub lm: lm::Options,
}

impl FitOptions {
    pub fn new(linewidth_sum: f64) -> Self {
        Self {
            weighting: Weighting::default(),
            linewidth_sum,
            lm: lm::Options::default(),
        }
    }

    pub fn uniform(mut self) -> Self {
        self.weighting = Weighting::Uniform;
        self
    }
}

fn local_maxima(y: &[f64]) -> Vec<usize> {
    (0..y.len())
        .filter(|&i| {
            let left = i == 0 || y[i] >= y[i - 1];
            let right = i + 1 == y.len() || y[i] > y[i + 1];
            left && right
        })
        .collect()
}

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

/// Deterministic starting point for a fit.
///
/// Offset at the 10th percentile of the data. The outer components sit at
/// the highest local maxima beyond |Δ| > (κ+γ) on each side (falling back
/// to the highest sample on that side); inner components start at
/// ±(κ+γ)/2 with a tenth of the mean outer amplitude. All widths start at
/// (κ+γ)/2. A single component starts at the global maximum.
pub fn auto_initialize(data: &SpectrumData, n_components: usize, linewidth_sum: f64) -> LorentzianSum {
    let offset = percentile(&data.y, 0.1).max(0.0);
    let width = linewidth_sum / 2.0;
    let peak_at = |i: usize| LorentzComponent {
        amplitude: (data.y[i] - offset).max(0.0),
        center: data.x[i],
        hwhm: width,
    };
    let global = (0..data.y.len())
        .max_by(|&a, &b| data.y[a].total_cmp(&data.y[b]))
        .unwrap_or(0);
    if n_components == 1 {
        return LorentzianSum {
            components: vec![peak_at(global)],
            offset,
        };
    }

    let maxima = local_maxima(&data.y);
    let best_on_side = |positive: bool| -> usize {
        let side = |i: &usize| {
            if positive {
                data.x[*i] > 0.0
            } else {
                data.x[*i] < 0.0
            }
        };
        let by_height = |a: &usize, b: &usize| data.y[*a].total_cmp(&data.y[*b]);
        maxima
            .iter()
            .copied()
            .filter(|i| side(i) && data.x[*i].abs() > linewidth_sum)
            .max_by(by_height)
            .or_else(|| (0..data.y.len()).filter(side).max_by(by_height))
            .unwrap_or(global)
    };
    let lower = peak_at(best_on_side(false));
    let upper = peak_at(best_on_side(true));
    let inner_amp = 0.05 * (lower.amplitude + upper.amplitude);
    let inner = |center: f64| LorentzComponent {
        amplitude: inner_amp,
        center,
        hwhm: width,
    };
    let mut components = vec![lower, upper];
    match n_components {
        3 => components.push(inner(0.0)),
        4 => {
            components.push(inner(-width));
            components.push(inner(width));
        }
        _ => {}
    }
    LorentzianSum { components, offset }
}

struct SumProblem<'a> {
    n_params: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    w: &'a [f64],
}

impl Problem for SumProblem<'_> {
    fn n_params(&self) -> usize {
        self.n_params
    }
    fn n_points(&self) -> usize {
        self.x.len()
    }
    fn model(&self, p: &[f64], out: &mut [f64]) {
        let n = (p.len() - 1) / 3;
        for (o, &x) in out.iter_mut().zip(&self.x) {
            let mut v = p[3 * n];
            for i in 0..n {
                let u = (x - p[3 * i + 1]) / p[3 * i + 2];
                v += p[3 * i] / (1.0 + u * u);
            }
            *o = v;
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let n = (p.len() - 1) / 3;
        for (row, &x) in self.x.iter().enumerate() {
            for i in 0..n {
                let (a, c, w) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
                let u = (x - c) / w;
                let l = 1.0 / (1.0 + u * u);
                out[(row, 3 * i)] = l;
                out[(row, 3 * i + 1)] = 2.0 * a * l * l * u / w;
                out[(row, 3 * i + 2)] = 2.0 * a * l * l * u * u / w;
            }
            out[(row, 3 * n)] = 1.0;
        }
    }
    fn data(&self) -> &[f64] {
        &self.y
    }
    fn weights(&self) -> &[f64] {
        self.w
    }
}

/// Weighted least-squares fit of `offset + Σ Lorentzians`.
///
/// Internally works in units of max|x| and max|y|; results are returned
/// in the data's units. The covariance is scaled by the reduced χ² when
/// the weights are uniform and taken as absolute under inverse-variance
/// weighting.
pub fn fit_lorentzian_sum(
    data: &SpectrumData,
    n_components: usize,
    init: Option<&LorentzianSum>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if n_components == 0 || n_components > MAX_COMPONENTS {
        return Err(Error::invalid(format!(
            "n_components must be 1..={MAX_COMPONENTS}, got {n_components}"
        )));
    }
    let n = data.x.len();
    if data.y.len() != n {
        return Err(Error::invalid("x and y lengths differ"));
    }
    let n_params = 3 * n_components + 1;
    if n < n_params {
        return Err(Error::invalid(format!(
            "{n} points cannot constrain {n_params} parameters"
        )));
    }
    let start = match init {
        Some(s) => {
            s.validate()?;
            if s.components.len() != n_components {
                return Err(Error::invalid("initial guess has the wrong component count"));
            }
            s.clone()
        }
        None => auto_initialize(data, n_components, opts.linewidth_sum),
    };

    let x_scale = data.x.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let y_scale = data.y.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(f64::MIN_POSITIVE);

    let inverse_variance = opts.weighting == Weighting::InverseVariance && data.sigma.is_some();
    let weights: Vec<f64> = match (&data.sigma, inverse_variance) {
        (Some(sigma), true) => {
            if sigma.len() != n {
                return Err(Error::invalid("sigma length differs from data"));
            }
            let floor = sigma.iter().copied().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
            if !floor.is_finite() {
                return Err(Error::DegenerateData("all error bars are zero".into()));
            }
            sigma
                .iter()
                .map(|s| {
                    let s = s.max(floor) / y_scale;
                    1.0 / (s * s)
                })
                .collect()
        }
        _ => vec![1.0; n],
    };

    let problem = SumProblem {
        n_params,
        x: data.x.iter().map(|x| x / x_scale).collect(),
        y: data.y.iter().map(|y| y / y_scale).collect(),
        w: &weights,
    };
    let mut p0 = start.to_params();
    for i in 0..n_components {
        p0[3 * i] /= y_scale;
        p0[3 * i + 1] /= x_scale;
        p0[3 * i + 2] /= x_scale;
    }
    p0[3 * n_components] /= y_scale;

    let min_width = 1e-6;
    let mut lower = Vec::with_capacity(n_params);
    for _ in 0..n_components {
        lower.extend([0.0, f64::NEG_INFINITY, min_width]);
    }
    lower.push(0.0);

    let sol = lm::minimize(&problem, &p0, &lower, &opts.lm);
    let dof = (n - n_params).max(1) as f64;
    let mut cov = lm::covariance(&sol.weighted_jacobian);
    if !inverse_variance {
        cov *= sol.cost / dof;
    }

    // back to data units
    let scale: Vec<f64> = (0..n_params)
        .map(|j| {
            if j == 3 * n_components || j % 3 == 0 {
                y_scale
            } else {
                x_scale
            }
        })
        .collect();
    let params: Vec<f64> = sol.params.iter().zip(&scale).map(|(p, s)| p * s).collect();
    let covariance: Vec<Vec<f64>> = (0..n_params)
        .map(|i| (0..n_params).map(|j| cov[(i, j)] * scale[i] * scale[j]).collect())
        .collect();
    let at_bound: Vec<bool> = sol
        .params
        .iter()
        .zip(&lower)
        .map(|(p, lo)| lo.is_finite() && *p <= *lo)
        .collect();

    let mut fitted = vec![0.0; n];
    problem.model(&sol.params, &mut fitted);
    let residual_norm = problem
        .y
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f).powi(2))
        .sum::<f64>()
        .sqrt()
        * y_scale;
    let data_norm = data.y.iter().map(|y| y * y).sum::<f64>().sqrt();

    let result = FitResult {
        names: LorentzianSum::parameter_names(n_components),
        parameters: params,
        covariance,
        residual_norm,
        data_norm,
        chi_squared: sol.cost,
        converged: sol.converged,
        iterations: sol.iterations,
        at_bound,
    };
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            residual_norm,
            best: Box::new(result),
        });
    }
    Ok(result)
}

impl FitResult {
    /// Interprets the parameters as a [`LorentzianSum`].
    pub fn lorentzian_sum(&self) -> LorentzianSum {
        LorentzianSum::from_params(&self.parameters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiPeak {
    pub center: f64,
    pub center_err: f64,
    pub hwhm: f64,
    pub hwhm_err: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiPeaks {
    pub lower: RabiPeak,
    pub upper: RabiPeak,
}

impl RabiPeaks {
    pub fn half_splitting(&self) -> f64 {
        (self.upper.center - self.lower.center) / 2.0
    }
}

/// Relative amplitude below which a component counts as absent.
const RESOLVABLE_FRACTION: f64 = 0.05;

/// The two resolvable components with extreme centers.
pub fn extract_rabi_peaks(fit: &FitResult) -> Result<RabiPeaks> {
    let sum = fit.lorentzian_sum();
    let max_amp = sum
        .components
        .iter()
        .map(|c| c.amplitude)
        .fold(0.0, f64::max);
    let resolvable: Vec<usize> = (0..sum.components.len())
        .filter(|&i| max_amp > 0.0 && sum.components[i].amplitude >= RESOLVABLE_FRACTION * max_amp)
        .collect();
    if resolvable.len() < 2 {
        return Err(Error::UnresolvedSplitting(format!(
            "{} resolvable component(s)",
            resolvable.len()
        )));
    }
    let by_center = |a: &usize, b: &usize| {
        sum.components[*a]
            .center
            .total_cmp(&sum.components[*b].center)
    };
    let lo = *resolvable.iter().min_by(|a, b| by_center(a, b)).unwrap();
    let hi = *resolvable.iter().max_by(|a, b| by_center(a, b)).unwrap();
    if sum.components[lo].center == sum.components[hi].center {
        return Err(Error::UnresolvedSplitting("components coincide".into()));
    }
    let peak = |i: usize| {
        let c = sum.components[i];
        RabiPeak {
            center: c.center,
            center_err: fit.std_error(3 * i + 1),
            hwhm: c.hwhm,
            hwhm_err: fit.std_error(3 * i + 2),
            height: c.amplitude,
        }
    };
    Ok(RabiPeaks {
        lower: peak(lo),
        upper: peak(hi),
    })
}

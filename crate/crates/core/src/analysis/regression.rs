//! Closed-form regressions: the √N_eff splitting law, the fluctuation
//! power law and the dispersive atom-number calibration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaFit {
    pub g_eff: f64,
    pub g_eff_err: f64,
    pub n_points: usize,
}

/// Least-squares fit of N_eff = Δ²/g_eff² through the origin, residuals
/// taken in N_eff. Peak detunings may carry either sign.
pub fn fit_parabola_geff(points: &[(f64, f64)]) -> Result<ParabolaFit> {
    if points.len() < 3 {
        return Err(Error::IllConditioned(format!(
            "need at least 3 (N_eff, Δ) points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(n, d)| !(n > 0.0 && d.is_finite())) {
        return Err(Error::invalid("N_eff must be positive and Δ finite"));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi < 2.0 * lo {
        return Err(Error::IllConditioned(format!(
            "N_eff spans only {lo:.1}..{hi:.1}; need a factor of 2"
        )));
    }
    // N = u Δ², u = 1/g²
    let sxy: f64 = points.iter().map(|&(n, d)| n * d * d).sum();
    let sxx: f64 = points.iter().map(|&(_, d)| d.powi(4)).sum();
    if sxx == 0.0 {
        return Err(Error::IllConditioned("all peak detunings are zero".into()));
    }
    let u = sxy / sxx;
    let ss: f64 = points.iter().map(|&(n, d)| (n - u * d * d).powi(2)).sum();
    let s2 = ss / (points.len() - 1) as f64;
    let u_err = (s2 / sxx).sqrt();
    Ok(ParabolaFit {
        g_eff: u.powf(-0.5),
        g_eff_err: 0.5 * u.powf(-1.5) * u_err,
        n_points: points.len(),
    })
}

/// What the ordinate of a scaling fit represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingConvention {
    /// ⟨|Σ cos cos|²⟩ ∝ N^β: β is the log-log slope.
    #[default]
    RawStatistic,
    /// Peak rate per unit drive ∝ N^(β−1): β is the slope plus one.
    PeakRatePerDrive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub beta: f64,
    pub beta_err: f64,
    pub slope: f64,
    /// Fitted value at N = 1.
    pub prefactor: f64,
    pub convention: ScalingConvention,
}

/// Weighted straight-line fit of ln(rate) against ln(N).
///
/// With `sigmas` (1σ errors of the rates) the weights are (rate/σ)² and the
/// slope error is absolute; without, points are equally weighted and the
/// error is scaled by the residual scatter.
pub fn fit_power_law_beta(
    points: &[(f64, f64)],
    sigmas: Option<&[f64]>,
    convention: ScalingConvention,
) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 points for a power law, got {}",
            points.len()
        )));
    }
    if let Some(&(n, r)) = points.iter().find(|&&(n, r)| !(n > 0.0 && r > 0.0)) {
        return Err(Error::invalid(format!("nonpositive data point ({n}, {r})")));
    }
    let weights: Vec<f64> = match sigmas {
        Some(s) => {
            if s.len() != points.len() {
                return Err(Error::invalid("sigma length differs from points"));
            }
            points
                .iter()
                .zip(s)
                .map(|(&(_, r), &sig)| {
                    if sig > 0.0 {
                        Ok((r / sig).powi(2))
                    } else {
                        Err(Error::invalid("rate errors must be positive"))
                    }
                })
                .collect::<Result<_>>()?
        }
        None => vec![1.0; points.len()],
    };
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let sw: f64 = weights.iter().sum();
    let xm = xs.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(&weights).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&weights).map(|(x, w)| w * (x - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::IllConditioned("all atom numbers are equal".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&weights)
        .map(|((x, y), w)| w * (x - xm) * (y - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let slope_err = if sigmas.is_some() {
        (1.0 / sxx).sqrt()
    } else {
        let ss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (ss / (points.len() - 2) as f64 / sxx).sqrt()
    };
    let beta = match convention {
        ScalingConvention::RawStatistic => slope,
        ScalingConvention::PeakRatePerDrive => slope + 1.0,
    };
    Ok(PowerLawFit {
        beta,
        beta_err: slope_err,
        slope,
        prefactor: intercept.exp(),
        convention,
    })
}

/// |Δ_A| must exceed this multiple of γ for the dispersive calibration.
pub const DISPERSIVE_MIN_DETUNING_RATIO: f64 = 10.0;

/// N_eff = shift · Δ_A / g² from the dispersive cavity shift.
pub fn calibrate_atom_number(shift: f64, params: &SystemParams, delta_a: f64) -> Result<f64> {
    let min = DISPERSIVE_MIN_DETUNING_RATIO * params.gamma;
    if !(delta_a.abs() >= min) {
        return Err(Error::DispersiveRegime { delta_a, min });
    }
    let g = params.g();
    if g == 0.0 {
        return Err(Error::invalid("coupling is zero"));
    }
    Ok(shift * delta_a / (g * g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::mhz;

    #[test]
    fn parabola_exact_inversion() {
        let g = mhz(0.26);
        let pts: Vec<(f64, f64)> = [1500.0, 2500.0, 4000.0, 6000.0, 8000.0, 10000.0]
            .iter()
            .enumerate()
            .map(|(i, &n): (usize, &f64)| (n, if i % 2 == 0 { 1.0 } else { -1.0 } * n.sqrt() * g))
            .collect();
        let fit = fit_parabola_geff(&pts).unwrap();
        assert!((fit.g_eff / g - 1.0).abs() < 1e-6);
        assert!(fit.g_eff_err < 1e-6 * g);
    }

    #[test]
    fn parabola_degenerate() {
        let g = mhz(0.26);
        let single = vec![(3000.0, 3000f64.sqrt() * g); 4];
        assert!(matches!(fit_parabola_geff(&single), Err(Error::IllConditioned(_))));
        assert!(fit_parabola_geff(&single[..2]).is_err());
    }

    #[test]
    fn power_law_exact() {
        let pts: Vec<(f64, f64)> = [100.0, 300.0, 1000.0, 3000.0].iter().map(|&n| (n, 0.25 * n)).collect();
        let fit = fit_power_law_beta(&pts, None, ScalingConvention::RawStatistic).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-6);
        assert!((fit.prefactor - 0.25).abs() < 1e-9);
        let q: Vec<(f64, f64)> = pts.iter().map(|&(n, _)| (n, n * n)).collect();
        let fit = fit_power_law_beta(&q, None, ScalingConvention::RawStatistic).unwrap();
        assert!((fit.beta - 2.0).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = pts.iter().map(|&(n, _)| (n, 6000.0)).collect();
        let fit = fit_power_law_beta(&flat, None, ScalingConvention::PeakRatePerDrive).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_rejects_nonpositive() {
        let pts = [(100.0, 1.0), (200.0, 0.0), (400.0, 3.0)];
        assert!(fit_power_law_beta(&pts, None, ScalingConvention::RawStatistic).is_err());
    }

    #[test]
    fn calibration_inverts_shift() {
        let p = SystemParams::default();
        let delta_a = mhz(-90.0);
        let shift = 5000.0 * p.g_max.powi(2) / delta_a;
        let n = calibrate_atom_number(shift, &p, delta_a).unwrap();
        assert!((n - 5000.0).abs() < 1e-9);
        assert_eq!(calibrate_atom_number(0.0, &p, delta_a).unwrap(), 0.0);
        assert!(matches!(
            calibrate_atom_number(shift, &p, mhz(-10.0)),
            Err(Error::DispersiveRegime { .. })
        ));
    }
}

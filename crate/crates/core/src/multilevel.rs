//! Zeeman structure of the F=2 ↔ F'=3 line.
//!
//! Clebsch-Gordan table, optical pumping steady state, the effective
//! coupling to the linearly polarized cavity mode, and the incoherent
//! Raman channel into the orthogonal cavity polarization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ensemble::AtomEnsemble;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::scattering::{
    collective_denominator, mean_var, DriveParams, EnsembleSums, SpectrumResult, DENOMINATOR_FLOOR,
};

pub const F_GROUND: i32 = 2;
pub const F_EXCITED: i32 = 3;
/// Number of ground Zeeman sublevels.
pub const N_SUBLEVELS: usize = (2 * F_GROUND + 1) as usize;

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).map(f64::from).product()
}

fn triangle(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// Wigner 3-j symbol for integer angular momenta, Racah's closed form.
pub fn wigner_3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0
        || !triangle(j1, j2, j3)
        || m1.abs() > j1
        || m2.abs() > j2
        || m3.abs() > j3
    {
        return 0.0;
    }
    let delta = (factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3)
        / factorial(j1 + j2 + j3 + 1))
    .sqrt();
    let norm = (factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j3 + m3)
        * factorial(j3 - m3))
    .sqrt();

    let t_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let t_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let denom = factorial(t)
            * factorial(j3 - j2 + t + m1)
            * factorial(j3 - j1 + t - m2)
            * factorial(j1 + j2 - j3 - t)
            * factorial(j1 - t - m1)
            * factorial(j2 - t + m2);
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * delta * norm * sum
}

/// ⟨j1 m1; j2 m2 | J M⟩.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let phase = if (j1 - j2 + m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * f64::from(2 * j + 1).sqrt() * wigner_3j(j1, j2, j, m1, m2, -m)
}

/// Spherical polarization component of a photon, `q` ∈ {−1, 0, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    SigmaMinus,
    Pi,
    SigmaPlus,
}

impl Polarization {
    pub const ALL: [Polarization; 3] = [Self::SigmaMinus, Self::Pi, Self::SigmaPlus];

    pub fn q(self) -> i32 {
        match self {
            Self::SigmaMinus => -1,
            Self::Pi => 0,
            Self::SigmaPlus => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub f_ground: i32,
    pub f_excited: i32,
    /// `cg[m + 2][q + 1]` = ⟨2 m; 1 q | 3 m+q⟩.
    pub cg: [[f64; 3]; N_SUBLEVELS],
    /// Excited-state HWHM.
    pub gamma: f64,
}

/// Builds the F=2 → F'=3 coefficient table.
///
/// Coefficients are normalized so that the stretched transition has unit
/// strength and every excited sublevel decays with total branching one.
/// Summed over `q` from a ground sublevel they give (2F'+1)/(2F+1) = 7/5.
pub fn clebsch_gordan_table(gamma: f64) -> LevelScheme {
    let mut cg = [[0.0; 3]; N_SUBLEVELS];
    for m in -F_GROUND..=F_GROUND {
        for q in -1..=1 {
            cg[(m + F_GROUND) as usize][(q + 1) as usize] =
                clebsch_gordan(F_GROUND, m, 1, q, F_EXCITED, m + q);
        }
    }
    LevelScheme {
        f_ground: F_GROUND,
        f_excited: F_EXCITED,
        cg,
        gamma,
    }
}

impl LevelScheme {
    /// Coefficient for (2, m) → (3, m+q); zero outside the manifold.
    pub fn coefficient(&self, m: i32, q: i32) -> f64 {
        if m.abs() > self.f_ground || q.abs() > 1 {
            return 0.0;
        }
        self.cg[(m + self.f_ground) as usize][(q + 1) as usize]
    }

    pub fn strength(&self, m: i32, q: i32) -> f64 {
        self.coefficient(m, q).powi(2)
    }

    /// Squared coupling of sublevel `m` to a linearly polarized cavity mode
    /// orthogonal to the quantization axis, ŷ = i(σ̂₊ + σ̂₋)/√2, with the two
    /// circular components adding in intensity.
    pub fn linear_coupling_sq(&self, m: i32) -> f64 {
        0.5 * (self.strength(m, 1) + self.strength(m, -1))
    }

    /// Squared Raman weight of an atom in sublevel `m`: absorption of a σ±
    /// drive photon followed by π emission into the axial cavity
    /// polarization, the two final states adding incoherently.
    pub fn raman_weight_sq(&self, m: i32) -> f64 {
        [-1, 1]
            .iter()
            .map(|&q| 0.5 * self.strength(m, q) * self.strength(m + q, 0))
            .sum()
    }

    /// Writes `m_F,q,coefficient` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["m_F", "q", "coefficient"])?;
        for m in -self.f_ground..=self.f_ground {
            for q in -1..=1 {
                w.write_record([
                    m.to_string(),
                    q.to_string(),
                    format!("{:.17e}", self.coefficient(m, q)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Probabilities over m_F = −2..=+2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationDistribution {
    pub p: [f64; N_SUBLEVELS],
}

impl PopulationDistribution {
    pub fn uniform() -> Self {
        Self {
            p: [1.0 / N_SUBLEVELS as f64; N_SUBLEVELS],
        }
    }

    pub fn stretched() -> Self {
        let mut p = [0.0; N_SUBLEVELS];
        p[N_SUBLEVELS - 1] = 1.0;
        Self { p }
    }

    pub fn new(p: [f64; N_SUBLEVELS]) -> Result<Self> {
        if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::invalid("populations must be finite and nonnegative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("populations sum to {total}, expected 1")));
        }
        Ok(Self { p })
    }

    pub fn of(&self, m: i32) -> f64 {
        self.p[(m + F_GROUND) as usize]
    }

    pub fn max_distance_to_uniform(&self) -> f64 {
        let u = 1.0 / N_SUBLEVELS as f64;
        self.p.iter().map(|x| (x - u).abs()).fold(0.0, f64::max)
    }
}

impl Default for PopulationDistribution {
    fn default() -> Self {
        Self::uniform()
    }
}

pub type TransitionMatrix = [[f64; N_SUBLEVELS]; N_SUBLEVELS];

/// Single-scattering-event transition matrix on the ground manifold.
///
/// Row `m` is the distribution of the final sublevel after one absorption
/// from the driven polarizations (weighted by line strength) followed by
/// spontaneous decay along the excited-state branching ratios. A sublevel
/// dark to every driven polarization maps onto itself.
pub fn pumping_matrix(scheme: &LevelScheme, drive: &[Polarization]) -> TransitionMatrix {
    let mut t = [[0.0; N_SUBLEVELS]; N_SUBLEVELS];
    let fg = scheme.f_ground;
    for m in -fg..=fg {
        let row = (m + fg) as usize;
        let total: f64 = drive.iter().map(|pol| scheme.strength(m, pol.q())).sum();
        if total <= 0.0 {
            t[row][row] = 1.0;
            continue;
        }
        for pol in drive {
            let q = pol.q();
            let absorb = scheme.strength(m, q) / total;
            if absorb == 0.0 {
                continue;
            }
            let excited = m + q;
            for q_emit in -1..=1 {
                let m_final = excited - q_emit;
                if m_final.abs() > fg {
                    continue;
                }
                t[row][(m_final + fg) as usize] += absorb * scheme.strength(m_final, q_emit);
            }
        }
    }
    t
}

fn step(p: &[f64; N_SUBLEVELS], t: &TransitionMatrix) -> [f64; N_SUBLEVELS] {
    let mut out = [0.0; N_SUBLEVELS];
    for (i, pi) in p.iter().enumerate() {
        for (j, tij) in t[i].iter().enumerate() {
            out[j] += pi * tij;
        }
    }
    out
}

/// Number of closed communicating classes of the chain.
fn closed_classes(t: &TransitionMatrix) -> usize {
    let n = N_SUBLEVELS;
    let mut reach = [[false; N_SUBLEVELS]; N_SUBLEVELS];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if t[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // i is recurrent iff everything it reaches reaches back.
    let recurrent: Vec<bool> = (0..n)
        .map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut seen = [false; N_SUBLEVELS];
    let mut classes = 0;
    for i in 0..n {
        if recurrent[i] && !seen[i] {
            classes += 1;
            for j in 0..n {
                if reach[i][j] && reach[j][i] {
                    seen[j] = true;
                }
            }
        }
    }
    classes
}

pub const STATIONARY_TOLERANCE: f64 = 1e-12;
const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Steady-state Zeeman populations under continuous optical pumping.
pub fn pumping_steady_state(
    scheme: &LevelScheme,
    drive: &[Polarization],
) -> Result<PopulationDistribution> {
    if drive.is_empty() {
        return Err(Error::invalid("drive polarization set is empty"));
    }
    let t = pumping_matrix(scheme, drive);
    let classes = closed_classes(&t);
    if classes != 1 {
        return Err(Error::ReducibleChain(classes));
    }

    // Lazy chain (I + T)/2 shares the stationary vector and is aperiodic.
    let mut p = PopulationDistribution::uniform().p;
    for _ in 0..MAX_POWER_ITERATIONS {
        let tp = step(&p, &t);
        let residual = p
            .iter()
            .zip(&tp)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < STATIONARY_TOLERANCE {
            let total: f64 = tp.iter().sum();
            return Ok(PopulationDistribution {
                p: tp.map(|x| x / total),
            });
        }
        for (pi, ti) in p.iter_mut().zip(&tp) {
            *pi = 0.5 * (*pi + ti);
        }
    }
    Err(Error::NoStationaryConvergence {
        iterations: MAX_POWER_ITERATIONS,
        tolerance: STATIONARY_TOLERANCE,
    })
}

/// Population-averaged coupling to the linearly polarized cavity mode.
pub fn effective_coupling(scheme: &LevelScheme, pop: &PopulationDistribution, g_max: f64) -> f64 {
    let fg = scheme.f_ground;
    let mean_sq: f64 = (-fg..=fg)
        .map(|m| pop.of(m) * scheme.linear_coupling_sq(m))
        .sum();
    g_max * mean_sq.sqrt()
}

/// Intensity in the rotated (axial) polarization channel for one ensemble.
///
/// Each atom scatters through its own Raman path, so intensities add
/// without an interference phase; the collective denominator carries the
/// normal-mode splitting of the strongly coupled mode. Returned as a
/// single-realization [`SpectrumResult`] with zero variance.
pub fn raman_spectrum(
    ensemble: &AtomEnsemble,
    params: &SystemParams,
    drive: &DriveParams,
    scheme: &LevelScheme,
    grid: &[f64],
) -> Result<SpectrumResult> {
    let sums = EnsembleSums::compute(ensemble, params, Some(scheme));
    raman_spectrum_from_sums(&[sums], params, drive, grid)
}

/// Raman intensity η²g²·Σ w²cos²(kx)B² / |D|², averaged over realizations
/// whose sums were computed with a level scheme.
pub fn raman_spectrum_from_sums(
    sums: &[EnsembleSums],
    params: &SystemParams,
    drive: &DriveParams,
    grid: &[f64],
) -> Result<SpectrumResult> {
    if sums.is_empty() {
        return Err(Error::invalid("at least one realization is required"));
    }
    let g = params.g();
    let n = sums.len();
    let mut mean_intensity = Vec::with_capacity(grid.len());
    let mut var_intensity = Vec::with_capacity(grid.len());
    for &delta in grid {
        let values = sums
            .iter()
            .map(|s| {
                let d2 = collective_denominator(params, delta, delta, g, s.s2).norm_sqr();
                if d2 < DENOMINATOR_FLOOR {
                    return Err(Error::Singular(d2));
                }
                Ok(drive.eta * drive.eta * g * g * s.raman / d2)
            })
            .collect::<Result<Vec<_>>>()?;
        let (m, v) = mean_var(values.iter().copied(), n);
        mean_intensity.push(m);
        var_intensity.push(v);
    }
    Ok(SpectrumResult {
        detunings: grid.to_vec(),
        mean_intensity,
        var_intensity,
        mean_amplitude: vec![Default::default(); grid.len()],
        var_amplitude: vec![0.0; grid.len()],
        n_realizations: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::mhz;

    fn scheme() -> LevelScheme {
        clebsch_gordan_table(mhz(3.0))
    }

    #[test]
    fn stretched_and_sums() {
        let s = scheme();
        assert!((s.strength(2, 1) - 1.0).abs() < 1e-14);
        assert!((s.strength(-2, -1) - 1.0).abs() < 1e-14);
        for m in -2..=2 {
            let total: f64 = (-1..=1).map(|q| s.strength(m, q)).sum();
            assert!((total - 1.4).abs() < 1e-12, "m={m}: {total}");
        }
        // m=0: π carries 3/5 and each σ carries 2/5.
        assert!((s.strength(0, 0) - 0.6).abs() < 1e-12);
        assert!((s.strength(0, 1) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mirror_symmetry() {
        let s = scheme();
        for m in -2..=2 {
            for q in -1..=1 {
                assert!((s.strength(m, q) - s.strength(-m, -q)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn three_j_selection_rules() {
        assert_eq!(wigner_3j(2, 1, 3, 1, 1, -1), 0.0);
        assert_eq!(wigner_3j(1, 1, 3, 0, 0, 0), 0.0);
        // (1 1 0; 0 0 0) = -1/sqrt(3)
        assert!((wigner_3j(1, 1, 0, 0, 0, 0) + 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn excited_branching_is_unity() {
        let s = scheme();
        for big_m in -3..=3 {
            let total: f64 = (-1..=1)
                .filter(|q: &i32| (big_m - q).abs() <= 2)
                .map(|q| s.strength(big_m - q, q))
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "M={big_m}");
        }
    }

    #[test]
    fn sigma_plus_pumps_to_stretched() {
        let pop = pumping_steady_state(&scheme(), &[Polarization::SigmaPlus]).unwrap();
        assert!(pop.of(2) > 0.99, "{:?}", pop);
    }

    #[test]
    fn empty_drive_rejected() {
        assert!(matches!(
            pumping_steady_state(&scheme(), &[]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pi_drive_chain_is_irreducible() {
        // π light has no dark state on F=2 → F'=3.
        let pop = pumping_steady_state(&scheme(), &[Polarization::Pi]).unwrap();
        for m in -2..=2 {
            assert!((pop.of(m) - pop.of(-m)).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_class_count_detects_reducible_chains() {
        let mut t = [[0.0; N_SUBLEVELS]; N_SUBLEVELS];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        assert_eq!(closed_classes(&t), 5);
    }

    #[test]
    fn g_eff_orders() {
        let s = scheme();
        let g_max = mhz(0.33);
        let uniform = effective_coupling(&s, &PopulationDistribution::uniform(), g_max);
        let stretched = effective_coupling(&s, &PopulationDistribution::stretched(), g_max);
        assert!(stretched > uniform);
        assert_eq!(effective_coupling(&s, &PopulationDistribution::uniform(), 0.0), 0.0);
        // sqrt(7/15) · 0.33 MHz
        let expected = g_max * (7.0f64 / 15.0).sqrt();
        assert!((uniform - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn raman_weights_vanish_only_without_pi_emission() {
        let s = scheme();
        for m in -2..=2 {
            assert!(s.raman_weight_sq(m) > 0.0);
            assert!((s.raman_weight_sq(m) - s.raman_weight_sq(-m)).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_has_fifteen_rows() {
        let mut buf = Vec::new();
        scheme().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 16);
        assert!(text.starts_with("m_F,q,coefficient\n"));
    }
}

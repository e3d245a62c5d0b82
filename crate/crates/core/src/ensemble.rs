//! Stochastic atomic configurations in the intracavity lattice.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilevel::{
    clebsch_gordan_table, pumping_steady_state, Polarization, PopulationDistribution, F_GROUND,
};
use crate::params::SystemParams;

/// Positions, Zeeman sublevels and transverse coupling weights of N atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomEnsemble {
    /// Coordinates along the cavity axis (m).
    pub positions_x: Vec<f64>,
    /// Coordinates along the drive axis (m).
    pub positions_z: Vec<f64>,
    /// Gaussian mode-profile attenuation of the coupling, in (0, 1].
    pub radial_weight: Vec<f64>,
    pub mf_state: Vec<i8>,
    /// Probe wave number used for the mode functions (rad/m).
    pub wave_number: f64,
}

impl AtomEnsemble {
    pub fn empty(wave_number: f64) -> Self {
        Self {
            positions_x: Vec::new(),
            positions_z: Vec::new(),
            radial_weight: Vec::new(),
            mf_state: Vec::new(),
            wave_number,
        }
    }

    pub fn len(&self) -> usize {
        self.positions_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.positions_z.len() != n || self.radial_weight.len() != n || self.mf_state.len() != n
        {
            return Err(Error::invalid("ensemble field lengths differ"));
        }
        if self.radial_weight.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::invalid("radial weights must lie in (0, 1]"));
        }
        if self
            .mf_state
            .iter()
            .any(|&m| i32::from(m).abs() > F_GROUND)
        {
            return Err(Error::invalid("m_F outside -2..=2"));
        }
        Ok(())
    }
}

/// Which positional model to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// Thermal atoms in the incommensurate trap lattice.
    #[default]
    Lattice,
    /// Atoms pinned to in-phase antinodes of both mode functions.
    Commensurate,
    /// Structureless uniform positions, unit radial weight.
    Uniform,
}

/// Geometry knobs for the samplers. `None` fields resolve against
/// [`SystemParams`] at sampling time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: EnsembleKind,
    /// RMS extent of the site-occupation envelope along x; default mode waist.
    pub cloud_rms_x: Option<f64>,
    /// RMS radius of the transverse cloud; default mode waist / 2.
    /// Zero puts every atom on the cavity axis.
    pub transverse_rms: Option<f64>,
    /// Length of the uniformly illuminated region along z; default drive waist.
    pub illuminated_length: Option<f64>,
    /// Override for the in-well thermal RMS; default from temperature and depth.
    pub thermal_sigma_x: Option<f64>,
    /// Sublevel distribution the m_F states are drawn from.
    pub population: PopulationDistribution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::new(EnsembleKind::Lattice)
    }
}

impl SamplerConfig {
    /// Populations default to the σ⁺/σ⁻ pumping steady state.
    pub fn new(kind: EnsembleKind) -> Self {
        let scheme = clebsch_gordan_table(1.0);
        let population = pumping_steady_state(
            &scheme,
            &[Polarization::SigmaPlus, Polarization::SigmaMinus],
        )
        .unwrap_or_default();
        Self {
            kind,
            cloud_rms_x: None,
            transverse_rms: None,
            illuminated_length: None,
            thermal_sigma_x: None,
            population,
        }
    }

    pub fn on_axis(mut self) -> Self {
        self.transverse_rms = Some(0.0);
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cloud_rms_x", self.cloud_rms_x),
            ("transverse_rms", self.transverse_rms),
            ("illuminated_length", self.illuminated_length),
            ("thermal_sigma_x", self.thermal_sigma_x),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Dispatches on [`SamplerConfig::kind`].
    pub fn sample(&self, params: &SystemParams, n_atoms: usize, seed: u64) -> Result<AtomEnsemble> {
        match self.kind {
            EnsembleKind::Lattice => sample_lattice_ensemble(params, self, n_atoms, seed),
            EnsembleKind::Commensurate => {
                sample_commensurate_ensemble(params, self, n_atoms, seed)
            }
            EnsembleKind::Uniform => sample_uniform_ensemble(params, self, n_atoms, seed),
        }
    }
}

/// Seeded generator for one sampling call.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of sub-stream `index` derived from `seed`.
///
/// SplitMix64 finalizer applied to `seed + (index + 1)·φ64`, where φ64 is the
/// 64-bit golden-ratio increment. Realization `r` of a sweep uses
/// `split_seed(seed, r)`, so every realization is reproducible on its own
/// and independent of thread scheduling.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = seed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

fn draw_mf<R: Rng>(rng: &mut R, pop: &PopulationDistribution) -> i8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in pop.p.iter().enumerate() {
        acc += p;
        if u < acc {
            return (i as i32 - F_GROUND) as i8;
        }
    }
    // rounding in the cumulative sum; fall back to the last populated level
    let last = pop.p.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    (last as i32 - F_GROUND) as i8
}

fn radial_weight<R: Rng>(rng: &mut R, rms_radius: f64, waist: f64) -> f64 {
    if rms_radius == 0.0 {
        return 1.0;
    }
    let sigma = rms_radius / std::f64::consts::SQRT_2;
    let (u, v) = (gaussian(rng, sigma), gaussian(rng, sigma));
    let w = (-(u * u + v * v) / (waist * waist)).exp();
    // far-tail underflow would leave the open interval
    w.max(f64::MIN_POSITIVE)
}

/// Thermal atoms in the lattice of period λ_trap/2.
///
/// Sites are drawn from a Gaussian envelope, each atom is displaced from
/// its site centre by the harmonic-well thermal spread, z is uniform over
/// the illuminated length, and the transverse position sets the radial
/// coupling weight exp(−r²/w²).
pub fn sample_lattice_ensemble(
    params: &SystemParams,
    config: &SamplerConfig,
    n_atoms: usize,
    seed: u64,
) -> Result<AtomEnsemble> {
    params.validate()?;
    config.validate()?;
    let spacing = params.lattice_spacing();
    let envelope = config.cloud_rms_x.unwrap_or(params.mode_waist);
    let sigma_x = config
        .thermal_sigma_x
        .unwrap_or_else(|| params.thermal_sigma_x());
    let transverse = config.transverse_rms.unwrap_or(params.mode_waist / 2.0);
    let length = config.illuminated_length.unwrap_or(params.drive_waist);

    let mut rng = rng_from_seed(seed);
    let mut ens = AtomEnsemble::empty(params.k_probe());
    ens.positions_x.reserve(n_atoms);
    ens.positions_z.reserve(n_atoms);
    ens.radial_weight.reserve(n_atoms);
    ens.mf_state.reserve(n_atoms);
    for _ in 0..n_atoms {
        let site = (gaussian(&mut rng, envelope) / spacing).round();
        let x = site * spacing + gaussian(&mut rng, sigma_x);
        let z = length * (rng.random::<f64>() - 0.5);
        let w = radial_weight(&mut rng, transverse, params.mode_waist);
        let m = draw_mf(&mut rng, &config.population);
        ens.positions_x.push(x);
        ens.positions_z.push(z);
        ens.radial_weight.push(w);
        ens.mf_state.push(m);
    }
    Ok(ens)
}

/// Perfectly ordered control case: every atom sits where
/// cos(k·x) = cos(k·z) = 1, with unit radial weight.
///
/// Atoms occupy consecutive in-phase antinodes x = j·λ, z = j·λ centred on
/// the origin. Only the m_F assignment uses the seed.
pub fn sample_commensurate_ensemble(
    params: &SystemParams,
    config: &SamplerConfig,
    n_atoms: usize,
    seed: u64,
) -> Result<AtomEnsemble> {
    params.validate()?;
    config.validate()?;
    let lambda = params.lambda_probe;
    let mut rng = rng_from_seed(seed);
    let mut ens = AtomEnsemble::empty(params.k_probe());
    let offset = (n_atoms / 2) as i64;
    for j in 0..n_atoms {
        let pos = (j as i64 - offset) as f64 * lambda;
        ens.positions_x.push(pos);
        ens.positions_z.push(pos);
        ens.radial_weight.push(1.0);
        ens.mf_state.push(draw_mf(&mut rng, &config.population));
    }
    Ok(ens)
}

/// Structureless gas: x uniform with the envelope RMS, z uniform over the
/// illuminated length, unit radial weight.
pub fn sample_uniform_ensemble(
    params: &SystemParams,
    config: &SamplerConfig,
    n_atoms: usize,
    seed: u64,
) -> Result<AtomEnsemble> {
    params.validate()?;
    config.validate()?;
    let envelope = config.cloud_rms_x.unwrap_or(params.mode_waist);
    let half_x = 3f64.sqrt() * envelope;
    let length = config.illuminated_length.unwrap_or(params.drive_waist);
    let mut rng = rng_from_seed(seed);
    let mut ens = AtomEnsemble::empty(params.k_probe());
    for _ in 0..n_atoms {
        ens.positions_x.push(half_x * (2.0 * rng.random::<f64>() - 1.0));
        ens.positions_z.push(length * (rng.random::<f64>() - 0.5));
        ens.radial_weight.push(1.0);
        ens.mf_state.push(draw_mf(&mut rng, &config.population));
    }
    Ok(ens)
}

/// N_eff = Σ_a w_a² cos²(k x_a).
pub fn effective_atom_number(ensemble: &AtomEnsemble) -> f64 {
    let k = ensemble.wave_number;
    ensemble
        .positions_x
        .iter()
        .zip(&ensemble.radial_weight)
        .map(|(&x, &w)| {
            let c = (k * x).cos();
            w * w * c * c
        })
        .sum()
}

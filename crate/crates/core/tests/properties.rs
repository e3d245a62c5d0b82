use proptest::prelude::*;
use rand::seq::SliceRandom;
use subrad::analysis::{
    fit_lorentzian_sum, fit_power_law_beta, FitOptions, LorentzComponent, LorentzianSum,
    ScalingConvention, SpectrumData,
};
use subrad::detection::lognormal_estimate;
use subrad::ensemble::{
    effective_atom_number, rng_from_seed, split_seed, EnsembleKind, SamplerConfig,
};
use subrad::multilevel::{
    clebsch_gordan_table, pumping_steady_state, raman_spectrum, Polarization,
};
use subrad::params::{mhz, SystemParams};
use subrad::scattering::{detuning_grid, field_amplitude_y, sweep_spectrum, DriveParams};
use subrad::Error;

fn kind() -> impl Strategy<Value = EnsembleKind> {
    prop_oneof![
        Just(EnsembleKind::Lattice),
        Just(EnsembleKind::Commensurate),
        Just(EnsembleKind::Uniform),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_spectrum(seed in any::<u64>(), n in 1usize..400) {
        let p = SystemParams::default();
        let grid = detuning_grid(mhz(30.0), 11);
        let drive = DriveParams::resonant(mhz(1.0), 0.0, 1e-5);
        let sampler = SamplerConfig::default();
        let a = sweep_spectrum(&p, &drive, n, &grid, 8, seed, &sampler).unwrap();
        let one_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = one_thread.install(|| sweep_spectrum(&p, &drive, n, &grid, 8, seed, &sampler).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sampled_ensembles_are_valid(kind in kind(), seed in any::<u64>(), n in 0usize..500) {
        let p = SystemParams::default();
        let e = SamplerConfig::new(kind).sample(&p, n, seed).unwrap();
        prop_assert_eq!(e.len(), n);
        e.validate().unwrap();
        let n_eff = effective_atom_number(&e);
        prop_assert!(n_eff >= 0.0 && n_eff <= n as f64 + 1e-9);
    }

    #[test]
    fn intensity_quadratic_in_drive(seed in any::<u64>(), scale in 0.01f64..100.0, delta in -5e8f64..5e8) {
        let p = SystemParams::default();
        let e = SamplerConfig::default().sample(&p, 200, seed).unwrap();
        let d = DriveParams::resonant(mhz(1.0), delta, 1e-5);
        let scaled = DriveParams { eta: d.eta * scale, ..d };
        let i1 = field_amplitude_y(&e, &p, &d).unwrap().norm_sqr();
        let i2 = field_amplitude_y(&e, &p, &scaled).unwrap().norm_sqr();
        prop_assert!((i2 - scale * scale * i1).abs() <= 1e-9 * i2.max(1e-300));
    }

    #[test]
    fn raman_ignores_axial_order(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let p = SystemParams::default();
        let scheme = clebsch_gordan_table(p.gamma);
        let grid = detuning_grid(mhz(30.0), 21);
        let drive = DriveParams::resonant(mhz(1.0), 0.0, 1e-5);
        let mut e = SamplerConfig::default().sample(&p, 300, seed).unwrap();
        let before = raman_spectrum(&e, &p, &drive, &scheme, &grid).unwrap();
        e.positions_z.shuffle(&mut rng_from_seed(shuffle_seed));
        let after = raman_spectrum(&e, &p, &drive, &scheme, &grid).unwrap();
        prop_assert_eq!(before.mean_intensity, after.mean_intensity);
    }

    #[test]
    fn lognormal_scale_equivariant(counts in prop::collection::vec(1u64..1000, 2..80), c in 1u64..50) {
        let a = lognormal_estimate(&counts, 1e-3).unwrap();
        let scaled: Vec<u64> = counts.iter().map(|x| x * c).collect();
        let b = lognormal_estimate(&scaled, 1e-3).unwrap();
        prop_assert!((b.mean_rate / a.mean_rate - c as f64).abs() < 1e-9 * c as f64);
        prop_assert!((b.scale - a.scale).abs() < 1e-9);
    }

    #[test]
    fn split_seeds_distinct(seed in any::<u64>(), i in 0u64..1_000_000, j in 0u64..1_000_000) {
        prop_assume!(i != j);
        prop_assert_ne!(split_seed(seed, i), split_seed(seed, j));
    }

    #[test]
    fn pumping_result_is_a_distribution(mask in 1u8..8) {
        let drive: Vec<Polarization> = Polarization::ALL
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, p)| *p)
            .collect();
        match pumping_steady_state(&clebsch_gordan_table(1.0), &drive) {
            Ok(pop) => {
                let total: f64 = pop.p.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(pop.p.iter().all(|&x| x >= 0.0));
            }
            Err(Error::ReducibleChain(k)) => prop_assert!(k != 1),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn single_lorentzian_recovered(
        amp in 0.1f64..10.0,
        center in -30.0f64..30.0,
        hwhm in 1.0f64..8.0,
        offset in 0.0f64..0.5,
    ) {
        let truth = LorentzianSum {
            components: vec![LorentzComponent { amplitude: amp, center: mhz(center), hwhm: mhz(hwhm) }],
            offset,
        };
        let x = detuning_grid(mhz(50.0), 201);
        let data = SpectrumData { y: x.iter().map(|&v| truth.eval(v)).collect(), x, sigma: None };
        let fit = fit_lorentzian_sum(&data, 1, None, &FitOptions::new(mhz(7.0)).uniform()).unwrap();
        let got = fit.lorentzian_sum();
        prop_assert!((got.components[0].center - mhz(center)).abs() < mhz(1e-3));
        prop_assert!((got.components[0].hwhm / mhz(hwhm) - 1.0).abs() < 1e-4);
        prop_assert!((got.components[0].amplitude / amp - 1.0).abs() < 1e-4);
    }

    #[test]
    fn exact_power_law_recovered(beta in 0.5f64..2.5, pre in 1e-3f64..1e3) {
        let pts: Vec<(f64, f64)> = [100.0, 300.0, 1000.0, 3000.0, 1e4]
            .iter()
            .map(|&n: &f64| (n, pre * n.powf(beta)))
            .collect();
        let raw = fit_power_law_beta(&pts, None, ScalingConvention::RawStatistic).unwrap();
        prop_assert!((raw.beta - beta).abs() < 1e-9);
        let per_drive = fit_power_law_beta(&pts, None, ScalingConvention::PeakRatePerDrive).unwrap();
        prop_assert!((per_drive.beta - beta - 1.0).abs() < 1e-9);
    }
}

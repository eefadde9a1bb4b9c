use proptest::prelude::*;
use subdiff_core::age::solve_age_homogeneous;
use subdiff_core::ctrw::{empirical_density, fit_loglog_slope, periodic_density};
use subdiff_core::fracpde::{memory_operator, MemoryWeights};
use subdiff_core::harness::{Case, ExperimentConfig};
use subdiff_core::model::{AgeProfile, HazardModel, JumpKernel, KernelShape, SpatialProfile, PERIOD};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn survival_is_a_decreasing_probability(alpha in 0.01f64..0.99, a in 0.0f64..1e4, b in 0.0f64..1e4) {
        let m = HazardModel::power_law(alpha).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (s_lo, s_hi) = (m.survival(lo).unwrap(), m.survival(hi).unwrap());
        prop_assert!(s_hi <= s_lo && s_lo <= 1.0 && s_hi > 0.0);
    }

    #[test]
    fn total_age_exceeds_current_age(alpha in 0.01f64..0.99, age in 0.0f64..1e3, u in 1e-12f64..1.0) {
        let m = HazardModel::power_law(alpha).unwrap();
        prop_assert!(m.sample_total_age(age, u).unwrap() >= age);
    }

    #[test]
    fn renewal_runs_conserve_mass_and_respect_comparison(
        alpha in 0.1f64..0.95,
        da in 0.02f64..0.5,
        rate in 0.5f64..4.0,
    ) {
        let trace = solve_age_homogeneous(
            &HazardModel::power_law(alpha).unwrap(),
            &AgeProfile::Exponential { rate },
            20.0,
            da,
        ).unwrap();
        prop_assert!(trace.max_mass_drift() < 1e-8);
        prop_assert!(trace.ratio_max <= trace.initial_ratio_max + 1e-12);
        prop_assert!(trace.flux.iter().all(|u| *u >= 0.0));
    }

    #[test]
    fn memory_operator_is_exact_on_affine_data(
        alpha in 0.05f64..0.95,
        dt in 1e-3f64..0.1,
        c0 in -2.0f64..2.0,
        c1 in -2.0f64..2.0,
        k in 1usize..200,
    ) {
        let w = MemoryWeights::new(alpha, dt, k).unwrap();
        let f: Vec<f64> = (0..=k).map(|j| c0 + c1 * j as f64 * dt).collect();
        let t = k as f64 * dt;
        let exact = c0 * t.powf(-alpha) + c1 * t.powf(1.0 - alpha) / (1.0 - alpha);
        let got = memory_operator(&f, &w, k).unwrap();
        prop_assert!((got - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        prop_assert!(w.newest() > 0.0);
    }

    #[test]
    fn kernel_symbol_is_bounded_and_even(eps in 0.01f64..1.0, xi in -50.0f64..50.0, sigma in 0.1f64..1.0) {
        for shape in [KernelShape::Triangular, KernelShape::TruncatedGaussian { sigma }] {
            let k = JumpKernel::new(shape, eps).unwrap();
            prop_assert!(k.symbol(xi).abs() <= 1.0 + 1e-12);
            prop_assert!((k.symbol(xi) - k.symbol(-xi)).abs() < 1e-12);
        }
    }

    #[test]
    fn displacements_stay_in_the_unit_support(u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let k = JumpKernel::triangular(0.3).unwrap();
        prop_assert!(k.sample_displacement(u1, u2).abs() <= 1.0);
    }

    #[test]
    fn histograms_keep_all_mass(xs in prop::collection::vec(-5.0f64..5.0, 1..200), bins in 1usize..40, mass in 0.1f64..10.0) {
        let d = empirical_density(&xs, -2.0, 3.0, bins, mass).unwrap();
        prop_assert!((d.total_mass(mass, xs.len()) - mass).abs() < 1e-12 * mass);
        let p = periodic_density(&xs, bins, mass).unwrap();
        let total = p.iter().sum::<f64>() * PERIOD / bins as f64;
        prop_assert!((total - mass).abs() < 1e-12 * mass);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(p in -2.0f64..2.0, c in 0.1f64..10.0) {
        let t = [1.0f64, 3.0, 10.0, 30.0, 100.0];
        let y: Vec<f64> = t.iter().map(|x| c * x.powf(p)).collect();
        prop_assert!((fit_loglog_slope(&t, &y, (1.0, 100.0)).unwrap() - p).abs() < 1e-12);
    }

    #[test]
    fn config_text_round_trips(
        sub in any::<bool>(),
        alpha in 0.05f64..0.95,
        eps0 in 0.05f64..1.0,
        da in 1e-3f64..2.0,
        seed in any::<u64>(),
        width in 0.1f64..2.0,
        beta in prop::option::of(0.5f64..10.0),
    ) {
        let cfg = ExperimentConfig {
            case: if sub { Case::SubDiffusion { alpha } } else { Case::NormalDiffusion { d0: 1.0 } },
            epsilons: vec![eps0, eps0 / 2.0, eps0 / 3.0],
            beta,
            da,
            seed,
            initial: SpatialProfile::Gaussian { center: 1.0, width },
            ..Default::default()
        };
        let text = cfg.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_text(), text);
    }
}

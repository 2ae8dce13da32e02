use bessel_exit::exitlaw::{
    q01_to_one_series, q01_to_zero_auto, q1_auto, q1_series, splitting_probability,
};
use bessel_exit::kernels::{free_density, killed_density_series_outcome, killed_density_two_sided};
use bessel_exit::mc::{simulate_exit, SimConfig};
use bessel_exit::special::{bessel_j, bessel_zeros, i_ratio_bounds, ZeroTable};
use bessel_exit::{Boundary, ExitLawQuery, Index, SeriesConfig};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn index_conventions(mu in -3.0f64..3.0) {
        prop_assert_eq!(Index::reflecting(mu).is_ok(), mu > -1.0);
        prop_assert_eq!(Index::killing(mu).is_ok(), mu < 0.0);
    }

    #[test]
    fn free_kernel_is_symmetric_and_positive(
        mu in -0.95f64..6.0,
        t in 0.01f64..5.0,
        x in 0.01f64..3.0,
        y in 0.01f64..3.0,
    ) {
        let a = free_density(mu, t, x, y).unwrap();
        let b = free_density(mu, t, y, x).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b), "{} vs {}", a, b);
    }

    #[test]
    fn free_kernel_is_continuous_at_origin(
        mu in -0.95f64..6.0,
        t in 0.01f64..5.0,
        y in 0.05f64..3.0,
    ) {
        let at_zero = free_density(mu, t, 0.0, y).unwrap();
        let near = free_density(mu, t, 1e-7, y).unwrap();
        prop_assert!((at_zero - near).abs() <= 1e-9 * at_zero, "{} vs {}", at_zero, near);
    }

    #[test]
    fn killed_kernel_below_free(
        mu in -0.95f64..5.0,
        t in 0.01f64..3.0,
        x in 0.02f64..0.98,
        y in 0.02f64..0.98,
    ) {
        let out = killed_density_series_outcome(mu, t, x, y, &SeriesConfig::default()).unwrap();
        prop_assume!(out.rel_error() <= 1e-10);
        let free = free_density(mu, t, x, y).unwrap();
        prop_assert!(out.value <= free * (1.0 + 1e-12) + out.rel_error() * out.value.abs() + 1e-12);
    }

    #[test]
    fn two_sided_kernel_matches_opposite_index(
        mu in -0.95f64..-0.01,
        t in 0.01f64..3.0,
        x in 0.02f64..0.98,
        y in 0.02f64..0.98,
    ) {
        let cfg = SeriesConfig::default();
        let two = killed_density_two_sided(mu, t, x, y, &cfg).unwrap();
        let out = killed_density_series_outcome(-mu, t, x, y, &cfg).unwrap();
        prop_assert_eq!(two.to_bits(), ((x * y).powf(-2.0 * mu) * out.value).to_bits());
    }

    #[test]
    fn exit_through_one_matches_opposite_index(
        mu in -0.95f64..-0.01,
        t in 0.02f64..3.0,
        x in 0.02f64..0.98,
    ) {
        let cfg = SeriesConfig::default();
        let a = q01_to_one_series(mu, t, x, &cfg).unwrap();
        let b = x.powf(-2.0 * mu) * q1_series(-mu, t, x, &cfg).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn dispatched_densities_are_nonnegative_with_sane_reports(
        mu in -0.95f64..5.0,
        t in 1e-4f64..5.0,
        x in 0.01f64..0.99,
    ) {
        let (v, r) = q1_auto(mu, t, x).unwrap();
        prop_assert!(v >= -1e-12);
        prop_assert!(r.estimated_rel_error.is_finite() && r.estimated_rel_error >= 0.0);
        if mu < 0.0 {
            let (v, r) = q01_to_zero_auto(mu, t, x).unwrap();
            prop_assert!(v >= -1e-12);
            prop_assert!(r.estimated_rel_error.is_finite() && r.estimated_rel_error >= 0.0);
        }
    }

    #[test]
    fn radius_scaling(
        mu in -0.9f64..3.0,
        t in 0.01f64..2.0,
        frac in 0.05f64..0.95,
        radius in 0.25f64..4.0,
    ) {
        let index = Index::reflecting(mu).unwrap();
        let scaled = ExitLawQuery::new(index, t, frac * radius, Boundary::One, radius)
            .unwrap()
            .evaluate()
            .unwrap()
            .0;
        let r2 = radius * radius;
        let unit = ExitLawQuery::unit(index, t / r2, frac * radius / radius, Boundary::One)
            .unwrap()
            .evaluate()
            .unwrap()
            .0 / r2;
        prop_assert!((scaled - unit).abs() <= 1e-14 * unit.abs());
    }

    #[test]
    fn splitting_probability_is_increasing(
        mu in -0.99f64..-0.01,
        x in 0.01f64..0.98,
        dx in 0.001f64..0.02,
    ) {
        let p = splitting_probability(mu, x).unwrap();
        let q = splitting_probability(mu, x + dx).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
        prop_assert!(q > p);
    }

    #[test]
    fn i_ratio_bounds_are_ordered(mu in -0.99f64..10.0, x in 0.001f64..50.0, gap in 0.0f64..50.0) {
        let y = x + gap;
        prop_assume!(y <= 50.0);
        let (lo, hi) = i_ratio_bounds(mu, x, y).unwrap();
        prop_assert!(0.0 < lo && lo <= hi, "{} {}", lo, hi);
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn zeros_are_increasing_roots(mu in -0.99f64..10.0) {
        let table = bessel_zeros(mu, 20).unwrap();
        let z = table.zeros();
        prop_assert!(z[0] > 0.0);
        prop_assert!(z.windows(2).all(|w| w[0] < w[1]));
        for &j in z {
            prop_assert!(bessel_j(mu, j).unwrap().abs() <= 1e-11, "J({}) at {}", mu, j);
        }
    }

    #[test]
    fn zeros_interlace(mu in -0.99f64..9.0) {
        let a = bessel_zeros(mu, 21).unwrap();
        let b = bessel_zeros(mu + 1.0, 20).unwrap();
        for k in 0..20 {
            prop_assert!(a.zeros()[k] < b.zeros()[k] && b.zeros()[k] < a.zeros()[k + 1]);
        }
    }

    #[test]
    fn zero_table_text_round_trip(mu in -0.99f64..20.0, n in 1usize..40) {
        let table = bessel_zeros(mu, n).unwrap();
        let back = ZeroTable::from_text(&table.to_text()).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn simulation_is_deterministic_per_stream(
        mu in -0.95f64..3.0,
        x0 in 0.05f64..0.95,
        seed in any::<u64>(),
        stream in any::<u64>(),
        kill in any::<bool>(),
    ) {
        let index = if kill && mu < 0.0 {
            Index::killing(mu).unwrap()
        } else {
            Index::reflecting(mu).unwrap()
        };
        let cfg = SimConfig { step: 1e-3, max_time: 50.0, seed, n_paths: 1, bridge_correction: true };
        let a = simulate_exit(index, x0, &cfg, stream).unwrap();
        let b = simulate_exit(index, x0, &cfg, stream).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.exit_time > 0.0);
        if !index.kills_at_zero() {
            prop_assert_eq!(a.boundary, Boundary::One);
        }
    }
}

#[test]
fn series_config_rejects_bad_tolerances() {
    let good = SeriesConfig::default();
    assert!(good.validate().is_ok());
    for bad in [
        SeriesConfig {
            abs_tol: 0.0,
            ..good
        },
        SeriesConfig {
            rel_tol: -1.0,
            ..good
        },
        SeriesConfig {
            max_terms: 0,
            ..good
        },
        SeriesConfig {
            min_exponent: f64::NAN,
            ..good
        },
    ] {
        assert!(bad.validate().is_err());
    }
}

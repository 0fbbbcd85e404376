use proptest::prelude::*;

use pseudoarc::bbm::{attractor_cloud, attractor_raster, band_map, hausdorff_distance, BandPoint};
use pseudoarc::crookedgen::{lambda_nk, sigma};
use pseudoarc::exactmap::{compose, is_measure_preserving, read_plmap, sup_distance, write_plmap, PLMap};
use pseudoarc::family::{f_tilde, g_tilde, PerturbationSchedule};
use pseudoarc::invlim::{prokhorov_distance, sample_backward, sample_mu_hat, truncated_metric, EmpiricalMeasure};
use pseudoarc::par::Execution;
use pseudoarc::rational::{q, Rational};

#[test]
fn backward_orbits_project_forward() {
    let f = lambda_nk(7, 1).unwrap();
    let orbit = sample_backward(&f, &q(5, 13), 12, 3).unwrap();
    orbit.validate(&f).unwrap();
    assert_eq!(orbit.depth(), 12);
    assert_eq!(truncated_metric(&orbit, &orbit).unwrap(), 0.0);
}

#[test]
fn measure_tables_round_trip_and_compare() {
    let f = lambda_nk(7, 1).unwrap();
    let m = sample_mu_hat(&f, 10, 64, 2, 5, Execution::Parallel).unwrap();
    let back = EmpiricalMeasure::parse(&m.to_text()).unwrap();
    assert_eq!(back.to_text(), m.to_text());
    assert_eq!(back.points, m.points);
    assert_eq!(prokhorov_distance(&m, &back).unwrap(), 0.0);
    let other = sample_mu_hat(&f, 10, 64, 2, 6, Execution::Sequential).unwrap();
    let d = prokhorov_distance(&m, &other).unwrap();
    assert!(d > 0.0 && d <= 1.0);
}

#[test]
fn family_members_through_the_band() {
    let g = g_tilde(&q(1, 1), &[(7, 1)], 1 << 20).unwrap();
    assert!(is_measure_preserving(&g).unwrap().verdict);
    assert_eq!(g, compose(&f_tilde(&q(1, 1)).unwrap(), &lambda_nk(7, 1).unwrap()).unwrap());
    let s = PerturbationSchedule::parse("stage 7 1 1/10 1/4 2\n").unwrap();
    assert_eq!(s.apply(&q(1, 1), 1 << 20).unwrap(), g);
    let cloud = attractor_cloud(&g, &q(1, 8), 50, 100, 20, 4, Execution::Parallel).unwrap();
    let raster = attractor_raster(&cloud, 32, 64, Execution::Parallel).unwrap();
    assert_eq!(raster.counts.iter().map(|&c| c as usize).sum::<usize>(), cloud.len());
    assert_eq!(hausdorff_distance(&cloud.points, &cloud.points, Execution::Sequential).unwrap(), 0.0);
}

#[test]
fn sigma_maps_round_trip() {
    for n in 1..=7 {
        let f = sigma(n).unwrap();
        assert_eq!(read_plmap(&write_plmap(&f)).unwrap(), f);
    }
}

fn rational_unit() -> impl Strategy<Value = Rational> {
    (0i64..=1 << 24).prop_map(|p| Rational::new(p, 1 << 24))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn band_map_semiconjugates(x in rational_unit(), y in rational_unit(), t in 0i64..=8) {
        let f = f_tilde(&q(t, 8)).unwrap();
        let y = &(&y * &q(2, 1)) - &Rational::one();
        let BandPoint::Exact(x2, y2) = band_map(&f, &q(1, 8), &BandPoint::Exact(x.clone(), y)).unwrap() else { unreachable!() };
        prop_assert_eq!(x2, f.eval(&x).unwrap());
        prop_assert!(y2.abs() <= q(1, 16) + q(1, 64));
    }

    #[test]
    fn family_is_one_lipschitz_in_t(a in 0i64..=64, b in 0i64..=64) {
        let (fa, fb) = (f_tilde(&q(a, 64)).unwrap(), f_tilde(&q(b, 64)).unwrap());
        prop_assert!(sup_distance(&fa, &fb).unwrap() <= q((a - b).abs(), 64));
    }

    #[test]
    fn composition_with_identity(t in 0i64..=8) {
        let f = f_tilde(&q(t, 8)).unwrap();
        prop_assert_eq!(compose(&f, &PLMap::unit_identity()).unwrap(), f.clone());
        prop_assert_eq!(compose(&PLMap::unit_identity(), &f).unwrap(), f);
    }
}

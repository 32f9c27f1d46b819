use reslevel_core::choi_kraus::ccp_minimum;
use reslevel_core::diagnostics::{
    classify_divisibility, extrema_times, extremum_initial_condition, first_return, parity_derivative,
    plateau_points, pp_minimum, reentrance_time_within, Regime,
};
use reslevel_core::kernels::KernelCache;
use reslevel_core::liouville::{coherent_generator, tcl_generator};
use reslevel_core::solvers::markov_only;
use reslevel_core::{DensityMatrix, ModelParams};

fn cache(x: f64, y: f64, t_max: f64) -> KernelCache {
    KernelCache::new(&ModelParams::dimensionless(x, y).unwrap(), t_max).unwrap()
}

#[test]
fn regimes_of_reference_parameters() {
    assert_eq!(classify_divisibility(&cache(0.0, 1.0, 5.0), 5.0).unwrap().regime, Regime::Semigroup);
    assert_eq!(classify_divisibility(&cache(4.0, 20.0, 5.0), 5.0).unwrap().regime, Regime::CpDivisible);
    let r = classify_divisibility(&cache(4.0, 1e-3, 5.0), 5.0).unwrap();
    assert_eq!(r.regime, Regime::NonCpDivisible);
    assert!(!r.forbidden_windows().is_empty());
    assert!(r.h_max > 1.0);
}

#[test]
fn forbidden_windows_match_generator_choi() {
    let c = cache(20.0, 1e-3, 2.0);
    let p = *c.params();
    let r = classify_divisibility(&c, 2.0).unwrap();
    let windows = r.forbidden_windows();
    for k in 1..400 {
        let t = 0.005 * k as f64;
        let near_edge = windows.iter().any(|&(a, b)| (t - a).abs() < 1e-6 || (t - b).abs() < 1e-6);
        if near_edge {
            continue;
        }
        let generator = tcl_generator(&p, t, Some(&c)).unwrap().add(&coherent_generator(&p));
        let forbidden = windows.iter().any(|&(a, b)| t > a && t < b);
        assert_eq!(ccp_minimum(&generator) < -1e-12, forbidden, "t = {t}");
    }
}

#[test]
fn pp_minimum_is_positive_for_physical_maps() {
    let c = cache(4.0, 1e-3, 5.0);
    for k in 0..50 {
        assert!(pp_minimum(&c, 0.1 * k as f64).unwrap() >= 0.0);
    }
    assert_eq!(pp_minimum(&c, 0.0).unwrap(), 0.0);
}

#[test]
fn reentrance_is_self_consistent_and_preceded_by_extremum() {
    let c = cache(4.0, 10.0, 20.0);
    let p0 = c.g(2.0).unwrap();
    let tr = reentrance_time_within(&c, p0, 20.0).unwrap().unwrap();
    assert!((tr - 2.0).abs() < 1e-9);
    let parity = reslevel_core::diagnostics::parity_at(&c, p0, tr).unwrap();
    assert!((parity - p0).abs() < 1e-12);
    assert!(extrema_times(&c, p0, tr).unwrap().iter().any(|&t| t <= tr));
}

#[test]
fn markov_evolution_never_returns() {
    let p = ModelParams::dimensionless(4.0, 10.0).unwrap();
    let times: Vec<f64> = (0..=400).map(|k| 0.05 * k as f64).collect();
    for p0 in [-0.9, 0.0, 0.5, 0.95] {
        let traj = markov_only(&p, &DensityMatrix::fermionic(p0).unwrap(), &times).unwrap();
        assert_eq!(first_return(&times, &traj.parities()), None);
    }
}

#[test]
fn extrema_are_stationary_points() {
    // The extremum condition oscillates with a growing envelope, so every
    // initial parity eventually meets it.
    let c = cache(4.0, 1e-3, 20.0);
    for p0 in [-0.5, 0.0, 0.5] {
        let ext = extrema_times(&c, p0, 20.0).unwrap();
        assert!(!ext.is_empty());
        for t in ext {
            assert!(parity_derivative(&c, p0, t).unwrap().abs() < 1e-8);
        }
    }
}

#[test]
fn extremum_condition_round_trips() {
    let c = cache(4.0, 1e-3, 6.0);
    for t_e in [0.3, 1.1, 2.6] {
        let v = extremum_initial_condition(&c, t_e).unwrap();
        if v.abs() <= 1.0 {
            let ext = extrema_times(&c, v, 6.0).unwrap();
            assert!(ext.iter().any(|&t| (t - t_e).abs() < 1e-7), "{t_e}: {ext:?}");
        }
    }
}

#[test]
fn plateau_curvature_vanishes_at_kernel_zero() {
    let c = cache(2.0, 1e-3, 5.0);
    let p0 = extremum_initial_condition(&c, 2.0).unwrap();
    let plateaus = plateau_points(&c, 5.0, Some(p0)).unwrap();
    let second = plateaus.iter().find(|q| q.ell == 2).unwrap();
    assert!((second.t_p - 2.0).abs() < 1e-12);
    assert!((second.nearest_extremum.unwrap() - 2.0).abs() < 1e-8);
    assert!(second.curvature.unwrap().abs() < 1e-6);
    assert!(plateau_points(&cache(0.0, 1.0, 1.0), 1.0, None).unwrap().is_empty());
}

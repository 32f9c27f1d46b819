use num_complex::Complex64 as C;
use proptest::prelude::*;

use reslevel_core::choi_kraus::{
    ccp_minimum, choi, choi_eigenvalues_closed, cp_minimum, kraus_closed_form, kraus_from_choi, sum_rules,
};
use reslevel_core::env_info::{
    env_blocks_from_spectra, env_deviation_from_spectra, env_mode_spectra, env_state_fermionic_closed, info_measures,
};
use reslevel_core::kernels::{g_kernel, h_kernel};
use reslevel_core::liouville::{
    divisor_from_g, evolve_state_from_g, propagator_exponential_from_g, propagator_from_g, tcl_generator_from_h,
};
use reslevel_core::{DensityMatrix, ModelParams};

fn params() -> impl Strategy<Value = ModelParams> {
    (-10.0f64..10.0, -2.0f64..2.0, 0.2f64..3.0, 0.0f64..5.0)
        .prop_map(|(e, mu, gm, temp)| ModelParams::new(e, mu, gm, temp).unwrap())
}

fn bloch_state() -> impl Strategy<Value = DensityMatrix> {
    (0.0f64..=1.0, 0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU).prop_map(|(r, theta, phi)| {
        let field = C::from_polar(0.5 * r * theta.sin(), phi);
        DensityMatrix::new(r * theta.cos(), field).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_and_exponential_propagators_agree(p in params(), t in 0.0f64..20.0, g in -1.5f64..1.5) {
        let closed = propagator_from_g(&p, t, g);
        let expo = propagator_exponential_from_g(&p, t, g);
        prop_assert!(closed.max_abs_diff(&expo) < 1e-10);
    }

    #[test]
    fn propagator_preserves_trace(p in params(), t in 0.0f64..30.0, g in -1.0f64..1.0) {
        prop_assert!(propagator_from_g(&p, t, g).trace_defect() < 1e-14);
    }

    #[test]
    fn divisor_composes_with_propagator(p in params(), t1 in 0.0f64..10.0, t2 in 0.0f64..10.0, g1 in -1.0f64..1.0, g2 in -1.0f64..1.0) {
        // Any pair g(t'), g(t, t') compose to a propagator of the same form;
        // the composed g follows from alpha additivity.
        let (tp, t) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let gm = p.gamma();
        let a1 = -(-gm * tp).exp_m1() * g1;
        let a2 = -(-gm * (t - tp)).exp_m1() * g2;
        let alpha = (-gm * (t - tp)).exp() * a1 + a2;
        let rise = -(-gm * t).exp_m1();
        prop_assume!(rise > 1e-9);
        let composed = divisor_from_g(&p, t, tp, g2).compose(&propagator_from_g(&p, tp, g1));
        prop_assert!(composed.max_abs_diff(&propagator_from_g(&p, t, alpha / rise)) < 1e-12);
    }

    #[test]
    fn complete_positivity_tracks_g(p in params(), t in 0.01f64..10.0, g in -1.5f64..1.5) {
        let m = cp_minimum(&propagator_from_g(&p, t, g));
        if g.abs() <= 1.0 - 1e-6 {
            prop_assert!(m >= -1e-12);
        } else if g.abs() >= 1.0 + 1e-6 {
            prop_assert!(m < 0.0);
        }
    }

    #[test]
    fn rate_bound_matches_generator_choi(p in params(), h in -1.5f64..1.5) {
        let m = ccp_minimum(&tcl_generator_from_h(&p, h));
        if h.abs() <= 1.0 - 1e-9 {
            prop_assert!(m >= -1e-12);
        } else if h.abs() >= 1.0 + 1e-9 {
            prop_assert!(m < 0.0);
        }
    }

    #[test]
    fn choi_spectrum_matches_closed_form(p in params(), t in 0.0f64..10.0, g in -1.0f64..1.0) {
        let mut numeric = choi(&propagator_from_g(&p, t, g)).eigenvalues().to_vec();
        let (l0, l1) = choi_eigenvalues_closed(p.gamma(), t, g);
        let mut closed = vec![l0[0], l0[1], l1[0], l1[1]];
        numeric.sort_by(f64::total_cmp);
        closed.sort_by(f64::total_cmp);
        for (a, b) in numeric.iter().zip(&closed) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((closed.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kraus_operators_reproduce_map(p in params(), t in 0.0f64..15.0, g in -1.0f64..1.0) {
        let target = propagator_from_g(&p, t, g);
        let k = kraus_closed_form(&p, t, g).unwrap();
        prop_assert!(k.to_superop().max_abs_diff(&target) < 1e-12);
        for rule in sum_rules(&p, t, g, &k) {
            prop_assert!(rule.residual < 1e-12, "{}: {}", rule.name, rule.residual);
        }
        let numeric = kraus_from_choi(&choi(&target)).unwrap();
        prop_assert!(numeric.to_superop(target.kind).max_abs_diff(&target) < 1e-10);
    }

    #[test]
    fn evolved_states_stay_in_bloch_ball(p in params(), rho in bloch_state(), t in 0.0f64..10.0, g in -1.0f64..1.0) {
        let out = evolve_state_from_g(&p, t, &rho, g).unwrap();
        prop_assert!(out.bloch_norm_sqr() <= 1.0 + 1e-12);
    }

    #[test]
    fn mismatch_is_bounded(p in params(), rho in bloch_state(), t in 0.0f64..10.0, g in -1.0f64..1.0) {
        let m = info_measures(&p, t, &rho, g).unwrap();
        prop_assert!(m.mismatch >= -1e-12);
        prop_assert!(m.mismatch <= 2.0 * m.s_initial + 1e-12);
    }

    #[test]
    fn environment_blocks_factorize(p in params(), t in 0.0f64..10.0, p0 in -1.0f64..1.0, g in -1.0f64..1.0) {
        let s = env_mode_spectra(p.gamma(), t, p0, g);
        let (even, odd) = env_blocks_from_spectra(&s);
        prop_assert!((even[0] * even[1] - odd[0] * odd[1]).abs() < 1e-12);
        let k = kraus_closed_form(&p, t, g).unwrap();
        let env = env_state_fermionic_closed(&k, p0);
        prop_assert!(env_deviation_from_spectra(&env, &s) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernels_respect_complete_positivity(x in 0.0f64..20.0, y in 1e-3f64..20.0, t in 0.0f64..10.0) {
        // |g| <= 1 for every physical parameter set, while h may exceed 1.
        let p = ModelParams::dimensionless(x, y).unwrap();
        let g = g_kernel(&p, t).unwrap();
        prop_assert!(g.abs() <= 1.0 + 1e-12);
        prop_assert!(h_kernel(&p, t).unwrap().is_finite());
    }
}

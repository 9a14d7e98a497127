use mtlab_core::linearized::{extract_log_slope, solve_linearized, Source, DEFAULT_R_MAX};
use mtlab_core::profiles;
use mtlab_core::quadrature::{
    beta1_over_a, beta2_over_a_sq, beta_from_source, integral_tables, integrate_plane_with_cut, z0_beta_from_entries,
};
use std::f64::consts::PI;

const Z0_BETA: f64 = -6.0 - PI * PI / 3.0;

#[test]
fn z0_slope_from_ode_tail() {
    let sol = solve_linearized(&Source::Z0, DEFAULT_R_MAX, 1e-12).unwrap();
    let s = extract_log_slope(&sol, 1e3, 1e6).unwrap();
    assert!((s.beta - Z0_BETA).abs() < 1e-3, "{s:?}");
}

#[test]
fn z0_slope_from_weighted_integral() {
    let b = beta_from_source(|r| Source::Z0.eval(r), 1e-9).unwrap();
    assert!((b.value - Z0_BETA).abs() < 1e-6, "{b:?}");
}

#[test]
fn ode_and_integral_routes_agree() {
    for src in [Source::W0, Source::Z0, Source::ZaMinusZ0(1.0), Source::ZaMinusZ0(0.3)] {
        let sol = solve_linearized(&src, DEFAULT_R_MAX, 1e-12).unwrap();
        let s = extract_log_slope(&sol, 1e3, 1e6).unwrap();
        let q = beta_from_source(|r| src.eval(r), 1e-9).unwrap();
        assert!(
            (s.beta - q.value).abs() <= s.error + q.abs_error + 1e-6,
            "{src:?}: ode {s:?} vs quad {q:?}"
        );
    }
}

#[test]
fn za_minus_z0_slope_is_two_a() {
    for a in [0.5, 1.0, 2.0] {
        let sol = solve_linearized(&Source::ZaMinusZ0(a), DEFAULT_R_MAX, 1e-12).unwrap();
        let s = extract_log_slope(&sol, 1e3, 1e6).unwrap();
        assert!((s.beta - 2.0 * a).abs() < 1e-3, "a = {a}: {s:?}");
    }
}

#[test]
fn quadratic_source_has_zero_slope() {
    let b = beta_from_source(|r| 2.0 * (profiles::zeta0(r) + profiles::zeta0(r).powi(2)), 1e-11).unwrap();
    assert!(b.value.abs() < 1e-10, "{b:?}");
}

#[test]
fn wa_identity() {
    let w = solve_linearized(&Source::W0, 1e3, 1e-12).unwrap();
    for a in [0.5, 1.0, 3.0] {
        let wa = solve_linearized(&Source::Wa(a), 1e3, 1e-12).unwrap();
        let worst = (0..=2000)
            .map(|i| {
                let r = 1e3 * (i as f64 / 2000.0).powi(3);
                let lhs = wa.value_at_r(r).unwrap() - w.value_at_r(r).unwrap();
                (lhs + a * profiles::zeta0(r)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "a = {a}: {worst:e}");
    }
}

#[test]
fn tables_match_closed_forms() {
    let entries = integral_tables(1e-10).unwrap();
    assert_eq!(entries.len(), 14);
    for e in &entries {
        assert!(e.relative_error() < 1e-8, "{}: {} vs {}", e.spec.name, e.numeric.value, e.closed_form_value);
    }
    assert!((z0_beta_from_entries(&entries) - Z0_BETA).abs() < 1e-8);
    assert!((beta1_over_a(&entries) - 2.0).abs() < 1e-8);
    assert!(beta2_over_a_sq(&entries).abs() < 1e-10);
}

#[test]
fn doubling_cut_radius_is_within_error() {
    let f = |r: f64| profiles::psi0(r) * profiles::eta0(r).powi(4);
    let a = integrate_plane_with_cut(f, 1e-9, 1e6).unwrap();
    let b = integrate_plane_with_cut(f, 1e-9, 2e6).unwrap();
    assert!((a.value - b.value).abs() <= a.abs_error, "{a:?} {b:?}");
}

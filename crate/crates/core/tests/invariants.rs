use mtlab_core::analysis::{self, slack};
use mtlab_core::maximizer::RadialField;
use mtlab_core::perturbations::{Family, PerturbationSpec};
use mtlab_core::profiles;
use mtlab_core::quadrature::{gauss_kronrod, GkOptions};
use mtlab_core::shooting::shoot;
use proptest::prelude::*;
use std::f64::consts::PI;

fn dilog_series(x: f64) -> f64 {
    // Li₂(−x), |x| ≤ 1
    let mut sum = 0.0;
    let mut p = 1.0;
    for k in 1..20000 {
        p *= -x;
        let term = p / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dilog_matches_series(r in 0.0f64..0.999) {
        let got = profiles::dilog_integral(r);
        prop_assert!((got - dilog_series(r * r)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn dilog_inversion(r in 1.0f64..1e4) {
        let x: f64 = r * r;
        let lhs = profiles::dilog_integral(r) + profiles::dilog_integral(1.0 / r);
        let rhs = -PI * PI / 6.0 - 0.5 * x.ln().powi(2);
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn w0_prime_matches_difference_quotient(r in 0.01f64..1e3) {
        let h = 1e-5 * r;
        let fd = (profiles::w0(r + h) - profiles::w0(r - h)) / (2.0 * h);
        prop_assert!((fd - profiles::w0_prime(r)).abs() < 1e-6 * (1.0 + fd.abs()));
    }

    #[test]
    fn gauss_kronrod_is_exact_on_cubics(a in -5.0f64..5.0, len in 0.1f64..10.0, c in prop::array::uniform4(-3.0f64..3.0)) {
        let b = a + len;
        let f = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        let anti = |x: f64| x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)));
        let q = gauss_kronrod(f, a, b, &GkOptions::default()).unwrap();
        let exact = anti(b) - anti(a);
        prop_assert!((q.value - exact).abs() < 1e-11 * (1.0 + exact.abs()));
    }

    #[test]
    fn dirichlet_energy_is_quadratic(scale in 0.1f64..10.0, depth in 0.5f64..5.0) {
        let u = RadialField::on_log_grid(1e-6, 512, |r| (-r.ln()).min(depth)).unwrap();
        let v = RadialField::on_log_grid(1e-6, 512, |r| scale * (-r.ln()).min(depth)).unwrap();
        let ratio = v.dirichlet_energy() / u.dirichlet_energy();
        prop_assert!((ratio - scale * scale).abs() < 1e-12 * scale * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_split_is_additive(mu in 1.0f64..14.0) {
        let s = shoot(mu, &PerturbationSpec::zero(), 1e-10).unwrap();
        prop_assert!((s.energy_inner + s.energy_outer - s.energy_total).abs() < 1e-12 * s.energy_total);
    }

    #[test]
    fn gradient_and_nonlinear_energies_agree(mu in 0.5f64..14.0) {
        let s = shoot(mu, &PerturbationSpec::zero(), 1e-12).unwrap();
        prop_assert!((s.energy_gradient - s.energy_total).abs() < 1e-9 * s.energy_total,
            "{} vs {}", s.energy_gradient, s.energy_total);
    }

    #[test]
    fn profile_stays_below_bubble(mu in 3.0f64..14.0) {
        let s = shoot(mu, &PerturbationSpec::zero(), 1e-12).unwrap();
        let cmp = s.comparison_eta0().unwrap();
        prop_assert!(cmp.holds, "{cmp:?}");
    }

    #[test]
    fn reconstructed_g_matches_closed_form(t in 0.5f64..30.0) {
        let spec = PerturbationSpec::new(Family::PowerLog { a: 1.0, p: 3.0, q: 1.0, cutoff_radius: 1.0 }).unwrap();
        let (g, _) = spec.g_and_prime(t).unwrap();
        prop_assert!((spec.reconstructed_g(t).unwrap() - g).abs() < 1e-9);
    }
}

#[test]
fn refinement_is_stable() {
    let spec = PerturbationSpec::zero();
    for mu in [6.0, 12.0] {
        let coarse = analysis::energy_coefficient(mu, shoot(mu, &spec, 1e-11).unwrap().energy_total);
        let fine = analysis::energy_coefficient(mu, shoot(mu, &spec, 0.5e-11).unwrap().energy_total);
        assert!((coarse - fine).abs() < slack::REFINEMENT_TOL, "mu = {mu}: {coarse} vs {fine}");
    }
}

#[test]
fn energy_concentrates_on_bubble_scale() {
    let a = analysis::concentration_check(6.0, 100.0, 1e-12).unwrap();
    let b = analysis::concentration_check(12.0, 100.0, 1e-12).unwrap();
    assert!(b.deviation <= slack::CONCENTRATION_TOL, "{b:?}");
    assert!(b.deviation <= slack::RATE_FACTOR * 0.25 * a.deviation, "{a:?} {b:?}");
}

#[test]
fn subcritical_exponential_integral_bound() {
    let spec = PerturbationSpec::new(Family::InverseSquare { a: 3.0, cutoff_radius: 2.5 }).unwrap();
    for mu in [10.0, 12.0, 14.0] {
        let b = analysis::subcritical_bound(mu, &spec, 1e-12).unwrap().expect("below 4π");
        assert!(b.holds, "{b:?}");
    }
}

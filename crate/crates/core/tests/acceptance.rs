//! One test per acceptance criterion. Each prints a `[PASS]`/`[FAIL]` line, then asserts.
//!
//! Run with `cargo test -p mtlab-core --test acceptance -- --nocapture --test-threads 1`.

use mtlab_core::analysis::{self, slack};
use mtlab_core::linearized::{extract_log_slope, solve_linearized, Source, DEFAULT_R_MAX};
use mtlab_core::maximizer::{
    first_dirichlet_eigenvalue, maximize_subcritical, multiplier_estimate, pointwise_moser_bound,
    MaximizerOptions,
};
use mtlab_core::perturbations::{check_conditions, default_condition_grid, Family, PerturbationSpec};
use mtlab_core::profiles;
use mtlab_core::quadrature::{
    beta1_over_a, beta2_over_a_sq, beta_from_source, integral_tables, linear_source_entry_sum, z0_beta_closed_form,
    z0_beta_from_entries, Q,
};
use mtlab_core::shooting::shoot;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const FOUR_PI: f64 = 4.0 * PI;
const SHOT_TOL: f64 = 1e-12;

// Pinned tolerances.
const PROFILE_ERR: f64 = 1e-8;
const PROFILE_RUNTIME: Duration = Duration::from_secs(1);
const W0_SLOPE_ERR: f64 = 1e-4;
const Z0_SLOPE_ERR: f64 = 1e-3;
const Z0_QUAD_ERR: f64 = 1e-6;
const TABLE_REL_ERR: f64 = 1e-8;
const TABLE_SUM_ERR: f64 = 1e-8;
const BETA2_ERR: f64 = 1e-10;
const WA_ERR: f64 = 1e-8;
const ENERGY_RUNTIME: Duration = Duration::from_secs(10);
const SMALL_MU_ENERGY: f64 = 0.5;
const MT_BOUND_SLACK: f64 = 1e-6;
const CARLESON_CHANG: f64 = PI * (1.0 + std::f64::consts::E);
const GRID_DOUBLING: f64 = 1e-5;

fn report(n: u32, pass: bool, detail: &str) -> bool {
    println!("[{}] criterion {n}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn z0_constant() -> f64 {
    -6.0 - PI * PI / 3.0
}

fn inverse_square(a: f64) -> PerturbationSpec {
    PerturbationSpec::new(Family::InverseSquare { a, cutoff_radius: Family::DEFAULT_INVERSE_SQUARE_CUTOFF }).unwrap()
}

#[test]
fn criterion_01_w0_ode_matches_closed_form() {
    let start = Instant::now();
    let sol = solve_linearized(&Source::W0, 1e3, 1e-12).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=4000 {
        let r = 1e3 * (i as f64 / 4000.0).powi(3);
        worst = worst.max((sol.value_at_r(r).unwrap() - profiles::w0(r)).abs());
    }
    let elapsed = start.elapsed();
    let pass = report(1, worst <= PROFILE_ERR && elapsed < PROFILE_RUNTIME, &format!(
        "sup |w0_ode - w0| on [0, 1e3] = {worst:.3e} (<= {PROFILE_ERR:e}), runtime {elapsed:?} (< {PROFILE_RUNTIME:?})"
    ));
    assert!(pass);
}

#[test]
fn criterion_02_w0_log_slope() {
    let r = 1e6;
    let closed = r * profiles::w0_prime(r);
    let sol = solve_linearized(&Source::W0, DEFAULT_R_MAX, 1e-12).unwrap();
    let ode = r * sol.derivative_at_r(r).unwrap();
    let pass = report(2, (closed + 2.0).abs() <= W0_SLOPE_ERR && (ode + 2.0).abs() <= W0_SLOPE_ERR, &format!(
        "r w0'(1e6): closed form {closed:.8}, ODE {ode:.8}, target -2 +/- {W0_SLOPE_ERR:e}"
    ));
    assert!(pass);
}

#[test]
fn criterion_03_z0_constant_two_routes() {
    let target = z0_constant();
    let sol = solve_linearized(&Source::Z0, DEFAULT_R_MAX, 1e-12).unwrap();
    let slope = extract_log_slope(&sol, 1e3, 1e6).unwrap();
    let quad = beta_from_source(|r| Source::Z0.eval(r), 1e-9).unwrap();
    let ode_ok = (slope.beta - target).abs() <= Z0_SLOPE_ERR;
    let quad_ok = (quad.value - target).abs() <= Z0_QUAD_ERR;
    let agree = (slope.beta - quad.value).abs() <= slope.error + quad.abs_error + Z0_QUAD_ERR;
    let pass = report(3, ode_ok && quad_ok && agree, &format!(
        "tail slope {:.8} (+/- {:.1e}), quadrature {:.10} (+/- {:.1e}), target {target:.10}",
        slope.beta, slope.error, quad.value, quad.abs_error
    ));
    assert!(pass);
}

#[test]
fn criterion_04_integral_tables() {
    let entries = integral_tables(1e-10).unwrap();
    let worst_rel = entries.iter().map(|e| e.relative_error()).fold(0.0, f64::max);
    let linear_sum = linear_source_entry_sum(&entries);
    let beta1 = beta1_over_a(&entries);
    let beta2 = beta2_over_a_sq(&entries);
    let closed = z0_beta_closed_form();
    let zero = Q::from_integer(0);
    let exact = closed.zeta3 == zero
        && closed.pi4 == zero
        && closed.rational == Q::from_integer(-6)
        && closed.pi2 == Q::new(-1, 3);
    let numeric = z0_beta_from_entries(&entries);
    let pass = entries.len() == 14
        && worst_rel <= TABLE_REL_ERR
        && (linear_sum + 2.0).abs() <= TABLE_SUM_ERR
        && (beta1 - 2.0).abs() <= TABLE_SUM_ERR
        && beta2.abs() <= BETA2_ERR
        && exact
        && (numeric - z0_constant()).abs() <= TABLE_SUM_ERR;
    report(4, pass, &format!(
        "{} entries, worst rel err {worst_rel:.2e}; linear sum {linear_sum:.12} (beta1/a {beta1:.12}); \
         beta2/a^2 {beta2:.2e}; z0 closed form {} + {} zeta3 + {} pi^2 + {} pi^4, numeric {numeric:.12}",
        entries.len(), closed.rational, closed.zeta3, closed.pi2, closed.pi4
    ));
    assert!(pass);
}

#[test]
fn criterion_05_wa_identity() {
    let w = solve_linearized(&Source::W0, 1e3, 1e-12).unwrap();
    let mut worst: f64 = 0.0;
    for a in [0.5, 1.0, 3.0] {
        let wa = solve_linearized(&Source::Wa(a), 1e3, 1e-12).unwrap();
        for i in 0..=2000 {
            let r = 1e3 * (i as f64 / 2000.0).powi(3);
            let lhs = wa.value_at_r(r).unwrap() - w.value_at_r(r).unwrap();
            worst = worst.max((lhs + a * profiles::zeta0(r)).abs());
        }
    }
    let pass = report(5, worst <= WA_ERR, &format!("sup |w_a - w0 + a zeta0| over a in {{0.5, 1, 3}} = {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_06_energy_expansion_window() {
    let spec = PerturbationSpec::zero();
    let (lo, hi) = analysis::coefficient_window(&spec);
    let mut pass = true;
    let mut lines = Vec::new();
    for mu in [6.0, 8.0, 10.0, 12.0] {
        let start = Instant::now();
        let scan = analysis::energy_scan(&[mu], &spec, SHOT_TOL);
        let elapsed = start.elapsed();
        assert!(scan.failures.is_empty(), "{:?}", scan.failures);
        let (c, inner, outer) = (scan.c_values[0], scan.inner_coeffs[0], scan.outer_coeffs[0]);
        let ok = scan.all_in_window()
            && (inner - FOUR_PI).abs() <= slack::COEFF_WINDOW
            && scan.outer_within_bound()
            && elapsed < ENERGY_RUNTIME;
        pass &= ok;
        lines.push(format!(
            "mu={mu}: c={c:.4} in [{lo:.4}, {hi:.4}]? {}; inner {inner:.4} vs 4pi +/- {}; outer {outer:.4} <= {:.4}? {}; {elapsed:.2?}",
            c >= lo && c <= hi,
            slack::COEFF_WINDOW,
            scan.outer_bound,
            outer <= scan.outer_bound
        ));
    }
    report(6, pass, &lines.join(" | "));
    assert!(pass, "energy expansion window violated");
}

#[test]
fn criterion_07_residual_hierarchy() {
    let spec = PerturbationSpec::zero();
    let reports: Vec<_> = [6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|&mu| analysis::residual_hierarchy(mu, &spec, SHOT_TOL).unwrap())
        .collect();
    let (first, last) = (&reports[0], &reports[3]);
    let rate_bound = (first.mu / last.mu).powi(2) * first.sup_w_err * slack::RATE_FACTOR;
    let rate_ok = last.sup_w_err <= rate_bound;

    let sups: Vec<f64> = reports.iter().map(|r| r.phi_over_xi).collect();
    let common: Vec<f64> = reports.iter().map(|r| r.phi_over_xi_common).collect();
    let bound = slack::RATE_FACTOR * sups[0];
    let bounded = sups.iter().all(|&s| s <= bound);
    let increments: Vec<f64> = sups.windows(2).map(|w| w[1] - w[0]).collect();
    let saturating = increments.windows(2).all(|w| w[1] <= w[0]);
    let common_non_increasing = common.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let pass = report(7, rate_ok && bounded && saturating && common_non_increasing, &format!(
        "sup_w_err(6) {:.4e}, sup_w_err(12) {:.4e} <= {rate_bound:.4e}; phi/xi on [0,e^mu] {sups:.3?} <= M={bound:.3}, \
         increments {increments:.3?}; on [0,e^6] {common:.3?}",
        first.sup_w_err, last.sup_w_err
    ));
    assert!(pass);
}

#[test]
fn criterion_08_power_log_expansion() {
    let spec = PerturbationSpec::new(Family::PowerLog { a: 1.0, p: 3.0, q: 0.0, cutoff_radius: Family::DEFAULT_POWER_CUTOFF })
        .unwrap();
    let conditions = check_conditions(&spec, &default_condition_grid());
    let scan = analysis::energy_scan(&[8.0, 12.0], &spec, SHOT_TOL);
    assert!(scan.failures.is_empty(), "{:?}", scan.failures);
    let (lo, hi) = scan.window;
    let pass = scan.all_in_window() && conditions.all_satisfied();
    report(8, pass, &format!(
        "sup h = {:.4}; c(8), c(12) = {:.4?} in [{lo:.4}, {hi:.4}]: {:?}; condh1 {}, condh2 {}",
        spec.sup_h,
        scan.c_values,
        scan.in_window,
        conditions.condh1.verdict.as_str(),
        conditions.condh2.verdict.as_str()
    ));
    assert!(pass, "perturbed expansion window violated");
}

#[test]
fn criterion_09_critical_perturbation() {
    let one = inverse_square(1.0);
    let scan = analysis::energy_scan(&[8.0, 12.0], &one, SHOT_TOL);
    assert!(scan.failures.is_empty(), "{:?}", scan.failures);
    let (lo, hi) = scan.window;
    let window_ok = scan.all_in_window();

    let three = inverse_square(3.0);
    let energies: Vec<f64> = [10.0, 12.0, 14.0].iter().map(|&mu| shoot(mu, &three, SHOT_TOL).unwrap().energy_total).collect();
    let below = energies.iter().all(|&e| e < FOUR_PI);

    let threshold =
        analysis::threshold_a(12.0, Family::DEFAULT_INVERSE_SQUARE_CUTOFF, 0.5, 3.0, 1e-4, SHOT_TOL).unwrap();
    let (t_lo, t_hi) = (
        threshold.predicted_window.0 - slack::THRESHOLD_WINDOW,
        threshold.predicted_window.1 + slack::THRESHOLD_WINDOW,
    );
    let threshold_ok = threshold.a_crit >= t_lo && threshold.a_crit <= t_hi;
    assert_eq!(threshold_ok, threshold.within_predicted());

    let pass = window_ok && below && threshold_ok;
    report(9, pass, &format!(
        "a=1: c = {:.4?} in [{lo:.4}, {hi:.4}]? {window_ok}; a=3: E(10,12,14) = {energies:.6?} < 4pi? {below}; \
         a_crit(12) = {:.5} in [{t_lo:.3}, {t_hi:.3}]? {threshold_ok}",
        scan.c_values, threshold.a_crit
    ));
    assert!(pass, "critical perturbation criterion violated");
}

#[test]
fn criterion_10_comparison_with_bubble() {
    let mut pass = true;
    let mut lines = Vec::new();
    for spec in [PerturbationSpec::zero(), inverse_square(1.0)] {
        for mu in [6.0, 10.0] {
            let cmp = shoot(mu, &spec, SHOT_TOL).unwrap().comparison_eta0().unwrap();
            pass &= cmp.holds;
            lines.push(format!("{} mu={mu}: max(eta-eta0) = {:.4e} over {} samples", spec.family.name(), cmp.max_excess, cmp.samples));
        }
    }
    report(10, pass, &lines.join(" | "));
    assert!(pass);
}

#[test]
fn criterion_11_branch_multiplicity() {
    let spec = PerturbationSpec::zero();
    let grid = analysis::default_branch_grid(60);
    let first = analysis::branch_scan(&grid, &spec, &[], SHOT_TOL).unwrap();
    let level = 0.5 * (FOUR_PI + first.lambda_star);
    let scan = analysis::branch_scan(&grid, &spec, &[level], SHOT_TOL).unwrap();
    let roots = &scan.pairs[0].roots;
    let verified: Vec<_> = roots.iter().filter(|r| r.verified).collect();
    let distinct = verified.windows(2).any(|w| (w[0].mu - w[1].mu).abs() > 1e-3);
    let e_small = shoot(0.1, &spec, SHOT_TOL).unwrap().energy_total;
    let pass = scan.lambda_star > FOUR_PI && verified.len() >= 2 && distinct && e_small < SMALL_MU_ENERGY;
    let described: Vec<String> = roots
        .iter()
        .map(|r| format!("mu={:.6} |E-L|={:.1e} res={:.1e}", r.mu, (r.verified_energy - level).abs(), r.residual))
        .collect();
    report(11, pass, &format!(
        "Lambda* = {:.6} at mu = {:.4}; Lambda = {level:.6}: {}; E(0.1) = {e_small:.5}",
        scan.lambda_star,
        scan.mu_star,
        described.join(", ")
    ));
    assert!(pass);
}

#[test]
fn criterion_12_maximizer() {
    let zero = PerturbationSpec::zero();
    let opts = MaximizerOptions::default();

    let half = maximize_subcritical(0.5 * FOUR_PI, &zero, &opts).unwrap();
    let half_ok = half.value <= 2.0 * PI + MT_BOUND_SLACK;

    let ninety = maximize_subcritical(0.9 * FOUR_PI, &zero, &opts).unwrap();
    let mult = multiplier_estimate(&ninety, &zero);
    let lambda1 = first_dirichlet_eigenvalue();
    let mult_ok = mult.resolved && mult.lambda_hat > 0.0 && mult.lambda_hat < lambda1;

    let near = maximize_subcritical(0.999 * FOUR_PI, &zero, &opts).unwrap();
    let near_ok = near.value > CARLESON_CHANG;

    let moser_ok = [&half, &ninety, &near].iter().all(|r| pointwise_moser_bound(&r.field, r.alpha).holds);

    let fine = MaximizerOptions { nodes: 2 * opts.nodes, ..opts };
    let doubled = maximize_subcritical(0.9 * FOUR_PI, &zero, &fine).unwrap();
    let drift = (doubled.value - ninety.value).abs();
    let doubling_ok = drift <= GRID_DOUBLING;

    let pass = half_ok && mult_ok && near_ok && moser_ok && doubling_ok;
    report(12, pass, &format!(
        "F(0.5*4pi) = {:.8} <= 2pi; lambda(0.9*4pi) = {:.6} in (0, {lambda1:.4}) (residual {:.1e}); \
         F(0.999*4pi) = {:.5} > {CARLESON_CHANG:.5}; Moser bound {moser_ok}; doubling drift {drift:.2e}",
        half.value, mult.lambda_hat, mult.residual, near.value
    ));
    assert!(pass);
}

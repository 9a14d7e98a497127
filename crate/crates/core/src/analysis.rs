//! Energy expansions, residual hierarchy, perturbation thresholds and the
//! `E(μ)` branch.

use crate::error::{Error, Result};
use crate::linearized::{solve_linearized, Source};
use crate::ode::RadialSolution;
use crate::perturbations::{delta_k, Family, PerturbationSpec};
use crate::profiles::{eta0, w0, xi, zeta0};
use crate::shooting::{shoot, shoot_with, ShootOptions, ShotSolution};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const FOUR_PI: f64 = 4.0 * PI;

/// Slack applied to asymptotic statements checked at finite `μ`.
pub mod slack {
    /// Added on both sides of every `μ⁴(E − 4π)` coefficient window.
    pub const COEFF_WINDOW: f64 = 0.5;
    /// Allowed factor over a predicted convergence ratio.
    pub const RATE_FACTOR: f64 = 2.0;
    /// Margin around the predicted `a_crit` window.
    pub const THRESHOLD_WINDOW: f64 = 0.1;
    /// `|E(μ) − Λ|` accepted for a branch root.
    pub const ROOT_TOL: f64 = 1e-6;
    /// PDE residual accepted for a branch root.
    pub const ROOT_RESIDUAL: f64 = 1e-7;
    /// Distance of the `B_{R r_k}` energy from its Liouville limit at `μ = 12`.
    pub const CONCENTRATION_TOL: f64 = 5e-3;
    /// Change of `c(μ)` when the shooting tolerance is halved.
    pub const REFINEMENT_TOL: f64 = 1e-4;
    /// Upper bound for `E(0.1)`.
    pub const SMALL_MU_ENERGY: f64 = 0.5;
}

/// `μ⁴(E − 4π)`.
pub fn energy_coefficient(mu: f64, energy: f64) -> f64 {
    mu.powi(4) * (energy - FOUR_PI)
}

/// Window for `μ⁴(E − 4π)` predicted for the family, including [`slack::COEFF_WINDOW`].
pub fn coefficient_window(spec: &PerturbationSpec) -> (f64, f64) {
    let s = slack::COEFF_WINDOW;
    match spec.family {
        Family::Zero => (FOUR_PI - s, 6.0 * PI + s),
        Family::InverseSquare { a, .. } => {
            (FOUR_PI - FOUR_PI * a - s, FOUR_PI + 2.0 * PI * (1.0 + spec.sup_h) - FOUR_PI * a + s)
        }
        _ => (FOUR_PI - s, FOUR_PI + 2.0 * PI * (1.0 + spec.sup_h) + s),
    }
}

/// Bound on `μ⁴ E_outer`, including [`slack::COEFF_WINDOW`].
pub fn outer_coefficient_bound(spec: &PerturbationSpec) -> f64 {
    2.0 * PI * (1.0 + spec.sup_h) + slack::COEFF_WINDOW
}

/// Least-squares fit `c(μ) = c∞ + c₁/μ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientFit {
    pub c_inf: f64,
    pub c1: f64,
    /// Root mean square of the fit residuals.
    pub rms_residual: f64,
}

impl CoefficientFit {
    pub fn predict(&self, mu: f64) -> f64 {
        self.c_inf + self.c1 / (mu * mu)
    }
}

pub fn fit_inverse_square(mu: &[f64], c: &[f64]) -> Option<CoefficientFit> {
    if mu.len() < 2 || mu.len() != c.len() {
        return None;
    }
    let n = mu.len() as f64;
    let x: Vec<f64> = mu.iter().map(|m| 1.0 / (m * m)).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, c.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(c).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let c1 = sxy / sxx;
    let c_inf = my - c1 * mx;
    let ss: f64 = x.iter().zip(c).map(|(xi, yi)| (yi - c_inf - c1 * xi).powi(2)).sum();
    Some(CoefficientFit { c_inf, c1, rms_residual: (ss / n).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanFailure {
    pub mu: f64,
    pub error: String,
}

/// Energy coefficients along a list of `μ`, sorted by `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionScan {
    pub family: &'static str,
    pub mu_values: Vec<f64>,
    pub energies: Vec<f64>,
    pub c_values: Vec<f64>,
    /// `μ⁴(E_inner − 4π)` with the inner ball `B_{μ³ r_k}`.
    pub inner_coeffs: Vec<f64>,
    /// `μ⁴ E_outer`.
    pub outer_coeffs: Vec<f64>,
    pub window: (f64, f64),
    pub outer_bound: f64,
    pub in_window: Vec<bool>,
    pub fit: Option<CoefficientFit>,
    pub failures: Vec<ScanFailure>,
}

impl ExpansionScan {
    pub fn all_in_window(&self) -> bool {
        self.failures.is_empty() && self.in_window.iter().all(|&b| b)
    }

    pub fn outer_within_bound(&self) -> bool {
        self.outer_coeffs.iter().all(|&o| o <= self.outer_bound)
    }
}

pub fn energy_scan(mu_list: &[f64], spec: &PerturbationSpec, tol: f64) -> ExpansionScan {
    let mut shots: Vec<(f64, Result<ShotSolution>)> = mu_list.par_iter().map(|&mu| (mu, shoot(mu, spec, tol))).collect();
    shots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let window = coefficient_window(spec);
    let mut scan = ExpansionScan {
        family: spec.family.name(),
        mu_values: Vec::new(),
        energies: Vec::new(),
        c_values: Vec::new(),
        inner_coeffs: Vec::new(),
        outer_coeffs: Vec::new(),
        window,
        outer_bound: outer_coefficient_bound(spec),
        in_window: Vec::new(),
        fit: None,
        failures: Vec::new(),
    };
    for (mu, shot) in shots {
        match shot {
            Ok(s) => {
                let m4 = mu.powi(4);
                let c = energy_coefficient(mu, s.energy_total);
                scan.mu_values.push(mu);
                scan.energies.push(s.energy_total);
                scan.c_values.push(c);
                scan.inner_coeffs.push(m4 * (s.energy_inner - FOUR_PI));
                scan.outer_coeffs.push(m4 * s.energy_outer);
                scan.in_window.push(c >= window.0 && c <= window.1);
            }
            Err(e) => scan.failures.push(ScanFailure { mu, error: e.to_string() }),
        }
    }
    scan.fit = fit_inverse_square(&scan.mu_values, &scan.c_values);
    scan
}

/// Sup-norm residuals of the expansion `η = η₀ + w₀/μ² + z₀/μ⁴ + …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub mu: f64,
    /// `sup_{[0,10]} |μ²(η − η₀) − w₀|`.
    pub sup_w_err: f64,
    /// `sup_{[0,10]} |μ⁴(η − η₀ − w₀/μ²) − z₀|`.
    pub sup_z_err: f64,
    /// `sup μ⁶|η − η₀ − w₀/μ² − z₀/μ⁴| / ξ` over `[0, min(e^μ, 10⁸)]`.
    pub phi_over_xi: f64,
    pub phi_radius: f64,
    /// Same quantity over the `μ`-independent window `[0, min(e^μ, e⁶)]`.
    pub phi_over_xi_common: f64,
    /// `sup |η − η₀ − w₀/μ² − z₀/μ⁴ − h(μ)ζ₀| / (δ ξ)` over `[0, μ⁴]`, perturbed runs only.
    pub perturbed_over_xi: Option<f64>,
    pub delta: Option<f64>,
}

const Z0_R_MAX: f64 = 1e8;
const COMMON_PHI_LOG_RADIUS: f64 = 6.0;
const HIERARCHY_SAMPLES: usize = 2000;

/// Uniform samples on `[0, min(r_max, 1)]` followed by log samples up to `r_max`.
fn sample_radii(r_max: f64, n: usize) -> Vec<f64> {
    let lin_end = r_max.min(1.0);
    let mut r: Vec<f64> = (0..=n / 4).map(|i| lin_end * i as f64 / (n / 4) as f64).collect();
    if r_max > 1.0 {
        let m = n - n / 4;
        let l = r_max.ln();
        r.extend((1..=m).map(|i| (l * i as f64 / m as f64).exp()));
    }
    r
}

fn sup_over<F: Fn(f64) -> Result<f64>>(radii: &[f64], f: F) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in radii {
        let v = f(r)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { context: "residual hierarchy", t: r.ln() });
        }
        worst = worst.max(v.abs());
    }
    Ok(worst)
}

fn z0_solution(r_max: f64, tol: f64) -> Result<RadialSolution> {
    solve_linearized(&Source::Z0, r_max.max(10.0), tol)
}

pub fn residual_hierarchy(mu: f64, spec: &PerturbationSpec, tol: f64) -> Result<ResidualReport> {
    let shot = shoot(mu, spec, tol)?;
    let r_edge = shot.log_r.exp();
    let phi_radius = mu.exp().min(Z0_R_MAX).min(r_edge);
    let perturbed_radius = (!spec.is_zero()).then(|| mu.powi(4).min(Z0_R_MAX).min(r_edge));
    let z_max = phi_radius.max(perturbed_radius.unwrap_or(0.0)).max(10.0);
    let z0 = z0_solution(z_max, 1e-12)?;
    let eta = |r: f64| shot.eta.value_at_r(r);
    let (mu2, mu4) = (mu * mu, mu.powi(4));

    let near = sample_radii(10.0, HIERARCHY_SAMPLES);
    let sup_w_err = sup_over(&near, |r| Ok(mu2 * (eta(r)? - eta0(r)) - w0(r)))?;
    let sup_z_err = sup_over(&near, |r| Ok(mu4 * (eta(r)? - eta0(r) - w0(r) / mu2) - z0.value_at_r(r)?))?;
    let remainder = |r: f64| -> Result<f64> { Ok(eta(r)? - eta0(r) - w0(r) / mu2 - z0.value_at_r(r)? / mu4) };
    let phi = |r: f64| -> Result<f64> { Ok(mu.powi(6) * remainder(r)? / xi(r)) };
    let phi_over_xi = sup_over(&sample_radii(phi_radius, HIERARCHY_SAMPLES), phi)?;
    let common = phi_radius.min(COMMON_PHI_LOG_RADIUS.exp());
    let phi_over_xi_common = sup_over(&sample_radii(common, HIERARCHY_SAMPLES), phi)?;

    let (perturbed_over_xi, delta) = match perturbed_radius {
        Some(r_max) => {
            let d = delta_k(mu, spec)?;
            let h_mu = spec.h(mu);
            let v = sup_over(&sample_radii(r_max, HIERARCHY_SAMPLES), |r| {
                Ok((remainder(r)? - h_mu * zeta0(r)) / (d * xi(r)))
            })?;
            (Some(v), Some(d))
        }
        None => (None, None),
    };
    Ok(ResidualReport {
        mu,
        sup_w_err,
        sup_z_err,
        phi_over_xi,
        phi_radius,
        phi_over_xi_common,
        perturbed_over_xi,
        delta,
    })
}

/// Outcome of the bisection for the sign change of `c(μ)` in `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub mu: f64,
    pub a_crit: f64,
    pub bracket: (f64, f64),
    pub c_at_bracket: (f64, f64),
    /// `[1, 3/2 + (sup h)/2]` from the coefficient window.
    pub predicted_window: (f64, f64),
    pub shots: usize,
}

impl ThresholdReport {
    pub fn within_predicted(&self) -> bool {
        let s = slack::THRESHOLD_WINDOW;
        self.a_crit >= self.predicted_window.0 - s && self.a_crit <= self.predicted_window.1 + s
    }
}

fn inverse_square(a: f64, cutoff_radius: f64) -> Result<PerturbationSpec> {
    PerturbationSpec::new(Family::InverseSquare { a, cutoff_radius })
}

/// `c(μ)` for `h = −a t⁻²` cut off below `cutoff_radius`.
pub fn inverse_square_coefficient(a: f64, cutoff_radius: f64, mu: f64, tol: f64) -> Result<f64> {
    let spec = inverse_square(a, cutoff_radius)?;
    Ok(energy_coefficient(mu, shoot(mu, &spec, tol)?.energy_total))
}

/// Bisects `a ∈ [a_lo, a_hi]` for `c(μ_probe) = 0` down to a bracket of width `a_tol`.
pub fn threshold_a(mu_probe: f64, cutoff_radius: f64, a_lo: f64, a_hi: f64, a_tol: f64, tol: f64) -> Result<ThresholdReport> {
    let c = |a: f64| inverse_square_coefficient(a, cutoff_radius, mu_probe, tol);
    let (mut lo, mut hi) = (a_lo, a_hi);
    let (mut c_lo, mut c_hi) = (c(lo)?, c(hi)?);
    let mut shots = 2;
    if !(c_lo > 0.0 && c_hi < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "c(mu = {mu_probe}) does not change sign on [{a_lo}, {a_hi}]: {c_lo}, {c_hi}"
        )));
    }
    while hi - lo > a_tol {
        let mid = 0.5 * (lo + hi);
        let cm = c(mid)?;
        shots += 1;
        if cm > 0.0 {
            (lo, c_lo) = (mid, cm);
        } else {
            (hi, c_hi) = (mid, cm);
        }
    }
    // linear interpolation inside the final bracket
    let a_crit = lo + (hi - lo) * c_lo / (c_lo - c_hi);
    let sup_h = inverse_square(a_crit, cutoff_radius)?.sup_h;
    Ok(ThresholdReport {
        mu: mu_probe,
        a_crit,
        bracket: (lo, hi),
        c_at_bracket: (c_lo, c_hi),
        predicted_window: (1.0, 1.5 + 0.5 * sup_h),
        shots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub mu: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchRoot {
    pub mu: f64,
    pub energy: f64,
    /// `E` and PDE residual from an independent shot at half the tolerance.
    pub verified_energy: f64,
    pub residual: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRoots {
    pub lambda: f64,
    pub roots: Vec<BranchRoot>,
    pub note: Option<String>,
}

/// Samples of `E(μ)`, the sup `Λ*` and the roots of `E(μ) = Λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchScan {
    pub family: &'static str,
    pub points: Vec<BranchPoint>,
    pub lambda_star: f64,
    pub mu_star: f64,
    pub pairs: Vec<LevelRoots>,
    pub failures: Vec<ScanFailure>,
}

/// `n` points on `[0.1, 20]`, denser at small `μ`.
pub fn default_branch_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = (0.1f64.sqrt(), 20f64.sqrt());
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).powi(2)).collect()
}

const GOLDEN_TOL: f64 = 1e-7;
const ROOT_MAX_ITER: usize = 200;

fn energy_at(mu: f64, spec: &PerturbationSpec, tol: f64) -> Result<f64> {
    Ok(shoot(mu, spec, tol)?.energy_total)
}

fn golden_max(spec: &PerturbationSpec, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (energy_at(x1, spec, tol)?, energy_at(x2, spec, tol)?);
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + inv_phi * (b - a);
            f2 = energy_at(x2, spec, tol)?;
        } else {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - inv_phi * (b - a);
            f1 = energy_at(x1, spec, tol)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

/// `(μ, E(μ))` with `E(μ)` closest to `level` among the bisection iterates.
fn bisect_level(spec: &PerturbationSpec, level: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let mut g_lo = energy_at(lo, spec, tol)? - level;
    let mut best = (lo, g_lo + level);
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let e = energy_at(mid, spec, tol)?;
        let g = e - level;
        if g.abs() < (best.1 - level).abs() {
            best = (mid, e);
        }
        if g.abs() <= 0.1 * slack::ROOT_TOL || hi - lo <= 1e-14 * mid {
            break;
        }
        if (g > 0.0) == (g_lo > 0.0) {
            (lo, g_lo) = (mid, g);
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

fn verify_root(mu: f64, energy: f64, level: f64, spec: &PerturbationSpec, tol: f64) -> Result<BranchRoot> {
    let shot = shoot_with(mu, spec, &ShootOptions { tol: 0.5 * tol, ..Default::default() })?;
    let residual = shot.pde_residual(&shot.residual_radii())?;
    let e = shot.energy_total;
    Ok(BranchRoot {
        mu,
        energy,
        verified_energy: e,
        residual,
        verified: (energy - level).abs() <= slack::ROOT_TOL
            && (e - level).abs() <= slack::ROOT_TOL
            && residual <= slack::ROOT_RESIDUAL,
    })
}

pub fn branch_scan(mu_grid: &[f64], spec: &PerturbationSpec, lambda_queries: &[f64], tol: f64) -> Result<BranchScan> {
    let mut samples: Vec<(f64, Result<f64>)> = mu_grid.par_iter().map(|&mu| (mu, energy_at(mu, spec, tol))).collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (mu, e) in samples {
        match e {
            Ok(energy) => points.push(BranchPoint { mu, energy }),
            Err(e) => failures.push(ScanFailure { mu, error: e.to_string() }),
        }
    }
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("branch scan needs at least 3 successful shots, got {}", points.len())));
    }
    let best = (0..points.len()).max_by(|&i, &j| points[i].energy.total_cmp(&points[j].energy)).unwrap();
    let (mu_star, lambda_star) = if best == 0 || best == points.len() - 1 {
        (points[best].mu, points[best].energy)
    } else {
        let refined = golden_max(spec, points[best - 1].mu, points[best + 1].mu, tol)?;
        if refined.1 > points[best].energy {
            refined
        } else {
            (points[best].mu, points[best].energy)
        }
    };

    let mut curve = points.clone();
    if !curve.iter().any(|p| p.mu == mu_star) {
        let at = curve.partition_point(|p| p.mu < mu_star);
        curve.insert(at, BranchPoint { mu: mu_star, energy: lambda_star });
    }

    let mut pairs = Vec::with_capacity(lambda_queries.len());
    for &level in lambda_queries {
        if !(level > FOUR_PI && level < lambda_star) {
            pairs.push(LevelRoots {
                lambda: level,
                roots: Vec::new(),
                note: Some(format!("level {level} outside (4π, Λ*) = ({FOUR_PI}, {lambda_star})")),
            });
            continue;
        }
        let brackets: Vec<(f64, f64)> = curve
            .windows(2)
            .filter(|w| (w[0].energy - level) * (w[1].energy - level) < 0.0)
            .map(|w| (w[0].mu, w[1].mu))
            .collect();
        let roots = brackets
            .par_iter()
            .map(|&(lo, hi)| {
                let (mu, energy) = bisect_level(spec, level, lo, hi, tol)?;
                verify_root(mu, energy, level, spec, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        let note = (roots.len() < 2).then(|| format!("only {} sign change(s) of E - Λ on the grid", roots.len()));
        pairs.push(LevelRoots { lambda: level, roots, note });
    }
    Ok(BranchScan { family: spec.family.name(), points, lambda_star, mu_star, pairs, failures })
}

/// Energy carried by `B_{R r_k}` compared with its Liouville limit `4πR²/(1+R²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub mu: f64,
    pub radius: f64,
    pub energy: f64,
    pub limit: f64,
    pub deviation: f64,
}

pub fn concentration_check(mu: f64, radius: f64, tol: f64) -> Result<ConcentrationReport> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be non-negative, got {radius}")));
    }
    let limit = FOUR_PI * radius * radius / (1.0 + radius * radius);
    if radius == 0.0 {
        return Ok(ConcentrationReport { mu, radius, energy: 0.0, limit, deviation: 0.0 });
    }
    let shot = shoot(mu, &PerturbationSpec::zero(), tol)?;
    let energy = shot.eta.aux_eval(radius.ln().min(shot.log_r), 0)?;
    Ok(ConcentrationReport { mu, radius, energy, limit, deviation: (energy - limit).abs() })
}

/// `∫_{B₁} e^{u²} ≤ π/(1 − E/4π)` along a subcritical branch point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubcriticalBound {
    pub mu: f64,
    pub energy: f64,
    pub exp_integral: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `None` when `E ≥ 4π`, where the bound says nothing.
pub fn subcritical_bound(mu: f64, spec: &PerturbationSpec, tol: f64) -> Result<Option<SubcriticalBound>> {
    let shot = shoot_with(mu, spec, &ShootOptions { tol, with_functional: true, ..Default::default() })?;
    let energy = shot.energy_total;
    if energy >= FOUR_PI {
        return Ok(None);
    }
    let exp_integral = shot.exp_integral.expect("functional requested");
    let bound = PI / (1.0 - energy / FOUR_PI);
    Ok(Some(SubcriticalBound { mu, energy, exp_integral, bound, holds: exp_integral <= bound }))
}

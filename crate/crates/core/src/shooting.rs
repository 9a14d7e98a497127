//! Radial critical points by shooting in the blow-up variable.
//!
//! For a center value `μ` the rescaled profile `η(y) = μ(u(r_k y) − μ)` with
//! `r_k² λ μ² e^{μ²} = 4` solves
//!
//! ```text
//! −Δη = 4 (1 + h(μ + η/μ)) (1 + η/μ²) e^{2η + η²/μ²},   η(0) = 0,
//! ```
//!
//! and the boundary `∂B₁` is the first radius `R = r_k⁻¹` with `η(R) = −μ²`.
//! All large quantities (`R`, `λ`, `e^{μ²}`) are kept in log scale.

use crate::error::{Error, Result};
use crate::ode::{find_event, IvpSpec, RadialEquation, RadialSolution};
use crate::perturbations::PerturbationSpec;
use crate::profiles::eta0;
use serde::Serialize;
use std::f64::consts::PI;

pub const MU_MIN: f64 = 0.05;
pub const MU_MAX: f64 = 24.0;

const AUX_ENERGY: usize = 0;
const AUX_GRADIENT: usize = 1;
const AUX_EXP: usize = 2;
const AUX_G_WEIGHTED: usize = 3;

struct Rescaled<'a> {
    mu: f64,
    spec: &'a PerturbationSpec,
    with_functional: bool,
    with_g: bool,
}

impl Rescaled<'_> {
    #[inline]
    fn exponent(&self, t: f64, eta: f64) -> f64 {
        2.0 * t + 2.0 * eta + eta * eta / (self.mu * self.mu)
    }

    #[inline]
    fn u(&self, eta: f64) -> f64 {
        self.mu + eta / self.mu
    }
}

impl RadialEquation for Rescaled<'_> {
    fn scaled_source(&self, t: f64, eta: f64) -> f64 {
        let mu2 = self.mu * self.mu;
        4.0 * (1.0 + self.spec.h(self.u(eta))) * (1.0 + eta / mu2) * self.exponent(t, eta).exp()
    }

    fn origin_source(&self, _eta0: f64) -> f64 {
        4.0 * (1.0 + self.spec.h(self.mu))
    }

    fn aux_count(&self) -> usize {
        2 + usize::from(self.with_functional) + usize::from(self.with_g)
    }

    fn aux_rates(&self, t: f64, eta: f64, v: f64, out: &mut [f64]) {
        let mu2 = self.mu * self.mu;
        let e = self.exponent(t, eta).exp();
        let a = 1.0 + eta / mu2;
        let u = self.u(eta);
        out[AUX_ENERGY] = 8.0 * PI * (1.0 + self.spec.h(u)) * a * a * e;
        out[AUX_GRADIENT] = 2.0 * PI * v * v / mu2;
        if self.with_functional {
            out[AUX_EXP] = 2.0 * PI * e;
        }
        if self.with_g {
            let g = self.spec.g_and_prime(u).map_or(0.0, |(g, _)| g);
            out[AUX_G_WEIGHTED] = 2.0 * PI * g * e;
        }
    }

    fn aux_initial(&self, t: f64, eta: f64, v: f64, out: &mut [f64]) {
        self.aux_rates(t, eta, v, out);
        out[AUX_ENERGY] *= 0.5;
        // v² grows like r⁴
        out[AUX_GRADIENT] *= 0.25;
        for x in &mut out[AUX_EXP..self.aux_count()] {
            *x *= 0.5;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Relative and absolute local error tolerance of the integrator.
    pub tol: f64,
    /// Inner ball is `B_{s r_k}` with `s = μ^p`.
    pub split_exponent: f64,
    /// Also accumulate `∫e^{u²} dx` and, when `g` is known, `∫(1 + g(u)) e^{u²} dx`.
    pub with_functional: bool,
    /// Step cap in `t`; keeps the derivative of the continuous extension accurate.
    pub max_step: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { tol: 1e-12, split_exponent: 3.0, with_functional: false, max_step: 0.025 }
    }
}

/// A radial critical point with center value `μ`.
#[derive(Debug, Clone)]
pub struct ShotSolution {
    pub mu: f64,
    /// `log R` with `R = r_k⁻¹`, the boundary radius in rescaled coordinates.
    pub log_r: f64,
    pub log_lambda: f64,
    /// `∫ λ u²(1+h(u)) e^{u²} dx`.
    pub energy_total: f64,
    /// Same integral over `B_{s r_k}`, `s = μ^p`.
    pub energy_inner: f64,
    pub energy_outer: f64,
    /// `∫ |∇u|² dx` accumulated separately.
    pub energy_gradient: f64,
    pub split_exponent: f64,
    /// `∫_{B₁} e^{u²} dx` when requested.
    pub exp_integral: Option<f64>,
    /// `∫_{B₁}(1 + g(u)) e^{u²} dx` when requested and `g` is known.
    pub functional: Option<f64>,
    pub eta: RadialSolution,
    pub perturbation: PerturbationSpec,
}

pub fn shoot(mu: f64, spec: &PerturbationSpec, tol: f64) -> Result<ShotSolution> {
    shoot_with(mu, spec, &ShootOptions { tol, ..Default::default() })
}

pub fn shoot_with(mu: f64, spec: &PerturbationSpec, opts: &ShootOptions) -> Result<ShotSolution> {
    if !(MU_MIN..=MU_MAX).contains(&mu) {
        return Err(Error::InvalidArgument(format!("mu = {mu} outside [{MU_MIN}, {MU_MAX}]")));
    }
    if !(opts.tol > 0.0) || !(opts.split_exponent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need positive tolerance and split exponent (tol = {}, p = {})",
            opts.tol, opts.split_exponent
        )));
    }
    let with_functional = opts.with_functional;
    let with_g = with_functional && spec.family.has_g() && !spec.is_zero();
    let eq = Rescaled { mu, spec, with_functional, with_g };
    let mu2 = mu * mu;
    let t_split = opts.split_exponent * mu.ln();
    let ivp = IvpSpec::new(0.0, 0.5 * mu2 + 50.0)
        .with_tol(opts.tol, opts.tol)
        .with_stop_points(vec![t_split])
        .with_max_step(opts.max_step);
    let (log_r, eta) = find_event(&eq, &ivp, -mu2).map_err(|e| match e {
        Error::NoCrossing { t_end, last, .. } => Error::EventNotReached {
            mu,
            reason: format!("eta = {last} > -mu^2 at t = {t_end}"),
        },
        other => other,
    })?;

    let energy_total = eta.aux_last(AUX_ENERGY);
    let energy_inner = if t_split >= log_r {
        energy_total
    } else {
        match eta.t.iter().position(|&t| t == t_split) {
            Some(i) => eta.aux_at(i, AUX_ENERGY),
            None => eta.aux_eval(t_split, AUX_ENERGY)?,
        }
    };
    let scale = (mu2 - 2.0 * log_r).exp();
    let exp_integral = with_functional.then(|| eta.aux_last(AUX_EXP) * scale);
    let functional = match (exp_integral, with_g) {
        (Some(plain), true) => Some(plain + eta.aux_last(AUX_G_WEIGHTED) * scale),
        (Some(plain), false) if spec.family.has_g() => Some(plain),
        _ => None,
    };
    let sol = ShotSolution {
        mu,
        log_r,
        log_lambda: 4f64.ln() + 2.0 * log_r - mu2 - 2.0 * mu.ln(),
        energy_total,
        energy_inner,
        energy_outer: energy_total - energy_inner,
        energy_gradient: eta.aux_last(AUX_GRADIENT),
        split_exponent: opts.split_exponent,
        exp_integral,
        functional,
        eta,
        perturbation: *spec,
    };
    if !sol.energy_total.is_finite() || !sol.log_lambda.is_finite() {
        return Err(Error::NonFinite { context: "shot energy", t: log_r });
    }
    Ok(sol)
}

impl ShotSolution {
    /// `u(r) = μ + η(rR)/μ` for `r ∈ [0, 1]`.
    pub fn physical_profile(&self, r_phys: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r_phys) {
            return Err(Error::InvalidArgument(format!("physical radius {r_phys} outside [0, 1]")));
        }
        if r_phys == 0.0 {
            return Ok(self.mu);
        }
        let t = (r_phys.ln() + self.log_r).min(self.log_r);
        Ok(self.mu + self.eta.eval(t)?.0 / self.mu)
    }

    /// `λ = e^{log λ}`; may underflow for large `μ`.
    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }

    /// `(−Δu, λ(1+h(u))u e^{u²})` in log scale at a physical radius.
    fn log_sides(&self, r_phys: f64) -> Result<(f64, f64)> {
        let t = r_phys.ln() + self.log_r;
        let (eta, _) = self.eta.eval(t)?;
        let rate = self.eta.v_rate(t)?;
        let u = self.mu + eta / self.mu;
        let log_lhs = (-rate).ln() - self.mu.ln() - 2.0 * r_phys.ln();
        let log_rhs = self.log_lambda + u * u + (u * (1.0 + self.perturbation.h(u))).ln();
        Ok((log_lhs, log_rhs))
    }

    /// `max |Δu + λ(1+h(u))u e^{u²}| / (1 + |Δu|)` over the given radii in `(0, 1)`.
    ///
    /// `Δu` is taken from the derivative of the continuous extension of `r u′`, the
    /// right side from `u` alone, so the two sides are independent evaluations.
    pub fn pde_residual(&self, radii: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &r in radii {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidArgument(format!("sample radius {r} outside (0, 1)")));
            }
            let (log_lhs, log_rhs) = self.log_sides(r)?;
            let res = if log_lhs.is_nan() || log_rhs.is_nan() {
                f64::INFINITY
            } else {
                let weight = 1.0 / (1.0 + (-log_lhs).exp());
                (1.0 - (log_rhs - log_lhs).exp()).abs() * weight
            };
            worst = worst.max(res);
        }
        Ok(worst)
    }

    /// Default residual sample: 200 log-spaced radii from `10⁻³ R⁻¹` to `0.999`.
    pub fn residual_radii(&self) -> Vec<f64> {
        let lo = (-self.log_r - 3.0f64 * 10f64.ln()).max(-700.0);
        let hi = 0.999f64.ln();
        (0..200).map(|i| (lo + (hi - lo) * i as f64 / 199.0).exp()).collect()
    }

    /// Checks `η ≤ η₀` on 400 log-spaced rescaled radii in `[μ², R]`.
    pub fn comparison_eta0(&self) -> Result<ComparisonReport> {
        let (lo, hi) = ((self.mu * self.mu).ln(), self.log_r);
        let mut samples = Vec::with_capacity(400);
        for i in 0..400 {
            let t = lo + (hi - lo) * i as f64 / 399.0;
            samples.push((t, self.eta.eval(t)?.0));
        }
        Ok(compare_with_eta0(&samples))
    }

    /// Same solution with `η` shifted by `delta`; used to exercise residual checks.
    #[doc(hidden)]
    pub fn with_shifted_profile(&self, delta: f64) -> Self {
        let mut s = self.clone();
        s.eta.shift_values(delta);
        s
    }

    pub fn summary(&self, max_nodes: usize) -> ShotSummary {
        let idx = self.eta.downsample_indices(max_nodes);
        ShotSummary {
            mu: self.mu,
            log_r: self.log_r,
            log_lambda: self.log_lambda,
            energy_total: self.energy_total,
            energy_inner: self.energy_inner,
            energy_outer: self.energy_outer,
            energy_gradient: self.energy_gradient,
            c: self.mu.powi(4) * (self.energy_total - 4.0 * PI),
            split_exponent: self.split_exponent,
            exp_integral: self.exp_integral,
            functional: self.functional,
            family: self.perturbation.family.name(),
            profile_t: idx.iter().map(|&i| self.eta.t[i]).collect(),
            profile_eta: idx.iter().map(|&i| self.eta.u[i]).collect(),
            profile_r_eta_prime: idx.iter().map(|&i| self.eta.v[i]).collect(),
        }
    }
}

/// Outcome of the pointwise comparison with the Liouville bubble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    pub samples: usize,
    /// Largest `η − η₀` seen.
    pub max_excess: f64,
    /// `(log ρ, η − η₀)` at the first sample with `η > η₀`.
    pub first_violation: Option<(f64, f64)>,
}

/// Compares `(t, η(eᵗ))` samples against `η₀(eᵗ)`.
pub fn compare_with_eta0(samples: &[(f64, f64)]) -> ComparisonReport {
    let mut max_excess = f64::NEG_INFINITY;
    let mut first_violation = None;
    for &(t, eta) in samples {
        let excess = eta - eta0(t.exp());
        max_excess = max_excess.max(excess);
        if excess > 0.0 && first_violation.is_none() {
            first_violation = Some((t, excess));
        }
    }
    ComparisonReport { holds: first_violation.is_none(), samples: samples.len(), max_excess, first_violation }
}

/// Serializable scalars of a shot plus a down-sampled profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotSummary {
    pub mu: f64,
    pub log_r: f64,
    pub log_lambda: f64,
    pub energy_total: f64,
    pub energy_inner: f64,
    pub energy_outer: f64,
    pub energy_gradient: f64,
    /// `μ⁴(E − 4π)`.
    pub c: f64,
    pub split_exponent: f64,
    pub exp_integral: Option<f64>,
    pub functional: Option<f64>,
    pub family: &'static str,
    pub profile_t: Vec<f64>,
    pub profile_eta: Vec<f64>,
    pub profile_r_eta_prime: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbations::Family;

    #[test]
    fn rejects_mu_outside_range() {
        let z = PerturbationSpec::zero();
        assert!(shoot(0.01, &z, 1e-10).is_err());
        assert!(shoot(25.0, &z, 1e-10).is_err());
    }

    #[test]
    fn boundary_and_center_values() {
        let s = shoot(3.0, &PerturbationSpec::zero(), 1e-11).unwrap();
        assert!(s.physical_profile(1.0).unwrap().abs() < 1e-9);
        assert_eq!(s.physical_profile(0.0).unwrap(), 3.0);
        assert!((s.physical_profile(1e-9).unwrap() - 3.0).abs() < 1e-6);
        assert!((s.eta.u.last().unwrap() + 9.0).abs() < 1e-9);
    }

    #[test]
    fn log_lambda_relation() {
        let s = shoot(4.0, &PerturbationSpec::zero(), 1e-11).unwrap();
        let lhs = 2.0 * (-s.log_r) + s.log_lambda + 2.0 * 4f64.ln() + 16.0;
        assert!((lhs - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn energy_split_adds_up() {
        let s = shoot(6.0, &PerturbationSpec::zero(), 1e-12).unwrap();
        assert!((s.energy_inner + s.energy_outer - s.energy_total).abs() < 1e-14);
        assert!(s.energy_outer > 0.0 && s.energy_inner > 4.0 * PI * 0.99);
    }

    #[test]
    fn integration_by_parts_identity() {
        for mu in [1.0, 6.0] {
            let s = shoot(mu, &PerturbationSpec::zero(), 1e-12).unwrap();
            let rel = (s.energy_total - s.energy_gradient).abs() / s.energy_total;
            assert!(rel < 1e-6, "mu = {mu}: {rel:e}");
        }
    }

    #[test]
    fn residual_small_and_sensitive() {
        let s = shoot(6.0, &PerturbationSpec::zero(), 1e-12).unwrap();
        let radii = s.residual_radii();
        let res = s.pde_residual(&radii).unwrap();
        assert!(res <= 1e-7, "{res:e}");
        let bad = s.with_shifted_profile(1e-3).pde_residual(&radii).unwrap();
        assert!(bad > 1e-4, "{bad:e}");
    }

    #[test]
    fn comparison_detects_violation() {
        let samples: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 * 0.3, eta0((i as f64 * 0.3).exp()) + 1.0)).collect();
        let rep = compare_with_eta0(&samples);
        assert!(!rep.holds && rep.first_violation.is_some());
    }

    #[test]
    fn functional_only_with_g() {
        let opts = ShootOptions { with_functional: true, ..Default::default() };
        let s = shoot_with(2.0, &PerturbationSpec::zero(), &opts).unwrap();
        assert!(s.functional.unwrap() > PI);
        let inv = PerturbationSpec::new(Family::InverseSquare { a: 1.0, cutoff_radius: 2.5 }).unwrap();
        let s = shoot_with(2.0, &inv, &opts).unwrap();
        assert!(s.functional.is_none() && s.exp_integral.unwrap() > PI);
    }

    #[test]
    fn summary_is_downsampled() {
        let s = shoot(8.0, &PerturbationSpec::zero(), 1e-12).unwrap();
        let sum = s.summary(64);
        assert!(sum.profile_t.len() <= 64);
        assert_eq!(*sum.profile_t.last().unwrap(), s.log_r);
    }
}

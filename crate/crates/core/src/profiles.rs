//! Closed-form limit profiles of the blow-up analysis and their radial derivatives.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod, GkOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileId {
    Eta0,
    W0,
    Zeta0,
    Psi,
    Psi0,
    Xi,
}

impl ProfileId {
    pub const ALL: [ProfileId; 6] = [Self::Eta0, Self::W0, Self::Zeta0, Self::Psi, Self::Psi0, Self::Xi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Eta0 => "eta0",
            Self::W0 => "w0",
            Self::Zeta0 => "zeta0",
            Self::Psi => "psi",
            Self::Psi0 => "psi0",
            Self::Xi => "xi",
        }
    }
}

/// Value and first derivative of a profile at radius `r ≥ 0`.
pub fn eval_profile(id: ProfileId, r: f64) -> Result<(f64, f64)> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("profile radius must be finite and non-negative, got {r}")));
    }
    Ok(match id {
        ProfileId::Eta0 => (eta0(r), eta0_prime(r)),
        ProfileId::W0 => (w0(r), w0_prime(r)),
        ProfileId::Zeta0 => (zeta0(r), zeta0_prime(r)),
        ProfileId::Psi => (psi(r), psi_prime(r)),
        ProfileId::Psi0 => (psi0(r), psi0_prime(r)),
        ProfileId::Xi => (xi(r), 1.0 / (1.0 + r)),
    })
}

/// Standard Liouville bubble `−log(1+r²)`.
#[inline]
pub fn eta0(r: f64) -> f64 {
    -(r * r).ln_1p()
}

#[inline]
pub fn eta0_prime(r: f64) -> f64 {
    -2.0 * r / (1.0 + r * r)
}

/// `−r²/(1+r²)`, the response to a unit source.
#[inline]
pub fn zeta0(r: f64) -> f64 {
    let r2 = r * r;
    -r2 / (1.0 + r2)
}

#[inline]
pub fn zeta0_prime(r: f64) -> f64 {
    let d = 1.0 + r * r;
    -2.0 * r / (d * d)
}

/// Radial kernel element `(r²−1)/(r²+1)` of the linearized Liouville operator.
#[inline]
pub fn psi(r: f64) -> f64 {
    let r2 = r * r;
    (r2 - 1.0) / (r2 + 1.0)
}

#[inline]
pub fn psi_prime(r: f64) -> f64 {
    let d = 1.0 + r * r;
    4.0 * r / (d * d)
}

/// Weight `(r²−1)/(1+r²)³`.
#[inline]
pub fn psi0(r: f64) -> f64 {
    let r2 = r * r;
    let d = 1.0 + r2;
    (r2 - 1.0) / (d * d * d)
}

#[inline]
pub fn psi0_prime(r: f64) -> f64 {
    let r2 = r * r;
    let d2 = (1.0 + r2) * (1.0 + r2);
    4.0 * r * (2.0 - r2) / (d2 * d2)
}

/// Logarithmic envelope `1 + log(1+r)`.
#[inline]
pub fn xi(r: f64) -> f64 {
    1.0 + r.ln_1p()
}

/// Beyond this `τ`, `∫ τ/(e^τ−1)` has a tail below 1e−15.
const DILOG_TAU_CAP: f64 = 40.0;

fn bose_kernel(tau: f64) -> f64 {
    if tau.abs() < 1e-4 {
        1.0 - 0.5 * tau + tau * tau / 12.0
    } else {
        tau / tau.exp_m1()
    }
}

/// `∫₁^{1+r²} log t/(1−t) dt`, which equals `Li₂(−r²)`.
///
/// Evaluated as `−L²/2 − ∫₀^L τ/(e^τ−1) dτ` with `L = log(1+r²)`, which keeps the
/// removable point `t = 1` at the endpoint `τ = 0`.
pub fn dilog_integral(r: f64) -> f64 {
    let l = (r * r).ln_1p();
    if l == 0.0 {
        return 0.0;
    }
    let upper = l.min(DILOG_TAU_CAP);
    let opts = GkOptions {
        abs_tol: 1e-13,
        rel_tol: 0.0,
        max_panels: 200,
        initial_panels: upper.ceil().max(1.0) as usize,
    };
    let bose = gauss_kronrod(bose_kernel, 0.0, upper, &opts)
        .map(|q| q.value)
        .expect("smooth kernel on a bounded interval");
    -0.5 * l * l - bose
}

/// First correction profile `w₀`, the zero-data solution of `−Δw = 4e^{2η₀}(η₀+η₀²+2w)`.
pub fn w0(r: f64) -> f64 {
    let r2 = r * r;
    let e = eta0(r);
    let q = (1.0 - r2) / (1.0 + r2);
    e + 2.0 * r2 / (1.0 + r2) - 0.5 * e * e + q * dilog_integral(r)
}

/// Analytic `w₀′`; the `η₀η₀′` term and the Leibniz term of the integral are merged
/// into `−2 log(1+r²)/(r(1+r²))`.
pub fn w0_prime(r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let r2 = r * r;
    let d = 1.0 + r2;
    let q_prime = -4.0 * r / (d * d);
    eta0_prime(r) + 4.0 * r / (d * d) - 2.0 * r2.ln_1p() / (r * d) + q_prime * dilog_integral(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Independent Li₂ oracle: Bernoulli series in `u = −log(1−z)` for `|z| ≤ 1`,
    /// inversion formula otherwise.
    fn li2_neg(x: f64) -> f64 {
        fn series(z: f64) -> f64 {
            // B_{2k}/(2k+1)!
            const C: [f64; 12] = [
                -1.0 / 4.0,
                1.0 / 36.0,
                -1.0 / 3600.0,
                1.0 / 211_680.0,
                -1.0 / 10_886_400.0,
                1.0 / 526_901_760.0,
                -4.064_761_645_144_226e-11,
                8.921_691_020_456_453e-13,
                -1.993_929_586_072_108e-14,
                4.518_980_029_619_918e-16,
                -1.035_651_761_218_125e-17,
                2.395_218_621_026_186_7e-19,
            ];
            let u = -(-z).ln_1p();
            let mut s = u;
            s += C[0] * u * u;
            let mut p = u;
            for c in &C[1..] {
                p *= u * u;
                s += c * p;
            }
            s
        }
        if x <= 1.0 {
            series(-x)
        } else {
            -PI * PI / 6.0 - 0.5 * x.ln().powi(2) - series(-1.0 / x)
        }
    }

    #[test]
    fn dilog_matches_series_oracle() {
        for &r in &[0.0, 1e-3, 0.1, 0.5, 0.9, 1.0, 1.3, 2.0, 10.0, 100.0, 1e4] {
            let got = dilog_integral(r);
            let want = li2_neg(r * r);
            assert!((got - want).abs() < 1e-12, "r = {r}: {got} vs {want}");
        }
    }

    #[test]
    fn dilog_at_one_is_minus_pi_sq_over_twelve() {
        assert!((dilog_integral(1.0) + PI * PI / 12.0).abs() < 1e-13);
    }

    #[test]
    fn dilog_large_r_is_minus_two_log_squared() {
        let r: f64 = 100.0;
        let lead = -2.0 * r.ln().powi(2);
        assert!(((dilog_integral(r) - lead) / lead).abs() < 0.05);
    }

    #[test]
    fn profile_values_at_reference_points() {
        let (v, d) = eval_profile(ProfileId::Eta0, 1.0).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-15 && (d + 1.0).abs() < 1e-15);
        assert_eq!(eval_profile(ProfileId::W0, 0.0).unwrap(), (0.0, 0.0));
        let w1 = eval_profile(ProfileId::W0, 1.0).unwrap().0;
        let ln2 = 2f64.ln();
        assert!((w1 - (1.0 - ln2 - 0.5 * ln2 * ln2)).abs() < 1e-13);
        assert!((w1 - 0.0666263).abs() < 1e-7);
        assert_eq!(eval_profile(ProfileId::Zeta0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(eval_profile(ProfileId::Psi0, 1.0).unwrap().0, 0.0);
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(eval_profile(ProfileId::Eta0, f64::NAN).is_err());
        assert!(eval_profile(ProfileId::Psi, -1.0).is_err());
    }

    fn radial_laplacian(d1: f64, d2: f64, r: f64) -> f64 {
        d2 + d1 / r
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
    }

    #[test]
    fn liouville_equations_hold() {
        for r in log_grid(1e-3, 1e3, 400) {
            let d = 1.0 + r * r;
            let bubble = 4.0 / (d * d);
            let eta_dd = -2.0 * (1.0 - r * r) / (d * d);
            let zeta_dd = -2.0 * (1.0 - 3.0 * r * r) / (d * d * d);
            let psi_dd = 4.0 * (1.0 - 3.0 * r * r) / (d * d * d);
            let r1 = -radial_laplacian(eta0_prime(r), eta_dd, r) - bubble;
            let r2 = -radial_laplacian(zeta0_prime(r), zeta_dd, r) - bubble * (1.0 + 2.0 * zeta0(r));
            let r3 = -radial_laplacian(psi_prime(r), psi_dd, r) - 2.0 * bubble * psi(r);
            assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12 && r3.abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn w0_derivative_matches_finite_difference() {
        for &r in &[0.01, 0.3, 1.0, 2.5, 17.0, 400.0] {
            let h = 1e-5 * r;
            let fd = (w0(r + h) - w0(r - h)) / (2.0 * h);
            assert!((fd - w0_prime(r)).abs() < 1e-7 * (1.0 + w0_prime(r).abs()), "r = {r}");
        }
    }

    #[test]
    fn w0_tracks_eta0_and_slope_tends_to_minus_two() {
        let mut spread: f64 = 0.0;
        for r in log_grid(1.0, 1e6, 60) {
            spread = spread.max((w0(r) - eta0(r)).abs());
        }
        assert!(spread < 10.0, "w0 - eta0 unbounded: {spread}");
        for r in log_grid(1e2, 1e6, 40) {
            let dev = (r * w0_prime(r) + 2.0).abs();
            assert!(dev <= 10.0 * r.ln().powi(2) / (r * r), "r = {r}: {dev}");
        }
    }

    #[test]
    fn psi0_derivative_matches_finite_difference() {
        for &r in &[0.2, 1.0, std::f64::consts::SQRT_2, 3.0] {
            let h = 1e-6;
            let fd = (psi0(r + h) - psi0(r - h)) / (2.0 * h);
            assert!((fd - psi0_prime(r)).abs() < 1e-8);
        }
    }
}

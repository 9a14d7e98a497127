//! The linearized Liouville family `−Δw = 4e^{2η₀}(f + 2w)` with zero Cauchy data,
//! and extraction of the logarithmic slope `β` in `w(r) = β log r + O(1)`.

use crate::error::{Error, Result};
use crate::ode::{integrate, IvpSpec, RadialEquation, RadialSolution};
use crate::profiles::{eta0, w0, zeta0};
use std::fmt;
use std::sync::Arc;

/// Source term `f(r)`.
#[derive(Clone)]
pub enum Source {
    /// `η₀ + η₀²`, whose response is `w₀`.
    W0,
    /// `w₀ + 2w₀² + 4η₀w₀ + 2η₀²w₀ + η₀³ + ½η₀⁴`, whose response is `z₀`.
    Z0,
    /// `1`, whose response is `ζ₀`.
    Zeta0,
    /// Source of `z_a − z₀`.
    ZaMinusZ0(f64),
    /// `η₀ + η₀² − a`, whose response is `w_a`.
    Wa(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::W0 => write!(f, "W0"),
            Self::Z0 => write!(f, "Z0"),
            Self::Zeta0 => write!(f, "Zeta0"),
            Self::ZaMinusZ0(a) => write!(f, "ZaMinusZ0({a})"),
            Self::Wa(a) => write!(f, "Wa({a})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Source {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::W0 => {
                let e = eta0(r);
                e + e * e
            }
            Self::Z0 => {
                let e = eta0(r);
                let w = w0(r);
                w + 2.0 * w * w + 4.0 * e * w + 2.0 * e * e * w + e.powi(3) + 0.5 * e.powi(4)
            }
            Self::Zeta0 => 1.0,
            Self::ZaMinusZ0(a) => {
                let e = eta0(r);
                let z = zeta0(r);
                let w = w0(r);
                2.0 * a * a * (z + z * z)
                    + a * (e - e * e - 2.0 * w + z * (-2.0 * e * e - 4.0 * e - 4.0 * w - 1.0))
            }
            Self::Wa(a) => {
                let e = eta0(r);
                e + e * e - a
            }
            Self::Custom(f) => f(r),
        }
    }
}

/// `−Δw = 4e^{2η₀}(f + 2w)` in the log-radius; `4e^{2t+2η₀} = sech²t`.
struct Linearized<'a> {
    source: &'a Source,
}

fn sech_sq(t: f64) -> f64 {
    let e = (-2.0 * t.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

impl RadialEquation for Linearized<'_> {
    fn scaled_source(&self, t: f64, w: f64) -> f64 {
        sech_sq(t) * (self.source.eval(t.exp()) + 2.0 * w)
    }
    fn origin_source(&self, w0: f64) -> f64 {
        4.0 * (self.source.eval(0.0) + 2.0 * w0)
    }
}

pub const DEFAULT_R_MAX: f64 = 1e6;

/// Zero-data solution of the linearized equation up to `r_max`, local error `tol`.
pub fn solve_linearized(source: &Source, r_max: f64, tol: f64) -> Result<RadialSolution> {
    if !(r_max > 1e-4 && r_max <= 1e8) {
        return Err(Error::InvalidArgument(format!("r_max must lie in (1e-4, 1e8], got {r_max}")));
    }
    let sol = integrate(&Linearized { source }, &IvpSpec::to_radius(0.0, r_max).with_tol(tol, tol))?;
    check_log_growth(&sol)?;
    Ok(sol)
}

/// Rejects solutions whose `|w|/log r` keeps growing over the last decades.
fn check_log_growth(sol: &RadialSolution) -> Result<()> {
    let t_end = sol.t_last();
    if t_end < 5.0 {
        return Ok(());
    }
    let ratio = |t: f64| -> Result<f64> { Ok(sol.eval(t)?.0.abs() / t) };
    let mid = ratio(0.5 * t_end)?;
    let end = ratio(t_end)?;
    // a logarithmic profile has |w|/log r converging; polynomial growth doubles it at least
    if !end.is_finite() || end > 2.0 * mid + 10.0 {
        return Err(Error::UnboundedGrowth { r: t_end.exp(), ratio: end });
    }
    Ok(())
}

/// Estimate of `β = lim r w′(r)` with a spread-based error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSlope {
    pub beta: f64,
    pub error: f64,
    pub samples: usize,
}

impl LogSlope {
    /// Fails if the spread exceeds `tol`.
    pub fn require(self, tol: f64) -> Result<Self> {
        if self.error > tol {
            return Err(Error::SlopeNotConverged { spread: self.error, tol });
        }
        Ok(self)
    }
}

const SLOPE_SAMPLES: usize = 65;

/// Median of `r w′(r)` over the upper half of `SLOPE_SAMPLES` log-spaced radii in
/// `[r_lo, r_hi]`; the error is the half-range of the same samples.
pub fn extract_log_slope(sol: &RadialSolution, r_lo: f64, r_hi: f64) -> Result<LogSlope> {
    if !(r_lo > 0.0 && r_hi >= 100.0 * r_lo) {
        return Err(Error::InvalidArgument(format!("need 0 < r_lo and r_hi >= 100 r_lo, got [{r_lo}, {r_hi}]")));
    }
    let (t_lo, t_hi) = (r_lo.ln(), r_hi.ln());
    let mut tail = Vec::with_capacity(SLOPE_SAMPLES / 2 + 1);
    for i in SLOPE_SAMPLES / 2..SLOPE_SAMPLES {
        let t = t_lo + (t_hi - t_lo) * i as f64 / (SLOPE_SAMPLES - 1) as f64;
        tail.push(sol.eval(t)?.1);
    }
    tail.sort_by(f64::total_cmp);
    let n = tail.len();
    let median = if n % 2 == 1 { tail[n / 2] } else { 0.5 * (tail[n / 2 - 1] + tail[n / 2]) };
    Ok(LogSlope {
        beta: median,
        error: 0.5 * (tail[n - 1] - tail[0]),
        samples: n,
    })
}

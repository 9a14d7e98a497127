//! Perturbation families `(g, h)` with `h = g + g′/(2t)`, and numerical checks of the
//! decay conditions `t²h(t) → 0` and `t⁴|h(t + s(8 log t + 1)/t) − h(t)| → 0`.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod, GkOptions};
use serde::Serialize;

/// Smooth step: `0` on `(−∞, 1]`, `1` on `[2, ∞)`, built from `φ(x) = e^{−1/x}`.
pub fn cutoff(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        let a = (-1.0 / (x - 1.0)).exp();
        let b = (-1.0 / (2.0 - x)).exp();
        a / (a + b)
    }
}

pub fn cutoff_prime(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        0.0
    } else {
        let a = (-1.0 / (x - 1.0)).exp();
        let b = (-1.0 / (2.0 - x)).exp();
        let s = a + b;
        a * b * (1.0 / ((x - 1.0) * (x - 1.0)) + 1.0 / ((2.0 - x) * (2.0 - x))) / (s * s)
    }
}

/// Builds `h(t) = g(t) + g′(t)/(2t)` from a rule returning `(g(t), g′(t))`.
pub fn h_from_g<G: Fn(f64) -> (f64, f64)>(g: G) -> impl Fn(f64) -> Result<f64> {
    move |t| {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("h is defined for finite t != 0, got {t}")));
        }
        let (v, d) = g(t);
        Ok(v + d / (2.0 * t))
    }
}

/// Built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Zero,
    /// `g(t) = a χ(|t|/R) log^q|t| |t|^{−p}`.
    PowerLog { a: f64, p: f64, q: f64, cutoff_radius: f64 },
    /// `g(t) = a χ(|t|/R) cos(log|t|) |t|^{−p}`.
    Oscillating { a: f64, p: f64, cutoff_radius: f64 },
    /// `h(t) = −a t^{−2} χ(|t|/R)`; no closed-form `g`.
    InverseSquare { a: f64, cutoff_radius: f64 },
}

impl Family {
    pub const NAMES: [&'static str; 4] = ["zero", "power-log", "oscillating", "inverse-square"];

    pub const DEFAULT_POWER_CUTOFF: f64 = 1.0;
    /// Keeps `|h| ≤ 1/2` for `a ≤ 3`.
    pub const DEFAULT_INVERSE_SQUARE_CUTOFF: f64 = 2.5;

    /// Family by name; `None` parameters take their defaults (`a = 1`, `p = 3`, `q = 0`).
    pub fn from_name(name: &str, a: Option<f64>, p: Option<f64>, q: Option<f64>, r: Option<f64>) -> Result<Self> {
        let a = a.unwrap_or(1.0);
        let p = p.unwrap_or(3.0);
        Ok(match name {
            "zero" => Family::Zero,
            "power-log" => Family::PowerLog {
                a,
                p,
                q: q.unwrap_or(0.0),
                cutoff_radius: r.unwrap_or(Self::DEFAULT_POWER_CUTOFF),
            },
            "oscillating" => Family::Oscillating { a, p, cutoff_radius: r.unwrap_or(Self::DEFAULT_POWER_CUTOFF) },
            "inverse-square" => {
                Family::InverseSquare { a, cutoff_radius: r.unwrap_or(Self::DEFAULT_INVERSE_SQUARE_CUTOFF) }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown family '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Zero => "zero",
            Family::PowerLog { .. } => "power-log",
            Family::Oscillating { .. } => "oscillating",
            Family::InverseSquare { .. } => "inverse-square",
        }
    }

    pub fn has_g(&self) -> bool {
        !matches!(self, Family::InverseSquare { .. })
    }

    /// `(g(t), g′(t))`; `None` for families given through `h` only.
    pub fn g_and_prime(&self, t: f64) -> Option<(f64, f64)> {
        let s = t.abs();
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let (v, d) = match *self {
            Family::Zero => (0.0, 0.0),
            Family::PowerLog { a, p, q, cutoff_radius: r } => {
                let x = s / r;
                if x <= 1.0 {
                    return Some((0.0, 0.0));
                }
                let (c, dc) = (cutoff(x), cutoff_prime(x) / r);
                let l = s.ln();
                let lq = l.powf(q);
                let dlq = if q == 0.0 { 0.0 } else { q * l.powf(q - 1.0) / s };
                let tp = s.powf(-p);
                let core = lq * tp;
                let dcore = dlq * tp - p * lq * tp / s;
                (a * c * core, a * (dc * core + c * dcore))
            }
            Family::Oscillating { a, p, cutoff_radius: r } => {
                let x = s / r;
                if x <= 1.0 {
                    return Some((0.0, 0.0));
                }
                let (c, dc) = (cutoff(x), cutoff_prime(x) / r);
                let l = s.ln();
                let tp = s.powf(-p);
                let core = l.cos() * tp;
                let dcore = -l.sin() * tp / s - p * core / s;
                (a * c * core, a * (dc * core + c * dcore))
            }
            Family::InverseSquare { .. } => return None,
        };
        Some((v, sign * d))
    }

    /// `h(t)`; even in `t`, and `h(0)` is the limit value `0` for every family.
    pub fn h(&self, t: f64) -> f64 {
        let s = t.abs();
        match *self {
            Family::Zero => 0.0,
            Family::InverseSquare { a, cutoff_radius: r } => {
                let c = cutoff(s / r);
                if c == 0.0 {
                    0.0
                } else {
                    -a * c / (s * s)
                }
            }
            _ => {
                let (g, dg) = self.g_and_prime(s).expect("family with g");
                if g == 0.0 && dg == 0.0 {
                    0.0
                } else {
                    g + dg / (2.0 * s)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            Family::Zero => Ok(()),
            Family::PowerLog { a, p, q, cutoff_radius } => {
                if !(a.is_finite() && p.is_finite() && q.is_finite()) {
                    return bad(format!("non-finite parameters a = {a}, p = {p}, q = {q}"));
                }
                if !(cutoff_radius >= 1.0) {
                    return bad(format!("power-log cutoff radius must be >= 1, got {cutoff_radius}"));
                }
                Ok(())
            }
            Family::Oscillating { a, p, cutoff_radius } => {
                if !(a.is_finite() && p.is_finite() && cutoff_radius > 0.0) {
                    return bad(format!("invalid oscillating parameters a = {a}, p = {p}, R = {cutoff_radius}"));
                }
                Ok(())
            }
            Family::InverseSquare { a, cutoff_radius } => {
                if !(a.is_finite() && cutoff_radius > 0.0) {
                    return bad(format!("invalid inverse-square parameters a = {a}, R = {cutoff_radius}"));
                }
                Ok(())
            }
        }
    }
}

const BOUND_GRID_POINTS: usize = 10_000;
const BOUND_GRID_LO: f64 = 1e-3;
const BOUND_GRID_HI: f64 = 1e8;

/// A validated perturbation with its numerically computed range of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub family: Family,
    pub sup_h: f64,
    pub inf_h: f64,
    /// `inf g` over the same grid; `None` without `g`.
    pub inf_g: Option<f64>,
}

impl PerturbationSpec {
    /// Validates the family and computes `sup h`, `inf h` on a log grid of `[1e−3, 1e8]`
    /// together with the tail limit `0`.
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        let (mut sup_h, mut inf_h) = (0.0_f64, 0.0_f64);
        let mut inf_g: Option<f64> = family.has_g().then_some(0.0);
        let span = (BOUND_GRID_HI / BOUND_GRID_LO).ln();
        for i in 0..BOUND_GRID_POINTS {
            let t = BOUND_GRID_LO * (span * i as f64 / (BOUND_GRID_POINTS - 1) as f64).exp();
            let h = family.h(t);
            if !h.is_finite() {
                return Err(Error::NonFinite { context: "perturbation h", t });
            }
            sup_h = sup_h.max(h);
            inf_h = inf_h.min(h);
            if let (Some(ig), Some((g, _))) = (inf_g.as_mut(), family.g_and_prime(t)) {
                *ig = ig.min(g);
            }
        }
        if !(inf_h > -1.0) {
            return Err(Error::InvalidArgument(format!("inf h = {inf_h} violates inf h > -1")));
        }
        if let Some(ig) = inf_g {
            if !(ig > -1.0) {
                return Err(Error::InvalidArgument(format!("inf g = {ig} violates inf g > -1")));
            }
        }
        Ok(Self { family, sup_h, inf_h, inf_g })
    }

    pub fn zero() -> Self {
        Self::new(Family::Zero).expect("zero family is valid")
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Zero)
    }

    #[inline]
    pub fn h(&self, t: f64) -> f64 {
        self.family.h(t)
    }

    /// `(g, g′)` from the closed form, or `None` for `h`-only families.
    pub fn g_and_prime(&self, t: f64) -> Option<(f64, f64)> {
        self.family.g_and_prime(t)
    }

    /// `g(t) = ∫₀ᵗ 2s h(s) e^{s²−t²} ds`, the solution of `g′ + 2tg = 2th` with `g(0) = 0`.
    ///
    /// For `h`-only families this is a numerical reconstruction, not part of the family.
    pub fn reconstructed_g(&self, t: f64) -> Result<f64> {
        let s = t.abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        let res = gauss_kronrod(
            |x| 2.0 * x * self.h(x) * ((x - s) * (x + s)).exp(),
            0.0,
            s,
            &GkOptions { abs_tol: 1e-14, rel_tol: 1e-12, initial_panels: (s.ceil() as usize).max(1), ..Default::default() },
        )?;
        Ok(res.value)
    }

    /// Threshold `3/2 + (sup h)/2` for the inverse-square tail.
    pub fn critical_a_upper(&self) -> f64 {
        1.5 + 0.5 * self.sup_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Sampled quantity of one decay condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionTrace {
    pub name: &'static str,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    /// `sup_{t′ ≥ t} |value|`.
    pub envelope: Vec<f64>,
    /// Envelope at `t_max/100` over envelope at `t_max/10⁴`.
    pub decay_ratio: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub family: Family,
    pub sup_h: f64,
    pub inf_h: f64,
    pub bounds_ok: bool,
    pub condh1: ConditionTrace,
    pub condh2: ConditionTrace,
}

impl ConditionReport {
    pub fn all_satisfied(&self) -> bool {
        self.bounds_ok && self.condh1.verdict == Verdict::Satisfied && self.condh2.verdict == Verdict::Satisfied
    }
}

const S_GRID_CONDITION: usize = 21;
const S_GRID_DELTA: usize = 201;
const NEGLIGIBLE: f64 = 1e-12;

/// `sup_{s ∈ [−1,1]} |h(t + s(8 log t + 1)/t) − h(t)|` on an `n`-point grid in `s`.
fn oscillation(spec: &PerturbationSpec, t: f64, n: usize) -> f64 {
    let h0 = spec.h(t);
    let width = (8.0 * t.ln() + 1.0) / t;
    (0..n)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            (spec.h(t + s * width) - h0).abs()
        })
        .fold(0.0, f64::max)
}

fn trace(name: &'static str, t: &[f64], value: Vec<f64>) -> ConditionTrace {
    let mut envelope = vec![0.0; value.len()];
    let mut running: f64 = 0.0;
    for i in (0..value.len()).rev() {
        running = running.max(value[i].abs());
        envelope[i] = running;
    }
    let t_max = *t.last().unwrap_or(&1.0);
    let env_at = |x: f64| {
        let i = t.partition_point(|&ti| ti < x).min(t.len().saturating_sub(1));
        envelope.get(i).copied().unwrap_or(0.0)
    };
    let (late, early) = (env_at(t_max / 100.0), env_at(t_max / 1e4));
    let decay_ratio = if early > 0.0 { late / early } else { 0.0 };
    let verdict = if early < NEGLIGIBLE || decay_ratio < 0.5 {
        Verdict::Satisfied
    } else if decay_ratio > 0.9 {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    ConditionTrace { name, t: t.to_vec(), value, envelope, decay_ratio, verdict }
}

/// Default sample grid: 41 log-spaced points on `[10, 10⁶]`.
pub fn default_condition_grid() -> Vec<f64> {
    (0..41).map(|i| 10f64.powf(1.0 + 5.0 * i as f64 / 40.0)).collect()
}

/// Samples `t²h(t)` and the `t⁴`-weighted oscillation of `h` and classifies their trend.
pub fn check_conditions(spec: &PerturbationSpec, t_samples: &[f64]) -> ConditionReport {
    let mut t: Vec<f64> = t_samples.iter().copied().filter(|&x| x > 1.0 && x.is_finite()).collect();
    t.sort_by(f64::total_cmp);
    let q1 = t.iter().map(|&x| x * x * spec.h(x)).collect();
    let q2 = t.iter().map(|&x| x.powi(4) * oscillation(spec, x, S_GRID_CONDITION)).collect();
    ConditionReport {
        family: spec.family,
        sup_h: spec.sup_h,
        inf_h: spec.inf_h,
        bounds_ok: spec.inf_h > -1.0 && spec.sup_h.is_finite(),
        condh1: trace("condh1", &t, q1),
        condh2: trace("condh2", &t, q2),
    }
}

/// `δ = max{ sup_s |h(μ + s(8 log μ + 1)/μ) − h(μ)|, μ^{−6}, |h(μ)|/μ² }`.
pub fn delta_k(mu: f64, spec: &PerturbationSpec) -> Result<f64> {
    if !(mu > 1.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta_k needs mu > 1, got {mu}")));
    }
    let osc = oscillation(spec, mu, S_GRID_DELTA);
    Ok(osc.max(mu.powi(-6)).max(spec.h(mu).abs() / (mu * mu)))
}

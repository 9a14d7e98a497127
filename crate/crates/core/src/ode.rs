//! Dormand-Prince 5(4) integration of radial equations in the log-radius `t = log r`.
//!
//! A radial solution of `−Δu = S(r, u)` satisfies, with `v = r u′`,
//!
//! ```text
//! u̇ = v,    v̇ = −e^{2t} S(e^t, u).
//! ```
//!
//! Equations supply the product `F(t, u) = e^{2t} S(e^t, u)` directly so that the
//! exponentials can be combined before evaluation. Integration starts at a small
//! radius from second-order Taylor data at the origin.

use crate::error::{Error, Result};

/// Maximum number of auxiliary quadrature states carried with `(u, v)`.
pub const MAX_AUX: usize = 6;
const DIM: usize = 2 + MAX_AUX;

/// A radial equation `−Δu = S(r, u)` written in the log-radius.
pub trait RadialEquation {
    /// `e^{2t}·S(e^t, u)`.
    fn scaled_source(&self, t: f64, u: f64) -> f64;

    /// `S(0, u0)`, used for the Taylor start at the origin.
    fn origin_source(&self, u0: f64) -> f64;

    fn aux_count(&self) -> usize {
        0
    }

    /// `d/dt` of each auxiliary state.
    fn aux_rates(&self, _t: f64, _u: f64, _v: f64, _out: &mut [f64]) {}

    /// Auxiliary values at the start radius. The default assumes rates of order `r²`
    /// near the origin, for which `∫_{-∞}^{t} rate = rate(t)/2`.
    fn aux_initial(&self, t: f64, u: f64, v: f64, out: &mut [f64]) {
        self.aux_rates(t, u, v, out);
        for x in out.iter_mut() {
            *x *= 0.5;
        }
    }
}

impl<E: RadialEquation + ?Sized> RadialEquation for &E {
    fn scaled_source(&self, t: f64, u: f64) -> f64 {
        (**self).scaled_source(t, u)
    }
    fn origin_source(&self, u0: f64) -> f64 {
        (**self).origin_source(u0)
    }
    fn aux_count(&self) -> usize {
        (**self).aux_count()
    }
    fn aux_rates(&self, t: f64, u: f64, v: f64, out: &mut [f64]) {
        (**self).aux_rates(t, u, v, out)
    }
    fn aux_initial(&self, t: f64, u: f64, v: f64, out: &mut [f64]) {
        (**self).aux_initial(t, u, v, out)
    }
}

/// Equation given by a plain rule `S(r, u)` for `−Δu`.
pub struct SourceFn<F: Fn(f64, f64) -> f64>(pub F);

impl<F: Fn(f64, f64) -> f64> RadialEquation for SourceFn<F> {
    fn scaled_source(&self, t: f64, u: f64) -> f64 {
        (2.0 * t).exp() * (self.0)(t.exp(), u)
    }
    fn origin_source(&self, u0: f64) -> f64 {
        (self.0)(0.0, u0)
    }
}

/// Cauchy data, range and tolerances of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct IvpSpec {
    /// `u(0)`; the origin is a regular point so `u′(0) = 0`.
    pub u0: f64,
    pub r_start: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Values of `t` that must appear as grid nodes.
    pub stop_points: Vec<f64>,
    pub max_steps: usize,
    /// Upper bound on the step in `t`.
    pub max_step: f64,
}

impl IvpSpec {
    pub const DEFAULT_R_START: f64 = 1e-6;

    pub fn new(u0: f64, t_end: f64) -> Self {
        Self {
            u0,
            r_start: Self::DEFAULT_R_START,
            t_end,
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            stop_points: Vec::new(),
            max_steps: 1_000_000,
            max_step: f64::INFINITY,
        }
    }

    pub fn to_radius(u0: f64, r_end: f64) -> Self {
        Self::new(u0, r_end.ln())
    }

    pub fn with_tol(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_stop_points(mut self, points: Vec<f64>) -> Self {
        self.stop_points = points;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn t_start(&self) -> f64 {
        self.r_start.ln()
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.r_start > 0.0 && self.r_start <= 1e-4) {
            return Err(Error::InvalidArgument(format!("start radius {} outside (0, 1e-4]", self.r_start)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument(format!("max_step must be positive, got {}", self.max_step)));
        }
        if !self.u0.is_finite() || !(self.t_end > self.t_start()) {
            return Err(Error::InvalidArgument(format!(
                "need finite u0 and t_end > log r_start (u0 = {}, t_end = {})",
                self.u0, self.t_end
            )));
        }
        Ok(())
    }
}

/// Taylor start `(u(r_s), r_s u′(r_s))` from `u ≈ u0 − ¼ S(0,u0) r²`.
pub fn series_start<E: RadialEquation + ?Sized>(eq: &E, u0: f64, r_start: f64) -> (f64, f64) {
    let s0 = eq.origin_source(u0);
    let r2 = r_start * r_start;
    (u0 - 0.25 * s0 * r2, -0.5 * s0 * r2)
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    /// Five coefficient rows of the quartic interpolant, `DIM` entries each.
    coef: [[f64; DIM]; 5],
}

impl DenseStep {
    fn state(&self, t: f64, k: usize) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let c = &self.coef;
        c[0][k] + th * (c[1][k] + th1 * (c[2][k] + th * (c[3][k] + th1 * c[4][k])))
    }

    fn derivative(&self, t: f64, k: usize) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let c = &self.coef;
        let p = c[2][k] + th * (c[3][k] + th1 * c[4][k]);
        let dp = c[3][k] + (1.0 - 2.0 * th) * c[4][k];
        let q = c[1][k] + th1 * p;
        let dq = -p + th1 * dp;
        (q + th * dq) / self.h
    }
}

/// Solution of a radial equation on a log-radius grid with dense output.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    /// Grid nodes `t = log r`; the first node is `log r_start`.
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    /// `r·u′(r)` at the nodes.
    pub v: Vec<f64>,
    aux: Vec<f64>,
    aux_count: usize,
    steps: Vec<DenseStep>,
    u0: f64,
    origin_source: f64,
}

impl RadialSolution {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn r_start(&self) -> f64 {
        self.t[0].exp()
    }

    pub fn t_first(&self) -> f64 {
        self.t[0]
    }

    pub fn t_last(&self) -> f64 {
        *self.t.last().expect("solution has at least one node")
    }

    pub fn aux_count(&self) -> usize {
        self.aux_count
    }

    /// Auxiliary state `j` at node `i`.
    pub fn aux_at(&self, i: usize, j: usize) -> f64 {
        self.aux[i * self.aux_count + j]
    }

    pub fn aux_last(&self, j: usize) -> f64 {
        self.aux_at(self.len() - 1, j)
    }

    fn step_index(&self, t: f64) -> usize {
        let i = self.steps.partition_point(|s| s.t0 <= t);
        i.saturating_sub(1).min(self.steps.len() - 1)
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if t.is_nan() || t > self.t_last() + 1e-13 * self.t_last().abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} beyond the integrated range (last node {})",
                self.t_last()
            )));
        }
        Ok(())
    }

    /// `(u, r u′)` at `t = log r`; below the start radius the Taylor data is used.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        self.check_range(t)?;
        if t <= self.t[0] || self.steps.is_empty() {
            let r2 = (2.0 * t).exp();
            return Ok((self.u0 - 0.25 * self.origin_source * r2, -0.5 * self.origin_source * r2));
        }
        let s = &self.steps[self.step_index(t)];
        Ok((s.state(t, 0), s.state(t, 1)))
    }

    pub fn value_at_r(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(self.u0);
        }
        Ok(self.eval(r.ln())?.0)
    }

    /// `u′(r)`.
    pub fn derivative_at_r(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(self.eval(r.ln())?.1 / r)
    }

    /// `dv/dt` from the derivative of the continuous extension.
    pub fn v_rate(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        if t <= self.t[0] || self.steps.is_empty() {
            return Ok(-self.origin_source * (2.0 * t).exp());
        }
        Ok(self.steps[self.step_index(t)].derivative(t, 1))
    }

    /// Auxiliary state `j` at `t` from the continuous extension.
    pub fn aux_eval(&self, t: f64, j: usize) -> Result<f64> {
        self.check_range(t)?;
        if t <= self.t[0] || self.steps.is_empty() {
            return Ok(self.aux_at(0, j) * (2.0 * (t - self.t[0])).exp());
        }
        Ok(self.steps[self.step_index(t)].state(t, 2 + j))
    }

    /// Adds `delta` to `u` everywhere, leaving `r u′` untouched.
    #[doc(hidden)]
    pub fn shift_values(&mut self, delta: f64) {
        self.u0 += delta;
        for u in &mut self.u {
            *u += delta;
        }
        for s in &mut self.steps {
            s.coef[0][0] += delta;
        }
    }

    /// Keeps every `stride`-th node, always including the first and last.
    pub fn downsample_indices(&self, max_nodes: usize) -> Vec<usize> {
        let n = self.len();
        if n <= max_nodes || max_nodes < 2 {
            return (0..n).collect();
        }
        let stride = (n - 1).div_ceil(max_nodes - 1);
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        idx
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type State = [f64; DIM];

struct System<'a, E: RadialEquation + ?Sized> {
    eq: &'a E,
    n: usize,
}

impl<E: RadialEquation + ?Sized> System<'_, E> {
    fn rhs(&self, t: f64, y: &State, dy: &mut State) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -self.eq.scaled_source(t, y[0]);
        if self.n > 2 {
            self.eq.aux_rates(t, y[0], y[1], &mut dy[2..self.n]);
        }
        if dy[..self.n].iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "radial source", t });
        }
        Ok(())
    }
}

fn combine(y: &State, h: f64, terms: &[(f64, &State)], n: usize) -> State {
    let mut out = *y;
    for i in 0..n {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Location of a level crossing of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub level: f64,
}

fn solve<E: RadialEquation + ?Sized>(eq: &E, spec: &IvpSpec, event: Option<EventSpec>) -> Result<RadialSolution> {
    spec.validate()?;
    let n_aux = eq.aux_count();
    if n_aux > MAX_AUX {
        return Err(Error::InvalidArgument(format!("at most {MAX_AUX} auxiliary states, got {n_aux}")));
    }
    let n = 2 + n_aux;
    let sys = System { eq, n };

    let t_start = spec.t_start();
    let (u_s, v_s) = series_start(eq, spec.u0, spec.r_start);
    let mut y: State = [0.0; DIM];
    y[0] = u_s;
    y[1] = v_s;
    if n_aux > 0 {
        eq.aux_initial(t_start, u_s, v_s, &mut y[2..n]);
    }

    let mut stops: Vec<f64> = spec
        .stop_points
        .iter()
        .copied()
        .filter(|&s| s > t_start && s < spec.t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(spec.t_end);
    let mut next_stop = 0;

    let mut sol = RadialSolution {
        t: vec![t_start],
        u: vec![y[0]],
        v: vec![y[1]],
        aux: y[2..n].to_vec(),
        aux_count: n_aux,
        steps: Vec::new(),
        u0: spec.u0,
        origin_source: eq.origin_source(spec.u0),
    };

    let mut t = t_start;
    let mut k1: State = [0.0; DIM];
    sys.rhs(t, &y, &mut k1)?;
    let mut h = 1e-2_f64.min(spec.t_end - t_start);
    let mut steps = 0usize;
    let h_min = 1e-13;

    loop {
        if steps >= spec.max_steps {
            return Err(Error::TooManySteps { steps, t_target: spec.t_end });
        }
        let target = stops[next_stop];
        h = h.min(spec.max_step);
        let mut hit_stop = false;
        if t + h >= target - 1e-14 * target.abs().max(1.0) {
            h = target - t;
            hit_stop = true;
        }
        if h < h_min {
            if hit_stop {
                h = h.max(1e-300);
            } else {
                return Err(Error::StepUnderflow { t, h });
            }
        }

        let mut k2 = [0.0; DIM];
        let mut k3 = [0.0; DIM];
        let mut k4 = [0.0; DIM];
        let mut k5 = [0.0; DIM];
        let mut k6 = [0.0; DIM];
        let mut k7 = [0.0; DIM];
        let stage = (|| -> Result<State> {
            sys.rhs(t + C2 * h, &combine(&y, h, &[(A21, &k1)], n), &mut k2)?;
            sys.rhs(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)], n), &mut k3)?;
            sys.rhs(t + C4 * h, &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)], n), &mut k4)?;
            sys.rhs(
                t + C5 * h,
                &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], n),
                &mut k5,
            )?;
            sys.rhs(
                t + h,
                &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], n),
                &mut k6,
            )?;
            let y1 = combine(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], n);
            sys.rhs(t + h, &y1, &mut k7)?;
            Ok(y1)
        })();
        let y1 = match stage {
            Ok(y1) => y1,
            Err(Error::NonFinite { .. }) if h > h_min => {
                // overflow inside a trial step: shrink and retry
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = spec.abs_tol + spec.rel_tol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sk) * (e / sk);
        }
        let err = (err_sq / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            continue;
        }

        if err <= 1.0 {
            steps += 1;
            let mut coef = [[0.0; DIM]; 5];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                coef[0][i] = y[i];
                coef[1][i] = ydiff;
                coef[2][i] = bspl;
                coef[3][i] = ydiff - h * k7[i] - bspl;
                coef[4][i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { t0: t, h, coef };
            let t_new = if hit_stop { target } else { t + h };

            if let Some(ev) = event {
                let g0 = y[0] - ev.level;
                let g1 = y1[0] - ev.level;
                if g0 != 0.0 && g0.signum() != g1.signum() {
                    let t_star = bisect_crossing(&step, t, t_new, ev.level, g0);
                    let mut ys = [0.0; DIM];
                    for (i, slot) in ys.iter_mut().enumerate().take(n) {
                        *slot = step.state(t_star, i);
                    }
                    sol.steps.push(step);
                    push_node(&mut sol, t_star, &ys, n);
                    return Ok(sol);
                }
            }

            sol.steps.push(step);
            t = t_new;
            y = y1;
            k1 = k7;
            push_node(&mut sol, t, &y, n);

            if hit_stop {
                next_stop += 1;
                if next_stop == stops.len() {
                    if let Some(ev) = event {
                        return Err(Error::NoCrossing { level: ev.level, t_end: spec.t_end, last: y[0] });
                    }
                    return Ok(sol);
                }
            }
        }

        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= if err <= 1.0 { fac } else { fac.min(1.0) };
    }
}

fn push_node(sol: &mut RadialSolution, t: f64, y: &State, n: usize) {
    sol.t.push(t);
    sol.u.push(y[0]);
    sol.v.push(y[1]);
    sol.aux.extend_from_slice(&y[2..n]);
}

fn bisect_crossing(step: &DenseStep, mut lo: f64, mut hi: f64, level: f64, g_lo: f64) -> f64 {
    let sign_lo = g_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = step.state(mid, 0) - level;
        if g == 0.0 {
            return mid;
        }
        if g.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // endpoint with the smaller residual
    let glo = (step.state(lo, 0) - level).abs();
    let ghi = (step.state(hi, 0) - level).abs();
    if glo <= ghi {
        lo
    } else {
        hi
    }
}

/// Integrates from the Taylor start to `spec.t_end`.
pub fn integrate<E: RadialEquation + ?Sized>(eq: &E, spec: &IvpSpec) -> Result<RadialSolution> {
    solve(eq, spec, None)
}

/// Integrates until `u` first crosses `level`; the solution ends exactly at the crossing.
///
/// Returns [`Error::NoCrossing`] if `spec.t_end` is reached first.
pub fn find_event<E: RadialEquation + ?Sized>(eq: &E, spec: &IvpSpec, level: f64) -> Result<(f64, RadialSolution)> {
    let (u_s, _) = series_start(eq, spec.u0, spec.r_start);
    if u_s == level {
        return Ok((spec.t_start(), solve(eq, &IvpSpec { t_end: spec.t_start() + 1e-12, ..spec.clone() }, None)?));
    }
    let sol = solve(eq, spec, Some(EventSpec { level }))?;
    Ok((sol.t_last(), sol))
}

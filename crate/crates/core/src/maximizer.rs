//! Constrained maximization of `F(u) = ∫_{B₁}(1 + g(u)) e^{u²} dx` over radial
//! `u ∈ H¹₀(B₁)` with `‖∇u‖² = α < 4π`.
//!
//! Fields are continuous and piecewise linear in `t = log r` on a log grid
//! `r_min = r₀ < … < r_{N−1} = 1`, constant on `B_{r_min}`. The ascent uses the
//! `H¹` Riesz representative of `dF`, obtained from a tridiagonal solve.

use crate::error::{Error, Result};
use crate::perturbations::PerturbationSpec;
use crate::quadrature::{GAUSS5_NODES, GAUSS5_WEIGHTS};
use crate::shooting::{shoot_with, ShootOptions};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialField {
    /// Log-spaced radii, last node `1`.
    pub nodes: Vec<f64>,
    /// Nodal values; the last one is `0`.
    pub values: Vec<f64>,
    #[serde(skip)]
    log_nodes: Vec<f64>,
}

impl RadialField {
    pub fn on_log_grid(r_min: f64, n: usize, profile: impl Fn(f64) -> f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < 1.0) || n < 3 {
            return Err(Error::InvalidArgument(format!("need 0 < r_min < 1 and n >= 3, got {r_min}, {n}")));
        }
        let l = r_min.ln();
        let log_nodes: Vec<f64> = (0..n).map(|i| l * (1.0 - i as f64 / (n - 1) as f64)).collect();
        let nodes: Vec<f64> = log_nodes.iter().map(|t| t.exp()).collect();
        let mut values: Vec<f64> = nodes.iter().map(|&r| profile(r)).collect();
        values[n - 1] = 0.0;
        Ok(Self { nodes, values, log_nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    /// `∫|∇u|² = 2π Σ (Δu)²/Δt`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.dirichlet_product(&self.values, &self.values)
    }

    fn dirichlet_product(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() - 1 {
            s += (a[i + 1] - a[i]) * (b[i + 1] - b[i]) / (self.log_nodes[i + 1] - self.log_nodes[i]);
        }
        2.0 * PI * s
    }

    /// Value at `r ∈ [0, 1]` by linear interpolation in `log r`.
    pub fn value_at(&self, r: f64) -> f64 {
        if r <= self.nodes[0] {
            return self.values[0];
        }
        if r >= 1.0 {
            return 0.0;
        }
        let t = r.ln();
        let i = self.log_nodes.partition_point(|&x| x <= t).clamp(1, self.len() - 1) - 1;
        let s = (t - self.log_nodes[i]) / (self.log_nodes[i + 1] - self.log_nodes[i]);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    /// Scales to `‖∇u‖² = alpha`.
    fn project(&mut self, alpha: f64) {
        let e = self.dirichlet_energy();
        if e > 0.0 {
            let k = (alpha / e).sqrt();
            self.values.iter_mut().for_each(|v| *v *= k);
        }
    }

    fn downsampled(&self, max_nodes: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let stride = if n <= max_nodes || max_nodes < 2 { 1 } else { (n - 1).div_ceil(max_nodes - 1) };
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        (idx.iter().map(|&i| self.nodes[i]).collect(), idx.iter().map(|&i| self.values[i]).collect())
    }
}

/// `g` and `h` as used by the functional; `h`-only families get `g` from a table.
struct Nonlinearity<'a> {
    spec: &'a PerturbationSpec,
    table: Option<GTable>,
}

/// `g` on a uniform grid by RK4 on `g′ = 2t(h − g)`, cubic Hermite in between.
struct GTable {
    step: f64,
    g: Vec<f64>,
    dg: Vec<f64>,
}

const G_TABLE_STEP: f64 = 1e-3;
const G_TABLE_MAX: f64 = 30.0;

impl GTable {
    fn build(spec: &PerturbationSpec) -> Self {
        let n = (G_TABLE_MAX / G_TABLE_STEP).ceil() as usize;
        let f = |t: f64, g: f64| 2.0 * t * (spec.h(t) - g);
        let mut g = vec![0.0; n + 1];
        let mut dg = vec![0.0; n + 1];
        let h = G_TABLE_STEP;
        for i in 0..n {
            let t = i as f64 * h;
            let y = g[i];
            let k1 = f(t, y);
            let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
            let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
            let k4 = f(t + h, y + h * k3);
            g[i + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            dg[i] = k1;
        }
        dg[n] = f(n as f64 * h, g[n]);
        Self { step: h, g, dg }
    }

    fn eval(&self, t: f64) -> f64 {
        let x = (t.abs() / self.step).min((self.g.len() - 1) as f64);
        let i = (x as usize).min(self.g.len() - 2);
        let s = x - i as f64;
        let (h00, h10, h01, h11) =
            (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s, -2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
        h00 * self.g[i] + h10 * self.step * self.dg[i] + h01 * self.g[i + 1] + h11 * self.step * self.dg[i + 1]
    }
}

impl<'a> Nonlinearity<'a> {
    fn new(spec: &'a PerturbationSpec) -> Self {
        let table = (!spec.family.has_g()).then(|| GTable::build(spec));
        Self { spec, table }
    }

    /// `(1 + g(u)) e^{u²}`.
    fn density(&self, u: f64) -> f64 {
        let g = match &self.table {
            Some(t) => t.eval(u),
            None => self.spec.g_and_prime(u).map_or(0.0, |(g, _)| g),
        };
        (1.0 + g) * (u * u).exp()
    }

    /// `d/du [(1 + g(u)) e^{u²}] = 2u(1 + h(u)) e^{u²}`.
    fn density_prime(&self, u: f64) -> f64 {
        2.0 * u * (1.0 + self.spec.h(u)) * (u * u).exp()
    }
}

fn gauss_points(t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64, f64)> {
    let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
    GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS.iter()).map(move |(&x, &w)| {
        let t = mid + half * x;
        (t, 0.5 * (1.0 + x), w * half)
    })
}

fn functional(field: &RadialField, nl: &Nonlinearity) -> f64 {
    let mut total = PI * field.r_min().powi(2) * nl.density(field.values[0]);
    for i in 0..field.len() - 1 {
        let (t0, t1) = (field.log_nodes[i], field.log_nodes[i + 1]);
        let (a, b) = (field.values[i], field.values[i + 1]);
        let mut s = 0.0;
        for (t, x, w) in gauss_points(t0, t1) {
            s += w * (2.0 * t).exp() * nl.density(a + x * (b - a));
        }
        total += 2.0 * PI * s;
    }
    total
}

/// `∂F/∂u_i` for the free nodes `0..N−1`.
fn functional_gradient(field: &RadialField, nl: &Nonlinearity) -> Vec<f64> {
    let n = field.len();
    let mut grad = vec![0.0; n - 1];
    grad[0] = PI * field.r_min().powi(2) * nl.density_prime(field.values[0]);
    for i in 0..n - 1 {
        let (t0, t1) = (field.log_nodes[i], field.log_nodes[i + 1]);
        let (a, b) = (field.values[i], field.values[i + 1]);
        let (mut left, mut right) = (0.0, 0.0);
        for (t, x, w) in gauss_points(t0, t1) {
            let q = w * (2.0 * t).exp() * nl.density_prime(a + x * (b - a));
            left += q * (1.0 - x);
            right += q * x;
        }
        grad[i] += 2.0 * PI * left;
        if i + 1 < n - 1 {
            grad[i + 1] += 2.0 * PI * right;
        }
    }
    grad
}

/// Stiffness matrix of `2π Σ (Δu)²/Δt` on the free nodes as `(sub, diag, super)`.
fn stiffness(field: &RadialField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = field.len() - 1;
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m];
    for i in 0..m {
        let k = 2.0 * PI / (field.log_nodes[i + 1] - field.log_nodes[i]);
        diag[i] += k;
        if i + 1 < m {
            diag[i + 1] += k;
            off[i] = -k;
        }
    }
    (off.clone(), diag, off)
}

/// Thomas algorithm; `sub[i]` couples rows `i+1` and `i`, `sup[i]` rows `i` and `i+1`.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        c[i] = if i < n - 1 { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn apply_stiffness(field: &RadialField, u: &[f64]) -> Vec<f64> {
    let (sub, diag, sup) = stiffness(field);
    let m = diag.len();
    (0..m)
        .map(|i| {
            let mut s = diag[i] * u[i];
            if i > 0 {
                s += sub[i - 1] * u[i - 1];
            }
            if i + 1 < m {
                s += sup[i] * u[i + 1];
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizerOptions {
    pub nodes: usize,
    pub r_min: f64,
    /// Stop when the relative increase of `F` falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MaximizerOptions {
    fn default() -> Self {
        Self { nodes: 4096, r_min: 1e-8, tol: 1e-13, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    Moser,
    Parabolic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizerResult {
    pub field: RadialField,
    pub alpha: f64,
    pub value: f64,
    pub lambda_hat: f64,
    /// `‖K u − λ̂ b‖ / ‖K u‖` of the discrete Euler-Lagrange equation.
    pub lambda_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: Start,
    /// `F` after each accepted step, starting with the initial iterate.
    pub history: Vec<f64>,
}

/// Moser-type profile `min(log(1/r), L)` with `L = 2`.
fn moser_start(r: f64) -> f64 {
    (-r.ln()).min(2.0)
}

fn parabolic_start(r: f64) -> f64 {
    1.0 - r * r
}

/// Best of the Moser and parabolic starts.
pub fn maximize_subcritical(alpha: f64, spec: &PerturbationSpec, opts: &MaximizerOptions) -> Result<MaximizerResult> {
    let a = maximize_from(alpha, spec, opts, Start::Moser)?;
    let b = maximize_from(alpha, spec, opts, Start::Parabolic)?;
    Ok(if b.value > a.value { b } else { a })
}

pub fn maximize_from(alpha: f64, spec: &PerturbationSpec, opts: &MaximizerOptions, start: Start) -> Result<MaximizerResult> {
    if !(alpha > 0.0 && alpha < 4.0 * PI) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 4π), got {alpha}")));
    }
    let profile = match start {
        Start::Moser => moser_start,
        Start::Parabolic => parabolic_start,
    };
    let mut field = RadialField::on_log_grid(opts.r_min, opts.nodes, profile)?;
    field.project(alpha);
    let nl = Nonlinearity::new(spec);
    let (sub, diag, sup) = stiffness(&field);
    let m = field.len() - 1;

    let mut value = functional(&field, &nl);
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let grad = functional_gradient(&field, &nl);
        let mut dir = solve_tridiagonal(&sub, &diag, &sup, &grad);
        dir.push(0.0);
        let along = field.dirichlet_product(&dir, &field.values) / alpha;
        dir.iter_mut().zip(&field.values).for_each(|(d, u)| *d -= along * u);
        let norm = field.dirichlet_product(&dir, &dir).sqrt();
        if norm == 0.0 {
            converged = true;
            break;
        }
        let scale = alpha.sqrt() / norm;
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-14 {
            let mut trial = field.clone();
            trial.values.iter_mut().zip(&dir).for_each(|(u, d)| *u += step * scale * d);
            trial.project(alpha);
            let v = functional(&trial, &nl);
            if v > value {
                accepted = Some((trial, v));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, v)) = accepted else {
            converged = true;
            break;
        };
        let rel = (v - value) / value;
        field = trial;
        value = v;
        history.push(v);
        if rel < opts.tol {
            converged = true;
            break;
        }
    }
    debug_assert_eq!(field.values.len(), m + 1);
    let (lambda_hat, lambda_residual) = multiplier_fit(&field, &nl);
    Ok(MaximizerResult { field, alpha, value, lambda_hat, lambda_residual, iterations, converged, start, history })
}

/// Least-squares `λ` in `K u = λ b` with `b_i = ∫(1+h(u))u e^{u²} φ_i dx`, the weak
/// form of `−Δu = λ(1+h(u))u e^{u²}`, over interior nodes.
fn multiplier_fit(field: &RadialField, nl: &Nonlinearity) -> (f64, f64) {
    let ku = apply_stiffness(field, &field.values[..field.len() - 1]);
    let b: Vec<f64> = functional_gradient(field, nl).iter().map(|g| 0.5 * g).collect();
    let (mut kb, mut bb, mut kk) = (0.0, 0.0, 0.0);
    for i in 1..ku.len() {
        kb += ku[i] * b[i];
        bb += b[i] * b[i];
        kk += ku[i] * ku[i];
    }
    let lambda = kb / bb;
    let res: f64 = (1..ku.len()).map(|i| (ku[i] - lambda * b[i]).powi(2)).sum();
    (lambda, (res / kk).sqrt())
}

/// First Dirichlet eigenvalue of the unit disk, `j₀,₁²`.
pub fn first_dirichlet_eigenvalue() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let j = 0.5 * (lo + hi);
    j * j
}

/// Power series of `J₀`; accurate for `|x| ≤ 10`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierEstimate {
    pub lambda_hat: f64,
    pub residual: f64,
    /// `λ₁(B₁)/(1 + inf h)`.
    pub upper: f64,
    pub in_window: bool,
    pub resolved: bool,
}

pub const MULTIPLIER_RESIDUAL_TOL: f64 = 1e-3;

pub fn multiplier_estimate(result: &MaximizerResult, spec: &PerturbationSpec) -> MultiplierEstimate {
    let upper = first_dirichlet_eigenvalue() / (1.0 + spec.inf_h);
    MultiplierEstimate {
        lambda_hat: result.lambda_hat,
        residual: result.lambda_residual,
        upper,
        in_window: result.lambda_hat > 0.0 && result.lambda_hat < upper,
        resolved: result.lambda_residual <= MULTIPLIER_RESIDUAL_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoserBoundReport {
    pub holds: bool,
    /// Largest `u² − (α/2π) log(1/r)` over the nodes.
    pub max_excess: f64,
    pub worst_radius: f64,
}

pub const MOSER_BOUND_EPS: f64 = 1e-8;

/// Checks `u(r)² ≤ (α/2π) log(1/r) + ε` at every node.
pub fn pointwise_moser_bound(field: &RadialField, alpha: f64) -> MoserBoundReport {
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_radius = 1.0;
    for (&r, &u) in field.nodes.iter().zip(&field.values) {
        let excess = u * u - alpha / (2.0 * PI) * (-r.ln());
        if excess > max_excess {
            max_excess = excess;
            worst_radius = r;
        }
    }
    MoserBoundReport { holds: max_excess <= MOSER_BOUND_EPS, max_excess, worst_radius }
}

/// Maximizer compared with the shot at `μ = max u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingCrossCheck {
    pub mu: f64,
    pub shot_energy: f64,
    pub shot_functional: f64,
    pub maximizer_value: f64,
    pub relative_difference: f64,
}

pub fn cross_check_with_shooting(result: &MaximizerResult, spec: &PerturbationSpec) -> Result<ShootingCrossCheck> {
    let mu = result.field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shot = shoot_with(mu, spec, &ShootOptions { with_functional: true, ..Default::default() })?;
    let shot_functional = shot
        .functional
        .ok_or_else(|| Error::InvalidArgument(format!("no closed-form g for family {}", spec.family.name())))?;
    Ok(ShootingCrossCheck {
        mu,
        shot_energy: shot.energy_total,
        shot_functional,
        maximizer_value: result.value,
        relative_difference: (shot_functional - result.value).abs() / result.value,
    })
}

/// Serializable result with a down-sampled field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizerSummary {
    pub alpha: f64,
    pub value: f64,
    pub lambda_hat: f64,
    pub lambda_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: Start,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl MaximizerResult {
    pub fn summary(&self, max_nodes: usize) -> MaximizerSummary {
        let (radii, values) = self.field.downsampled(max_nodes);
        MaximizerSummary {
            alpha: self.alpha,
            value: self.value,
            lambda_hat: self.lambda_hat,
            lambda_residual: self.lambda_residual,
            iterations: self.iterations,
            converged: self.converged,
            start: self.start,
            radii,
            values,
        }
    }
}

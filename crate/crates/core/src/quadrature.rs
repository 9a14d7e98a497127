//! Adaptive Gauss-Kronrod quadrature and weighted planar radial integrals.
//!
//! Planar integrals of radial functions are reduced to
//! `∫_{R²} f dx = 2π ∫_0^∞ f(r) r dr`. The disk `r ≤ 1` is integrated in `r`,
//! the annulus `1 ≤ r ≤ R_c` in `s = log r`, and the remainder is covered by a
//! closed-form majorant of the form `C log⁴ r / r³`.

use crate::error::{Error, Result};
use crate::profiles;
use num_rational::Ratio;
use serde::Serialize;
use std::f64::consts::PI;

/// Kronrod abscissae of the 21-point rule on [-1, 1] (non-negative half).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_074_596,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Weights of the embedded 10-point Gauss rule (at the odd Kronrod abscissae).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// 5-point Gauss-Legendre rule on [-1, 1].
pub const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664_0,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664_0,
];
pub const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Value of an integral with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error: f64,
    pub nodes_used: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GkOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for GkOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_panels: 4000,
            initial_panels: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk21_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    let mut abs_sum = WGK[10] * fc.abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
        abs_sum += WGK[j] * (fv1[j].abs() + fv2[j].abs());
    }
    let value = kronrod * half;
    let res_asc = asc * half.abs();
    let res_abs = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    // QUADPACK error scaling
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, error }
}

/// Globally adaptive 21-point Gauss-Kronrod quadrature on `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error falls below `max(abs_tol, rel_tol·|I|)`. Panel sums are taken in
/// left-to-right order so the result is independent of the refinement history.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &GkOptions) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureResult { value: 0.0, abs_error: 0.0, nodes_used: 0 });
    }
    let n0 = opts.initial_panels.max(1);
    let mut panels: Vec<Panel> = (0..n0)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / n0 as f64;
            let hi = if i + 1 == n0 { b } else { a + (b - a) * (i + 1) as f64 / n0 as f64 };
            gk21_panel(&f, lo, hi)
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::NonFinite { context: "quadrature integrand", t: a });
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            return Ok(finish(panels));
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature(format!(
                "error {err:e} above target {target:e} after {} panels on [{a}, {b}]",
                panels.len()
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at machine resolution
            return Ok(finish(panels));
        }
        panels[worst] = gk21_panel(&f, p.a, mid);
        panels.insert(worst + 1, gk21_panel(&f, mid, p.b));
    }
}

fn finish(panels: Vec<Panel>) -> QuadratureResult {
    let mut sorted = panels;
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    QuadratureResult {
        value: sorted.iter().map(|p| p.value).sum(),
        abs_error: sorted.iter().map(|p| p.error).sum(),
        nodes_used: 21 * sorted.len(),
    }
}

/// Starting cut radius for the planar integrals.
pub const DEFAULT_CUT_RADIUS: f64 = 1e4;
const MAX_CUT_RADIUS: f64 = 1e15;

/// Closed form of `∫_L^∞ s⁴ e^{-2s} ds · e^{2L}`.
fn log4_tail_poly(l: f64) -> f64 {
    l.powi(4) / 2.0 + l.powi(3) + 1.5 * l * l + 1.5 * l + 0.75
}

/// Bound on `2π ∫_{R_c}^∞ |f(r)| r dr` assuming `|f(r) r| ≤ C log⁴ r / r³` past `R_c`,
/// with `C` fitted to the largest envelope sample beyond the cut.
fn tail_majorant<F: Fn(f64) -> f64>(f: &F, cut: f64) -> f64 {
    let l = cut.ln();
    let c = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0]
        .iter()
        .map(|m| {
            let r = cut * m;
            (f(r) * r).abs() * r.powi(3) / r.ln().powi(4)
        })
        .fold(0.0, f64::max);
    2.0 * PI * c * log4_tail_poly(l) / (cut * cut)
}

/// `∫_{R²} f dx` for a radial `f`, truncated at a fixed cut radius.
///
/// The returned error includes the tail majorant beyond `cut`.
pub fn integrate_plane_with_cut<F: Fn(f64) -> f64>(f: F, tol: f64, cut: f64) -> Result<QuadratureResult> {
    if !(tol > 0.0) || !(cut > 1.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol}, cut = {cut}")));
    }
    let disk = gauss_kronrod(
        |r| f(r) * r,
        0.0,
        1.0,
        &GkOptions { abs_tol: tol / 8.0, rel_tol: 0.0, ..Default::default() },
    )?;
    let l = cut.ln();
    let annulus = gauss_kronrod(
        |s| {
            let r = s.exp();
            f(r) * r * r
        },
        0.0,
        l,
        &GkOptions {
            abs_tol: tol / 8.0,
            rel_tol: 0.0,
            initial_panels: l.ceil() as usize,
            ..Default::default()
        },
    )?;
    let tail = tail_majorant(&f, cut);
    Ok(QuadratureResult {
        value: 2.0 * PI * (disk.value + annulus.value),
        abs_error: 2.0 * PI * (disk.abs_error + annulus.abs_error) + tail,
        nodes_used: disk.nodes_used + annulus.nodes_used + 7,
    })
}

/// `∫_{R²} f dx = 2π∫_0^∞ f(r) r dr` to absolute tolerance `tol`.
///
/// The integrand must decay like `r⁻⁴ log⁴ r` or faster. The cut radius starts
/// at [`DEFAULT_CUT_RADIUS`] and is raised by decades until the tail majorant
/// drops below `tol/2`.
pub fn integrate_plane<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut cut = DEFAULT_CUT_RADIUS;
    let mut tail = tail_majorant(&f, cut);
    while tail > tol / 2.0 {
        if cut >= MAX_CUT_RADIUS {
            return Err(Error::TailBound { tol, bound: tail, cut });
        }
        cut *= 10.0;
        tail = tail_majorant(&f, cut);
    }
    let res = integrate_plane_with_cut(&f, tol / 2.0, cut)?;
    if res.abs_error > tol {
        return Err(Error::Quadrature(format!("planar error {:e} above tolerance {tol:e}", res.abs_error)));
    }
    Ok(res)
}

/// Log-slope of the zero-data solution of `−Δw = 4e^{2η₀}(f + 2w)`, via
/// `β = −(2/π) ∫ (|x|²−1)/(1+|x|²)³ f dx`.
pub fn beta_from_source<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<QuadratureResult> {
    let res = integrate_plane(|r| profiles::psi0(r) * f(r), tol * PI / 2.0)?;
    Ok(QuadratureResult {
        value: -2.0 / PI * res.value,
        abs_error: 2.0 / PI * res.abs_error,
        nodes_used: res.nodes_used,
    })
}

pub type Q = Ratio<i64>;

/// Exact value `prefactor · (a + b ζ(3) + c π² + d π⁴)` with rational coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub prefactor: f64,
    pub rational: Q,
    pub zeta3: Q,
    pub pi2: Q,
    pub pi4: Q,
}

pub const ZETA3: f64 = 1.202_056_903_159_594_3;

fn q(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

impl ClosedForm {
    fn raw(rational: Q, zeta3: Q, pi2: Q, pi4: Q) -> Self {
        Self { prefactor: PI, rational, zeta3, pi2, pi4 }
    }
    fn normalized(rational: Q, pi2: Q) -> Self {
        Self { prefactor: 1.0, rational, zeta3: q(0, 1), pi2, pi4: q(0, 1) }
    }

    pub fn value(&self) -> f64 {
        self.prefactor
            * (to_f64(self.rational)
                + to_f64(self.zeta3) * ZETA3
                + to_f64(self.pi2) * PI * PI
                + to_f64(self.pi4) * PI.powi(4))
    }

    /// Coefficients scaled by an integer weight.
    pub fn scaled(&self, w: Q) -> Self {
        Self {
            prefactor: self.prefactor,
            rational: self.rational * w,
            zeta3: self.zeta3 * w,
            pi2: self.pi2 * w,
            pi4: self.pi4 * w,
        }
    }

    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.prefactor, other.prefactor, "closed forms with different prefactors");
        Self {
            prefactor: self.prefactor,
            rational: self.rational + other.rational,
            zeta3: self.zeta3 + other.zeta3,
            pi2: self.pi2 + other.pi2,
            pi4: self.pi4 + other.pi4,
        }
    }
}

/// Integrand of a table entry, without the `ψ₀` weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableIntegrand {
    Eta0Cubed,
    Eta0Fourth,
    W0,
    W0Eta0,
    W0Eta0Sq,
    W0Sq,
    Zeta0Sq,
    MinusTwoW0,
    Eta0,
    MinusEta0Sq,
    MinusZeta0,
    MinusFourW0Zeta0,
    MinusFourEta0Zeta0,
    MinusTwoEta0SqZeta0,
}

impl TableIntegrand {
    pub fn eval(self, r: f64) -> f64 {
        use TableIntegrand::*;
        let e = profiles::eta0(r);
        let z = profiles::zeta0(r);
        match self {
            Eta0Cubed => e.powi(3),
            Eta0Fourth => e.powi(4),
            W0 => profiles::w0(r),
            W0Eta0 => profiles::w0(r) * e,
            W0Eta0Sq => profiles::w0(r) * e * e,
            W0Sq => profiles::w0(r).powi(2),
            Zeta0Sq => z * z,
            MinusTwoW0 => -2.0 * profiles::w0(r),
            Eta0 => e,
            MinusEta0Sq => -e * e,
            MinusZeta0 => -z,
            MinusFourW0Zeta0 => -4.0 * profiles::w0(r) * z,
            MinusFourEta0Zeta0 => -4.0 * e * z,
            MinusTwoEta0SqZeta0 => -2.0 * e * e * z,
        }
    }
}

/// One tabulated weighted integral `∫ ψ₀ X dx` (raw) or `(2/π)∫ ψ₀ X dx` (normalized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSpec {
    pub name: &'static str,
    pub integrand: TableIntegrand,
    pub normalized: bool,
    pub closed_form: ClosedForm,
}

/// The six `ψ₀`-weighted integrals entering the log-slope of `z₀`.
pub fn z0_table() -> [TableSpec; 6] {
    use TableIntegrand::*;
    let z = q(0, 1);
    [
        TableSpec {
            name: "psi0*eta0^3",
            integrand: Eta0Cubed,
            normalized: false,
            closed_form: ClosedForm::raw(q(-21, 4), z, z, z),
        },
        TableSpec {
            name: "psi0*eta0^4",
            integrand: Eta0Fourth,
            normalized: false,
            closed_form: ClosedForm::raw(q(45, 2), z, z, z),
        },
        TableSpec {
            name: "psi0*w0",
            integrand: W0,
            normalized: false,
            closed_form: ClosedForm::raw(q(-7, 12), z, q(1, 18), z),
        },
        TableSpec {
            name: "psi0*w0*eta0",
            integrand: W0Eta0,
            normalized: false,
            closed_form: ClosedForm::raw(q(125, 72), q(-2, 3), q(-2, 27), z),
        },
        TableSpec {
            name: "psi0*w0*eta0^2",
            integrand: W0Eta0Sq,
            normalized: false,
            closed_form: ClosedForm::raw(q(-409, 54), q(16, 9), q(35, 162), q(1, 45)),
        },
        TableSpec {
            name: "psi0*w0^2",
            integrand: W0Sq,
            normalized: false,
            closed_form: ClosedForm::raw(q(625, 216), q(-4, 9), q(-1, 81), q(-1, 45)),
        },
    ]
}

/// The eight `(2/π)`-normalized integrals entering the slope of `z_a − z₀`.
pub fn za_table() -> [TableSpec; 8] {
    use TableIntegrand::*;
    let n = |name, integrand, rational, pi2| TableSpec {
        name,
        integrand,
        normalized: true,
        closed_form: ClosedForm::normalized(rational, pi2),
    };
    [
        n("2/pi*psi0*zeta0^2", Zeta0Sq, q(1, 3), q(0, 1)),
        n("2/pi*psi0*(-2w0)", MinusTwoW0, q(7, 3), q(-2, 9)),
        n("2/pi*psi0*eta0", Eta0, q(-1, 1), q(0, 1)),
        n("2/pi*psi0*(-eta0^2)", MinusEta0Sq, q(-3, 1), q(0, 1)),
        n("2/pi*psi0*(-zeta0)", MinusZeta0, q(1, 3), q(0, 1)),
        n("2/pi*psi0*(-4w0*zeta0)", MinusFourW0Zeta0, q(-67, 27), q(2, 9)),
        n("2/pi*psi0*(-4eta0*zeta0)", MinusFourEta0Zeta0, q(-34, 9), q(0, 1)),
        n("2/pi*psi0*(-2eta0^2*zeta0)", MinusTwoEta0SqZeta0, q(151, 27), q(0, 1)),
    ]
}

/// A computed table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub spec: TableSpec,
    pub closed_form_value: f64,
    pub numeric: QuadratureResult,
}

impl TableEntry {
    pub fn relative_error(&self) -> f64 {
        (self.numeric.value - self.closed_form_value).abs() / self.closed_form_value.abs().max(1e-300)
    }
}

/// Evaluates one table entry to absolute tolerance `tol` on the reported scale.
pub fn table_entry(spec: TableSpec, tol: f64) -> Result<TableEntry> {
    let scale = if spec.normalized { 2.0 / PI } else { 1.0 };
    let res = integrate_plane(|r| profiles::psi0(r) * spec.integrand.eval(r), tol / scale)?;
    Ok(TableEntry {
        spec,
        closed_form_value: spec.closed_form.value(),
        numeric: QuadratureResult {
            value: scale * res.value,
            abs_error: scale * res.abs_error,
            nodes_used: res.nodes_used,
        },
    })
}

/// All fourteen tabulated integrals, `z₀` table first, in fixed order.
pub fn integral_tables(tol: f64) -> Result<Vec<TableEntry>> {
    use rayon::prelude::*;
    let specs: Vec<TableSpec> = z0_table().into_iter().chain(za_table()).collect();
    specs.into_par_iter().map(|s| table_entry(s, tol)).collect()
}

/// Weights of the `z₀` source `w₀ + 2w₀² + 4η₀w₀ + 2η₀²w₀ + η₀³ + ½η₀⁴` on the `z₀` table.
pub fn z0_source_weights() -> [Q; 6] {
    // order matches z0_table(): eta0^3, eta0^4, w0, w0 eta0, w0 eta0^2, w0^2
    [q(1, 1), q(1, 2), q(1, 1), q(4, 1), q(2, 1), q(2, 1)]
}

/// Exact closed form of `β(z₀) = −(2/π) Σ weight·entry`, as `rational + ζ(3)·… + π²·… + π⁴·…`.
pub fn z0_beta_closed_form() -> ClosedForm {
    let table = z0_table();
    let weights = z0_source_weights();
    let sum = table
        .iter()
        .zip(weights)
        .map(|(t, w)| t.closed_form.scaled(w))
        .reduce(|a, b| a.add(&b))
        .expect("non-empty table");
    // −(2/π)·π·(…) = −2·(…)
    let mut beta = sum.scaled(q(-2, 1));
    beta.prefactor = 1.0;
    beta
}

/// Numeric `β(z₀)` from the six computed `z₀`-table entries.
pub fn z0_beta_from_entries(entries: &[TableEntry]) -> f64 {
    let weights = z0_source_weights();
    let sum: f64 = entries
        .iter()
        .take(6)
        .zip(weights)
        .map(|(e, w)| to_f64(w) * e.numeric.value)
        .sum();
    -2.0 / PI * sum
}

/// `β₁/a` from the seven `(2/π)`-entries making up the linear-in-`a` source
/// (every `z_a` table entry except `ζ₀²`): `β₁ = −a Σ entries`.
pub fn beta1_over_a(entries: &[TableEntry]) -> f64 {
    -entries[7..14].iter().map(|e| e.numeric.value).sum::<f64>()
}

/// Sum of the seven linear-source entries; equals `−2`.
pub fn linear_source_entry_sum(entries: &[TableEntry]) -> f64 {
    entries[7..14].iter().map(|e| e.numeric.value).sum()
}

/// `β₂/a² = −2[(2/π)∫ζ₀ψ₀ + (2/π)∫ζ₀²ψ₀]`, the quadratic-in-`a` slope.
pub fn beta2_over_a_sq(entries: &[TableEntry]) -> f64 {
    let zeta0_sq = entries[6].numeric.value;
    let minus_zeta0 = entries[10].numeric.value;
    -2.0 * (-minus_zeta0 + zeta0_sq)
}

/// Exact rational sum of the seven linear-source closed forms.
pub fn linear_source_closed_sum() -> ClosedForm {
    za_table()[1..]
        .iter()
        .map(|t| t.closed_form)
        .reduce(|a, b| a.add(&b))
        .expect("non-empty table")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_polynomials_exactly() {
        for k in 0..=20 {
            let res = gauss_kronrod(|x| x.powi(k), 0.0, 1.0, &GkOptions::default()).unwrap();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((res.value - exact).abs() < 1e-15, "k = {k}: {} vs {exact}", res.value);
        }
    }

    #[test]
    fn gk_adapts_on_peaked_integrand() {
        let res = gauss_kronrod(
            |x| 1.0 / (1e-4 + x * x),
            -1.0,
            1.0,
            &GkOptions { abs_tol: 1e-10, rel_tol: 0.0, ..Default::default() },
        )
        .unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((res.value - exact).abs() < 1e-9);
        assert!(res.nodes_used > 21);
    }

    #[test]
    fn gauss5_is_exact_to_degree_nine() {
        for k in 0..=9 {
            let s: f64 = GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((s - exact).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn liouville_mass_is_four_pi() {
        let res = integrate_plane(|r| 4.0 * (2.0 * profiles::eta0(r)).exp(), 1e-10).unwrap();
        assert!((res.value - 4.0 * PI).abs() < 1e-10, "{}", res.value);
        assert!(res.abs_error <= 1e-10);
    }

    #[test]
    fn slowly_decaying_integrand_rejected() {
        let err = integrate_plane(|r| 1.0 / (1.0 + r * r), 1e-8).unwrap_err();
        assert!(matches!(err, Error::TailBound { .. }), "{err:?}");
    }

    #[test]
    fn beta_of_zero_source_is_zero() {
        let b = beta_from_source(|_| 0.0, 1e-10).unwrap();
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn z0_combination_is_rational_plus_pi_squared() {
        let beta = z0_beta_closed_form();
        assert_eq!(beta.rational, q(-6, 1));
        assert_eq!(beta.pi2, q(-1, 3));
        assert_eq!(beta.zeta3, q(0, 1));
        assert_eq!(beta.pi4, q(0, 1));
    }

    #[test]
    fn linear_source_sum_is_minus_two() {
        let s = linear_source_closed_sum();
        assert_eq!(s.rational, q(-2, 1));
        assert_eq!(s.pi2, q(0, 1));
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        assert!(integrate_plane(|r| (-r * r).exp(), 0.0).is_err());
    }
}

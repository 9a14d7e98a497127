//! `mtlab`: scans and checks for radial Moser-Trudinger critical points.
//!
//! Every subcommand writes one data file (CSV or JSON) to `--output` or stdout
//! and a short human summary to stderr. Exit status: `0` success, `2` invalid
//! configuration, `3` numerical failure, `4` a check did not hold.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mtlab_core::analysis;
use mtlab_core::linearized::{extract_log_slope, solve_linearized, Source};
use mtlab_core::maximizer::{self, MaximizerOptions};
use mtlab_core::perturbations::{check_conditions, default_condition_grid, Family, PerturbationSpec};
use mtlab_core::profiles::{eval_profile, ProfileId};
use mtlab_core::quadrature::{self, beta_from_source};
use mtlab_core::shooting::{self, ShootOptions, MU_MAX, MU_MIN};
use mtlab_core::Error;
use output::{num, Csv};
use serde_json::json;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "mtlab", version, about = "Radial critical points of the Moser-Trudinger functional on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write data here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Clone)]
struct FamilyArgs {
    /// zero, power-log, oscillating or inverse-square.
    #[arg(long, default_value = "zero")]
    family: String,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Radius below which the perturbation is cut off.
    #[arg(long)]
    cutoff: Option<f64>,
}

impl FamilyArgs {
    fn spec(&self) -> Result<PerturbationSpec, Failure> {
        let family = Family::from_name(&self.family, self.a, self.p, self.q, self.cutoff).map_err(Failure::Config)?;
        PerturbationSpec::new(family).map_err(Failure::Config)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    W0,
    Z0,
    Zeta0,
    ZaMinusZ0,
    Wa,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form profiles and their radial derivatives.
    Profiles {
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// The fourteen weighted integrals against their closed forms, plus slope combinations.
    Tables {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Log-slope of a linearized response from the ODE tail and from the weighted integral.
    Beta {
        #[arg(long, value_enum, default_value_t = SourceArg::Z0)]
        source: SourceArg,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1e6)]
        r_max: f64,
    },
    /// One critical point with center value `mu`.
    Shoot {
        #[arg(long)]
        mu: f64,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 3.0)]
        split_exponent: f64,
        #[arg(long, default_value_t = 2048)]
        max_nodes: usize,
    },
    /// Energy coefficients `mu^4 (E - 4 pi)` over an evenly spaced range of `mu`.
    Scan {
        #[arg(long, default_value_t = 6.0)]
        mu_from: f64,
        #[arg(long, default_value_t = 12.0)]
        mu_to: f64,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Residuals of the profile expansion at one or more `mu`.
    Residuals {
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// `E(mu)` on [0.1, 20], its maximum and the roots of `E(mu) = lambda`.
    Branch {
        /// Levels to solve for; defaults to the midpoint of (4 pi, sup E).
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Maximize the functional on the sphere `|grad u|^2 = alpha`.
    Maximize {
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-8)]
        r_min: f64,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long, default_value_t = 2048)]
        max_nodes: usize,
    },
    /// Bounds and decay conditions of a perturbation family.
    CheckH {
        #[command(flatten)]
        family: FamilyArgs,
    },
}

#[derive(Debug)]
enum Failure {
    Config(Error),
    Numerical(Error),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Check(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Config(e),
            other => Failure::Numerical(other),
        }
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(Error::InvalidArgument(msg.into()))
}

/// Data to write plus the outcome of any checks made along the way.
struct Outcome {
    data: String,
    summary: Vec<String>,
    failed_checks: Vec<String>,
}

impl Outcome {
    fn new(data: String) -> Self {
        Self { data, summary: Vec::new(), failed_checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.summary.push(format!("{}: {what}", if ok { "ok" } else { "FAILED" }));
        if !ok {
            self.failed_checks.push(what);
        }
    }
}

fn check_mu(mu: f64) -> Result<(), Failure> {
    if !(MU_MIN..=MU_MAX).contains(&mu) {
        return Err(config(format!("mu = {mu} outside [{MU_MIN}, {MU_MAX}]")));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if !(tol > 0.0 && tol < 1e-3) {
        return Err(config(format!("tolerance must lie in (0, 1e-3), got {tol}")));
    }
    Ok(())
}

fn run_profiles(r_max: f64, points: usize, format: Format) -> Result<Outcome, Failure> {
    if !(r_max > 0.0) || points < 2 {
        return Err(config("need r_max > 0 and at least 2 points"));
    }
    let radii: Vec<f64> = (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
    let mut columns: Vec<(ProfileId, Vec<(f64, f64)>)> = Vec::new();
    for id in ProfileId::ALL {
        let vals = radii.iter().map(|&r| eval_profile(id, r)).collect::<Result<Vec<_>, _>>()?;
        columns.push((id, vals));
    }
    let data = match format {
        Format::Csv => {
            let mut header = vec!["r".to_string()];
            for (id, _) in &columns {
                header.push(id.name().to_string());
                header.push(format!("{}_prime", id.name()));
            }
            let refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut csv = Csv::new(&refs);
            for (i, &r) in radii.iter().enumerate() {
                let mut row = vec![r];
                for (_, vals) in &columns {
                    row.extend([vals[i].0, vals[i].1]);
                }
                csv.numbers(&row);
            }
            csv.finish()
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("r".into(), json!(radii));
            for (id, vals) in &columns {
                obj.insert(id.name().into(), json!(vals.iter().map(|v| v.0).collect::<Vec<_>>()));
                obj.insert(format!("{}_prime", id.name()), json!(vals.iter().map(|v| v.1).collect::<Vec<_>>()));
            }
            output::json(&obj)
        }
    };
    Ok(Outcome::new(data))
}

fn run_tables(tol: f64, format: Format) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    let entries = quadrature::integral_tables(tol)?;
    let beta = quadrature::z0_beta_from_entries(&entries);
    let beta_exact = -6.0 - PI * PI / 3.0;
    let beta1 = quadrature::beta1_over_a(&entries);
    let beta2 = quadrature::beta2_over_a_sq(&entries);
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["name", "numeric", "abs_error", "closed_form", "relative_error"]);
            for e in &entries {
                csv.row(&[
                    e.spec.name.to_string(),
                    num(e.numeric.value),
                    num(e.numeric.abs_error),
                    num(e.closed_form_value),
                    num(e.relative_error()),
                ]);
            }
            for (name, v, exact) in [("beta_z0", beta, beta_exact), ("beta1_over_a", beta1, 2.0), ("beta2_over_a2", beta2, 0.0)] {
                let rel = if exact == 0.0 { (v - exact).abs() } else { ((v - exact) / exact).abs() };
                csv.row(&[name.to_string(), num(v), String::new(), num(exact), num(rel)]);
            }
            csv.finish()
        }
        Format::Json => output::json(&json!({
            "entries": entries.iter().map(|e| json!({
                "name": e.spec.name,
                "numeric": e.numeric.value,
                "abs_error": e.numeric.abs_error,
                "closed_form": e.closed_form_value,
                "relative_error": e.relative_error(),
            })).collect::<Vec<_>>(),
            "beta_z0": beta,
            "beta1_over_a": beta1,
            "beta2_over_a2": beta2,
        })),
    };
    let mut out = Outcome::new(data);
    let worst = entries.iter().map(|e| e.relative_error()).fold(0.0, f64::max);
    out.check(worst <= 1e-8, format!("table entries within 1e-8 relative (worst {worst:.3e})"));
    out.check((beta - beta_exact).abs() <= 1e-6, format!("beta_z0 = {beta:.12} vs -6 - pi^2/3"));
    Ok(out)
}

fn run_beta(source: SourceArg, a: f64, r_max: f64, format: Format) -> Result<Outcome, Failure> {
    let src = match source {
        SourceArg::W0 => Source::W0,
        SourceArg::Z0 => Source::Z0,
        SourceArg::Zeta0 => Source::Zeta0,
        SourceArg::ZaMinusZ0 => Source::ZaMinusZ0(a),
        SourceArg::Wa => Source::Wa(a),
    };
    if !(r_max >= 1e5) {
        return Err(config(format!("r_max must be at least 1e5 for the tail fit, got {r_max}")));
    }
    let sol = solve_linearized(&src, r_max, 1e-12)?;
    let slope = extract_log_slope(&sol, r_max * 1e-3, r_max)?;
    let quad = beta_from_source(|r| src.eval(r), 1e-9)?;
    let agree = (slope.beta - quad.value).abs() <= slope.error + quad.abs_error + 1e-6;
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["source", "ode_beta", "ode_error", "quadrature_beta", "quadrature_error"]);
            csv.row(&[format!("{src:?}"), num(slope.beta), num(slope.error), num(quad.value), num(quad.abs_error)]);
            csv.finish()
        }
        Format::Json => output::json(&json!({
            "source": format!("{src:?}"),
            "ode_beta": slope.beta,
            "ode_error": slope.error,
            "quadrature_beta": quad.value,
            "quadrature_error": quad.abs_error,
            "agree": agree,
        })),
    };
    let mut out = Outcome::new(data);
    out.check(agree, format!("ODE slope {:.9} and weighted integral {:.9} agree", slope.beta, quad.value));
    Ok(out)
}

fn run_shoot(mu: f64, spec: &PerturbationSpec, tol: f64, p: f64, max_nodes: usize, format: Format) -> Result<Outcome, Failure> {
    check_mu(mu)?;
    check_tol(tol)?;
    let shot = shooting::shoot_with(mu, spec, &ShootOptions { tol, split_exponent: p, ..Default::default() })?;
    let summary = shot.summary(max_nodes.clamp(2, 2048));
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["log_rho", "eta", "rho_eta_prime"]);
            for i in 0..summary.profile_t.len() {
                csv.numbers(&[summary.profile_t[i], summary.profile_eta[i], summary.profile_r_eta_prime[i]]);
            }
            csv.finish()
        }
        Format::Json => output::json(&summary),
    };
    let mut out = Outcome::new(data);
    out.summary.push(format!(
        "mu = {mu}: E = {:.15}, c = {:.9}, log R = {:.12}, log lambda = {:.12}",
        shot.energy_total, summary.c, shot.log_r, shot.log_lambda
    ));
    Ok(out)
}

fn run_scan(from: f64, to: f64, steps: usize, spec: &PerturbationSpec, tol: f64, format: Format) -> Result<Outcome, Failure> {
    check_mu(from)?;
    check_mu(to)?;
    check_tol(tol)?;
    if steps < 1 || to < from {
        return Err(config("need mu_from <= mu_to and steps >= 1"));
    }
    let mus: Vec<f64> = (0..=steps).map(|i| from + (to - from) * i as f64 / steps as f64).collect();
    let scan = analysis::energy_scan(&mus, spec, tol);
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["mu", "E", "c", "inner", "outer"]);
            for i in 0..scan.mu_values.len() {
                csv.numbers(&[scan.mu_values[i], scan.energies[i], scan.c_values[i], scan.inner_coeffs[i], scan.outer_coeffs[i]]);
            }
            csv.finish()
        }
        Format::Json => output::json(&scan),
    };
    let mut out = Outcome::new(data);
    if let Some(f) = scan.fit {
        out.summary.push(format!("fit c(mu) = {:.6} + {:.6}/mu^2 (rms {:.2e})", f.c_inf, f.c1, f.rms_residual));
    }
    if !scan.failures.is_empty() {
        return Err(Failure::Numerical(Error::EventNotReached {
            mu: scan.failures[0].mu,
            reason: scan.failures[0].error.clone(),
        }));
    }
    let (lo, hi) = scan.window;
    out.check(scan.all_in_window(), format!("c(mu) in [{lo:.6}, {hi:.6}] for every mu"));
    Ok(out)
}

fn run_residuals(mus: &[f64], spec: &PerturbationSpec, tol: f64, format: Format) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    let mut reports = Vec::with_capacity(mus.len());
    for &mu in mus {
        check_mu(mu)?;
        reports.push(analysis::residual_hierarchy(mu, spec, tol)?);
    }
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["mu", "sup_w_err", "sup_z_err", "phi_over_xi"]);
            for r in &reports {
                csv.numbers(&[r.mu, r.sup_w_err, r.sup_z_err, r.phi_over_xi]);
            }
            csv.finish()
        }
        Format::Json => output::json(&reports),
    };
    Ok(Outcome::new(data))
}

fn run_branch(levels: &[f64], points: usize, spec: &PerturbationSpec, tol: f64, format: Format) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    if points < 3 {
        return Err(config("branch needs at least 3 grid points"));
    }
    let grid = analysis::default_branch_grid(points);
    let scan = if levels.is_empty() {
        let first = analysis::branch_scan(&grid, spec, &[], tol)?;
        analysis::branch_scan(&grid, spec, &[0.5 * (4.0 * PI + first.lambda_star)], tol)?
    } else {
        analysis::branch_scan(&grid, spec, levels, tol)?
    };
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["mu", "E"]);
            for p in &scan.points {
                csv.numbers(&[p.mu, p.energy]);
            }
            csv.finish()
        }
        Format::Json => output::json(&scan),
    };
    let mut out = Outcome::new(data);
    out.summary.push(format!("Lambda* = {:.12} at mu = {:.9}", scan.lambda_star, scan.mu_star));
    for pair in &scan.pairs {
        let roots: Vec<String> = pair.roots.iter().map(|r| format!("{:.9}", r.mu)).collect();
        out.summary.push(format!("Lambda = {:.12}: roots [{}]", pair.lambda, roots.join(", ")));
        if let Some(note) = &pair.note {
            out.summary.push(format!("  {note}"));
        }
        out.check(pair.roots.iter().all(|r| r.verified), format!("roots for Lambda = {:.9} re-verified", pair.lambda));
    }
    Ok(out)
}

fn run_maximize(alpha: f64, spec: &PerturbationSpec, opts: &MaximizerOptions, max_nodes: usize, format: Format) -> Result<Outcome, Failure> {
    if !(alpha > 0.0 && alpha < 4.0 * PI) {
        return Err(config(format!("alpha must lie in (0, 4 pi), got {alpha}")));
    }
    if opts.nodes < 16 || !(opts.r_min > 0.0 && opts.r_min < 1e-2) {
        return Err(config("need at least 16 nodes and 0 < r_min < 1e-2"));
    }
    let res = maximizer::maximize_subcritical(alpha, spec, opts)?;
    let bound = maximizer::pointwise_moser_bound(&res.field, alpha);
    let mult = maximizer::multiplier_estimate(&res, spec);
    let summary = res.summary(max_nodes.clamp(2, 2048));
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["r", "u"]);
            for (r, u) in summary.radii.iter().zip(&summary.values) {
                csv.numbers(&[*r, *u]);
            }
            csv.finish()
        }
        Format::Json => output::json(&json!({ "result": summary, "multiplier": mult, "moser_bound": bound })),
    };
    let mut out = Outcome::new(data);
    out.summary.push(format!(
        "F = {:.12}, lambda = {:.9} (residual {:.2e}), {} iterations, start {:?}",
        res.value, res.lambda_hat, res.lambda_residual, res.iterations, res.start
    ));
    out.check(res.converged, "ascent converged".into());
    out.check(bound.holds, format!("pointwise bound (max excess {:.3e})", bound.max_excess));
    out.check(mult.in_window, format!("multiplier {:.9} in (0, {:.7})", mult.lambda_hat, mult.upper));
    Ok(out)
}

fn run_check_h(spec: &PerturbationSpec, format: Format) -> Result<Outcome, Failure> {
    let report = check_conditions(spec, &default_condition_grid());
    let data = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["condition", "verdict", "decay_ratio"]);
            for c in [&report.condh1, &report.condh2] {
                csv.row(&[c.name.to_string(), c.verdict.as_str().to_string(), num(c.decay_ratio)]);
            }
            csv.finish()
        }
        Format::Json => output::json(&report),
    };
    let mut out = Outcome::new(data);
    out.summary.push(format!("sup h = {:.9}, inf h = {:.9}, bounds ok: {}", report.sup_h, report.inf_h, report.bounds_ok));
    for c in [&report.condh1, &report.condh2] {
        out.summary.push(format!("{}: {}", c.name, c.verdict.as_str()));
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let f = cli.format;
    match &cli.command {
        Command::Profiles { r_max, points } => run_profiles(*r_max, *points, f),
        Command::Tables { tol } => run_tables(*tol, f),
        Command::Beta { source, a, r_max } => run_beta(*source, *a, *r_max, f),
        Command::Shoot { mu, family, tol, split_exponent, max_nodes } => {
            run_shoot(*mu, &family.spec()?, *tol, *split_exponent, *max_nodes, f)
        }
        Command::Scan { mu_from, mu_to, steps, family, tol } => run_scan(*mu_from, *mu_to, *steps, &family.spec()?, *tol, f),
        Command::Residuals { mu, family, tol } => run_residuals(mu, &family.spec()?, *tol, f),
        Command::Branch { lambda, points, family, tol } => run_branch(lambda, *points, &family.spec()?, *tol, f),
        Command::Maximize { alpha, family, nodes, r_min, tol, max_nodes } => {
            let opts = MaximizerOptions { nodes: *nodes, r_min: *r_min, tol: *tol, ..Default::default() };
            run_maximize(*alpha, &family.spec()?, &opts, *max_nodes, f)
        }
        Command::CheckH { family } => run_check_h(&family.spec()?, f),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(failure) => {
            match &failure {
                Failure::Config(e) => eprintln!("configuration error: {e}"),
                Failure::Numerical(e) => eprintln!("numerical failure: {e}"),
                Failure::Check(msg) => eprintln!("check failed: {msg}"),
            }
            return ExitCode::from(failure.code());
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &outcome.data),
        None => {
            print!("{}", outcome.data);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("configuration error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    if !outcome.failed_checks.is_empty() {
        let failure = Failure::Check(outcome.failed_checks.join("; "));
        eprintln!("check failed: {}", outcome.failed_checks.join("; "));
        return ExitCode::from(failure.code());
    }
    ExitCode::SUCCESS
}

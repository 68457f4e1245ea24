use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{Context, Provenance, RunConfig};
use super::report::{fmt_f64, write_csv, Report, Status};
use super::{Cli, Command, Which};
use crate::covering::{validate_covering, validate_family};
use crate::error::Result;
use crate::problem::{admissibility_fit, check_assumption_a, check_assumption_b, check_assumption_c, closed_form_single_term, CauchyProblem, CoefficientEvaluator, InitialData, InitialTerm};
use crate::qlaplace::{GrowthCertificate, QLaplace};
use crate::solution::{
    coefficient_decay, extract_coefficients, flatness_fit, gevrey_fit, prop4_log_g, prop4_minimizer, young_conjugate, AsymptoticSeries, SolutionChart,
};
use crate::theta::theta;

pub(super) fn dispatch(cli: &Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::demo(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let prov = config.apply_env(|k| std::env::var(k).ok())?;
    config.validate()?;
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Check => {
            let ctx = Context::new(config)?;
            let r = check(&ctx, prov)?;
            r.write(out, "check.json")?;
            Ok(r.passed())
        }
        Command::Solve { chart, eps, t, z } => {
            let ctx = Context::new(config)?;
            if !gate(&ctx, &prov, cli.force)? {
                return Ok(false);
            }
            let r = solve(&ctx, prov, *chart, *eps, *t, *z)?;
            r.write(out, "solve.json")?;
            Ok(r.passed())
        }
        Command::Verify { which } => {
            let ctx = Context::new(config)?;
            if *which != Which::Properties && !gate(&ctx, &prov, cli.force)? {
                return Ok(false);
            }
            let r = verify(&ctx, prov, *which, out)?;
            Ok(r.passed())
        }
        Command::Demo => {
            std::fs::create_dir_all(out)?;
            let mut text = serde_json::to_string_pretty(&config)?;
            text.push('\n');
            std::fs::write(out.join("config.json"), text)?;
            let ctx = Context::new(config)?;
            let c = check(&ctx, prov.clone())?;
            c.write(out, "check.json")?;
            let mut ok = c.passed();
            if ok || cli.force {
                for which in [Which::Residual, Which::Flatness, Which::Asympt] {
                    ok &= verify(&ctx, prov.clone(), which, out)?.passed();
                }
            }
            Ok(ok)
        }
    }
}

/// Runs `check` first unless forced.
fn gate(ctx: &Context, prov: &Provenance, force: bool) -> Result<bool> {
    if force {
        return Ok(true);
    }
    let r = check(ctx, prov.clone())?;
    if !r.passed() {
        eprintln!("check failed; rerun with --force to proceed anyway");
    }
    Ok(r.passed())
}

pub fn check(ctx: &Context, prov: Provenance) -> Result<Report> {
    let cfg = &ctx.config;
    let g = &cfg.gevrey;
    let mut r = Report::new("check", cfg.seed, prov);
    let a = check_assumption_a(&cfg.problem, g);
    r.push("assumption_a", Status::from_bool(a.holds()), &a)?;
    let b = check_assumption_b(g, &ctx.base);
    r.push("assumption_b", Status::from_bool(b.holds), &b)?;
    let c = check_assumption_c(g, &ctx.base);
    r.push("assumption_c", Status::from_bool(c.holds() && c.inv_a_positive), &c)?;
    let cov = validate_covering(&ctx.covering, &ctx.base, cfg.samples.covering, cfg.seed);
    r.push("covering", Status::from_bool(cov.passes()), &cov)?;
    let fam = validate_family(&ctx.family, &ctx.covering, &ctx.base, &ctx.lambdas, cfg.samples.family_grid)?;
    r.push("family", Status::from_bool(fam.passes()), &fam)?;
    let r0_ok = ctx.covering.charts.iter().all(|ch| ch.sup_modulus(&ctx.base) <= cfg.problem.r0) && ctx.lambdas.iter().all(|l| l.norm() > 1.0);
    r.push(
        "radii",
        Status::from_bool(r0_ok),
        &BTreeMap::from([("r0", cfg.problem.r0), ("max_chart_modulus", ctx.covering.charts.iter().map(|c| c.sup_modulus(&ctx.base)).fold(0.0, f64::max))]),
    )?;
    for (j, w) in cfg.initial.0.iter().enumerate() {
        let fit = admissibility_fit(w, &cfg.admissibility, g, &ctx.base);
        r.push(&format!("admissibility_{j}"), Status::from_bool(fit.pass), &fit)?;
    }
    Ok(r)
}

#[derive(Serialize)]
struct SolveOutput {
    chart: usize,
    eps: Complex64,
    t: Complex64,
    z: Complex64,
    lambda: Complex64,
    value: Complex64,
    tail: f64,
    phi: Vec<Complex64>,
    window: (f64, f64),
    halvings: usize,
    last_change: f64,
    c1: f64,
    warnings: Vec<String>,
}

pub fn solve(ctx: &Context, prov: Provenance, chart: usize, eps: Complex64, t: Complex64, z: Complex64) -> Result<Report> {
    let laplace = ctx.laplace(ctx.config.quad.abs_tol)?;
    let sc = ctx.chart(chart, &laplace)?;
    let x = sc.evaluate(eps, t, z)?;
    let phi = (0..sc.s_order()).map(|j| sc.phi(j, eps, t)).collect::<Result<Vec<_>>>()?;
    let tr = sc.transforms(eps, t)?;
    println!("X = {} {}", fmt_f64(x.value.re), fmt_f64(x.value.im));
    println!("tail estimate = {:.3e}", x.tail);
    for (j, p) in phi.iter().enumerate() {
        println!("phi_{j} = {} {}", fmt_f64(p.re), fmt_f64(p.im));
    }
    for w in &x.warnings {
        eprintln!("warning: {w}");
    }
    let status = if x.warnings.is_empty() { Status::Pass } else { Status::Warn };
    let out = SolveOutput {
        chart,
        eps,
        t,
        z,
        lambda: sc.lambda,
        value: x.value,
        tail: x.tail,
        phi,
        window: tr.window,
        halvings: tr.halvings,
        last_change: tr.last_change,
        c1: tr.cert.c1,
        warnings: x.warnings,
    };
    let mut r = Report::new("solve", ctx.config.seed, prov);
    r.push("solve", status, &out)?;
    Ok(r)
}

fn verify(ctx: &Context, prov: Provenance, which: Which, out: &Path) -> Result<Report> {
    let seed = ctx.config.seed;
    let r = match which {
        Which::Residual => {
            let run = residual_run(ctx)?;
            let rows: Vec<Vec<String>> = run
                .samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    vec![
                        i.to_string(),
                        s.chart.to_string(),
                        fmt_f64(s.eps.re),
                        fmt_f64(s.eps.im),
                        fmt_f64(s.t.re),
                        fmt_f64(s.t.im),
                        fmt_f64(s.z.re),
                        fmt_f64(s.z.im),
                        fmt_f64(s.residual),
                        fmt_f64(s.scale),
                        s.warnings.join("; "),
                    ]
                })
                .collect();
            write_csv(
                &out.join("residual.csv"),
                &["sample", "chart", "eps_re", "eps_im", "t_re", "t_im", "z_re", "z_im", "residual_abs", "lhs_scale", "warnings"],
                &rows,
            )?;
            let mut r = Report::new("verify residual", seed, prov);
            let summary = BTreeMap::from([("max_residual", run.max_residual), ("bound", ctx.config.verify.residual.bound)]);
            r.push("residual", Status::from_bool(run.max_residual <= ctx.config.verify.residual.bound), &summary)?;
            let decay = run.decay;
            r.push("coefficient_decay", Status::from_bool(decay.quadratic <= run.decay_threshold), &json!({"fit": decay, "threshold": run.decay_threshold}))?;
            r
        }
        Which::Flatness => {
            let inv_a = ctx.inv_a();
            let mut r = Report::new("verify flatness", seed, prov);
            if !(inv_a > 0.0) {
                let c = check_assumption_c(&ctx.config.gevrey, &ctx.base);
                r.push("flatness", Status::Fail, &c)?;
                eprintln!("flatness refused: 1/A = {inv_a} is not positive (Assumption C regime violated)");
                return Ok(r);
            }
            let fit = flatness_run(ctx)?;
            let rows: Vec<Vec<String>> = fit
                .points
                .iter()
                .map(|p| vec![p.n.to_string(), fmt_f64(p.eps_abs), fmt_f64(p.log2_eps), fmt_f64(p.d), p.used.to_string()])
                .collect();
            write_csv(&out.join("flatness.csv"), &["n", "eps_abs", "log2_eps", "d_n", "used"], &rows)?;
            let threshold = -ctx.config.verify.flatness.margin * inv_a;
            r.push("flatness", Status::from_bool(fit.slope <= threshold), &json!({"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2, "predicted": fit.predicted, "threshold": threshold}))?;
            r
        }
        Which::Asympt => {
            let run = asympt_run(ctx)?;
            let mut rows = Vec::new();
            for (k, (a, b)) in run.first.coeffs.iter().zip(&run.second.coeffs).enumerate() {
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    rows.push(vec![
                        k.to_string(),
                        i.to_string(),
                        fmt_f64(x.re),
                        fmt_f64(x.im),
                        fmt_f64(y.re),
                        fmt_f64(y.im),
                        fmt_f64(run.agreement.get(k).copied().unwrap_or(f64::NAN)),
                    ]);
                }
            }
            write_csv(&out.join("asympt.csv"), &["k", "grid_point", "chart1_re", "chart1_im", "chart2_re", "chart2_im", "rel_diff_k"], &rows)?;
            let mut r = Report::new("verify asympt", seed, prov);
            let target = ctx.config.verify.asympt.agreement;
            r.push("asympt_agreement", Status::from_bool(run.passes(ctx.config.verify.asympt.k_max, target)), &json!({"agreement": run.agreement, "target": target, "stab_first": run.first.stab, "stab_second": run.second.stab}))?;
            match gevrey_fit(&run.first, &ctx.base) {
                Ok(fit) => {
                    let st = if fit.degenerate { Status::Warn } else { Status::Pass };
                    r.push("gevrey_fit", st, &fit)?
                }
                Err(e) => r.push("gevrey_fit", Status::Warn, &e.to_string())?,
            }
            r
        }
        Which::Properties => properties(ctx, prov)?,
    };
    let name = match which {
        Which::Residual => "residual.json",
        Which::Flatness => "flatness.json",
        Which::Asympt => "asympt.json",
        Which::Properties => "properties.json",
    };
    r.write(out, name)?;
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSample {
    pub chart: usize,
    pub eps: Complex64,
    pub t: Complex64,
    pub z: Complex64,
    pub residual: f64,
    pub scale: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRun {
    pub samples: Vec<ResidualSample>,
    pub max_residual: f64,
    pub decay: crate::solution::DecayFit,
    /// `−0.9 A₁ log|q|`.
    pub decay_threshold: f64,
}

/// Residuals at `samples.residual` seeded points: a random chart, `ε` drawn
/// from `U_I q^{−n}`, `t ∈ T`, `|z| ≤ z_max`.
pub fn residual_run(ctx: &Context) -> Result<ResidualRun> {
    let cfg = &ctx.config;
    let rs = cfg.verify.residual;
    let laplace = ctx.laplace(rs.quad_tol)?;
    let charts: Vec<SolutionChart> = (0..ctx.covering.len()).map(|i| ctx.chart(i, &laplace)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ts = ctx.family.t_set;
    let points: Vec<(usize, Complex64, Complex64, Complex64)> = (0..cfg.samples.residual)
        .map(|_| {
            let i = rng.gen_range(0..charts.len());
            let ch = &charts[i].chart;
            let u = ch.i1.lo + ch.i1.len() * rng.gen_range(0.02..0.98);
            let v = ch.i2.lo + ch.i2.len() * rng.gen_range(0.02..0.98) - rng.gen_range(0..rs.depth.max(1)) as f64;
            let eps = ctx.base.from_spiral(u, v);
            let r = ts.modulus.lo + ts.modulus.len() * rng.gen_range(0.0..1.0);
            let t = ts.point(r, ts.arg.lo + ts.arg.len() * rng.gen_range(0.0..1.0));
            let z = Complex64::from_polar(rs.z_max * rng.gen_range(0.0f64..1.0).sqrt(), std::f64::consts::TAU * rng.gen_range(0.0..1.0));
            (i, eps, t, z)
        })
        .collect();
    let samples: Vec<ResidualSample> = points
        .par_iter()
        .map(|&(i, eps, t, z)| {
            let r = charts[i].residual(eps, t, z)?;
            Ok(ResidualSample {
                chart: i,
                eps,
                t,
                z,
                residual: r.value.norm(),
                scale: r.scale,
                warnings: r.warnings,
            })
        })
        .collect::<Result<_>>()?;
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let (i, eps, t, _) = points[0];
    let decay = coefficient_decay(&charts[i], eps, t)?;
    Ok(ResidualRun {
        samples,
        max_residual,
        decay,
        decay_threshold: -0.9 * cfg.gevrey.a1_type * ctx.base.log_abs(),
    })
}

pub fn flatness_run(ctx: &Context) -> Result<crate::solution::FlatnessFit> {
    let fs = &ctx.config.verify.flatness;
    let laplace = ctx.laplace(fs.quad_tol)?;
    let a = ctx.chart(fs.charts.0, &laplace)?;
    let b = ctx.chart(fs.charts.1, &laplace)?;
    flatness_fit(&a, &b, fs.eps0, fs.n_points, &fs.grid, ctx.inv_a())
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptRun {
    pub first: AsymptoticSeries,
    pub second: AsymptoticSeries,
    /// Per `k`: `max_grid |X_k − X'_k| / max_grid |X_k|`.
    pub agreement: Vec<f64>,
}

impl AsymptRun {
    pub fn passes(&self, k_max: usize, target: f64) -> bool {
        self.agreement.len() > k_max && self.agreement.iter().all(|d| *d <= target)
    }
}

pub fn asympt_run(ctx: &Context) -> Result<AsymptRun> {
    let s = &ctx.config.verify.asympt;
    let laplace = ctx.laplace(s.quad_tol)?;
    let a = ctx.chart(s.charts.0, &laplace)?;
    let b = ctx.chart(s.charts.1, &laplace)?;
    let first = extract_coefficients(&a, s.eps0, s.k_max, s.tol, &s.grid, &s.extraction())?;
    let second = extract_coefficients(&b, s.eps0, s.k_max, s.tol, &s.grid, &s.extraction())?;
    let agreement = first
        .coeffs
        .iter()
        .zip(&second.coeffs)
        .map(|(x, y)| {
            let scale = x.iter().chain(y).map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
            x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max) / scale
        })
        .collect();
    Ok(AsymptRun { first, second, agreement })
}

#[derive(Serialize)]
struct Property {
    value: f64,
    threshold: f64,
}

/// A fast battery of identities, each with its own seeded sample.
fn properties(ctx: &Context, prov: Provenance) -> Result<Report> {
    let mut r = Report::new("verify properties", ctx.config.seed, prov);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let base = ctx.base;
    let push = |r: &mut Report, name: &str, value: f64, threshold: f64| r.push(name, Status::from_bool(value <= threshold), &Property { value, threshold });

    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x = Complex64::from_polar((rng.gen_range(-3.0f64..3.0)).exp(), rng.gen_range(0.0..std::f64::consts::TAU));
        let lhs = theta(base.q() * x, &base, &ctx.config.theta)?;
        let rhs = base.q() * x * theta(x, &base, &ctx.config.theta)?;
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
    }
    push(&mut r, "theta_functional_equation", worst, 1e-10)?;

    let lap = QLaplace::new(base, ctx.family.delta, ctx.config.quad, ctx.config.theta)?;
    let cert = GrowthCertificate::new(4.0, 0.5 * ctx.config.gevrey.m_big.min(0.2), &base)?;
    let lambda = ctx.lambdas[0];
    let zt = Complex64::from_polar(0.6, std::f64::consts::TAU * (crate::qgeometry::turns(lambda) + 0.02));
    let w = |x: Complex64| 1.0 / (2.0 + x);
    let lhs = lap.transform(|x| x * w(x), lambda, zt, &cert)?;
    let rhs = zt * lap.transform(w, lambda, base.q() * zt, &cert)?;
    push(&mut r, "laplace_commutation", (lhs - rhs).norm() / rhs.norm(), 1e-6)?;

    let problem = CauchyProblem::single_term(1, 2, 1.0)?;
    let ev = CoefficientEvaluator::new(problem, InitialData(vec![vec![InitialTerm { c: Complex64::new(1.0, 0.0), a: 0, b: 0, r: 0 }]]), base)?;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let eps = Complex64::from_polar(rng.gen_range(0.05..0.9), rng.gen_range(0.0..std::f64::consts::TAU));
        let tau = Complex64::from_polar(rng.gen_range(0.2..4.0), rng.gen_range(0.0..std::f64::consts::TAU));
        for h in 0..=30 {
            let want = closed_form_single_term(Complex64::new(1.0, 0.0), 1, 2, &base, eps, tau, h);
            worst = worst.max((ev.coefficient(h, eps, tau)? - want).norm() / want.norm());
        }
    }
    push(&mut r, "recursion_closed_form", worst, 1e-12)?;

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let y = young_conjugate(rng.gen_range(0.0..50.0), &base)?;
        worst = worst.max((y.numeric - y.closed).abs() / y.closed.max(1.0));
    }
    push(&mut r, "young_conjugate", worst, 1e-9)?;

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (c1, h, a, e) = (rng.gen_range(0.1..10.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(1e-6..1e-2));
        let x0 = prop4_minimizer(h, a, e, &base);
        let x = golden_min(|x| prop4_log_g(x, c1, h, a, e, &base), 0.0, 4.0 * x0.max(1.0));
        worst = worst.max((x - x0).abs() / x0.abs().max(1.0));
    }
    push(&mut r, "prop4_minimizer", worst, 1e-8)?;

    let cov = validate_covering(&ctx.covering, &base, ctx.config.samples.covering, ctx.config.seed);
    r.push("covering", Status::from_bool(cov.passes()), &cov)?;
    Ok(r)
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

//! Acceptance run: one line per criterion, nonzero exit when any fails.
//! Oracles are written here from first principles, independently of the
//! library code paths they check.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::{Complex, Complex64};
use qgevrey::cli::commands::{asympt_run, flatness_run, residual_run};
use qgevrey::cli::config::{Context, RunConfig};
use qgevrey::covering::{build_covering, validate_covering};
use qgevrey::problem::{
    apply_shift_operator, check_assumption_a, check_assumption_b, check_assumption_c, lemma1_constant, series_norm, AuxConstants,
    CauchyProblem, CoefficientEvaluator, Flavor, GevreyParams, InitialData, InitialTerm, Poly, Term, ZCoeff,
};
use qgevrey::qgeometry::QBase;
use qgevrey::qlaplace::{GrowthCertificate, QLaplace, QuadSettings};
use qgevrey::solution::{prop4_minimizer, young_conjugate};
use qgevrey::theta::{theta, ThetaSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

/// `q^w` on the principal branch of `log q`.
fn qpow(q: C, w: f64) -> C {
    (q.ln() * w).exp()
}

/// `(x; x)_∞` by the pentagonal number series.
fn euler_function(x: C) -> C {
    let mut sum = c(0.0, 0.0);
    for k in -40i64..=40 {
        let e = k * (3 * k - 1) / 2;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += x.powi(e as i32) * sign;
    }
    sum
}

/// `Σ_{n=-100}^{99} q^{-n(n-1)/2} xⁿ` in double-double, each term from integer
/// powers; near the zeros the terms cancel far below double precision.
fn theta_direct(x: C, q: C) -> C {
    type Dd = Complex<TwoFloat>;
    let dd = |z: C| Dd::new(TwoFloat::from(z.re), TwoFloat::from(z.im));
    let one = Dd::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    let (x, qinv) = (dd(x), one / dd(q));
    let xinv = one / x;
    let mut sum = Dd::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
    for n in -100i64..100 {
        let xn = if n >= 0 { x.powu(n as u32) } else { xinv.powu((-n) as u32) };
        sum = sum + qinv.powu((n * (n - 1) / 2) as u32) * xn;
    }
    C::new(sum.re.into(), sum.im.into())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let settings = ThetaSettings::default();
    let qs = [C::new(1.5, 0.0), C::from_polar(2.0, 0.7), C::from_polar(1.2, -2.0)];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for q in qs {
        let base = QBase::new(q).unwrap();
        for _ in 0..1000 {
            let x = C::from_polar(rng.gen_range(-6.0f64..6.0).exp(), rng.gen_range(0.0..TAU));
            let lhs = theta(q * x, &base, &settings).unwrap();
            let rhs = q * x * theta(x, &base, &settings).unwrap();
            worst = worst.max(rel(lhs, rhs));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("max rel err {worst:.2e} (<= 1e-10), {:.3} s (< 1 s)", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let settings = ThetaSettings::default();
    let mut worst: f64 = 0.0;
    for q in [C::new(1.5, 0.0), C::from_polar(2.0, 0.7), C::from_polar(3.0, 1.9)] {
        let base = QBase::new(q).unwrap();
        for _ in 0..300 {
            let x = C::from_polar(q.norm().powf(rng.gen_range(0.0..1.0)), rng.gen_range(0.0..TAU));
            worst = worst.max(rel(theta(x, &base, &settings).unwrap(), theta_direct(x, q)));
        }
    }
    outcome(worst <= 1e-12, format!("max rel err {worst:.2e} (<= 1e-12)"))
}

fn criterion_3() -> Outcome {
    let base = QBase::real(1.5).unwrap();
    let q = base.q();
    let lap = QLaplace::new(base, 0.3, QuadSettings::default(), ThetaSettings::default()).unwrap();
    let lambda = C::from_polar(1.3, 0.35 * TAU);
    let zs = [C::from_polar(0.6, 0.37 * TAU), C::from_polar(0.9, 0.33 * TAU), C::from_polar(0.4, 0.36 * TAU)];
    let family: [fn(C) -> C; 5] = [
        |x| 1.0 / (1.0 + x),
        |x| x / (1.0 + x).powi(2),
        |x| (1.0 + x * x) / (1.0 + x).powi(3),
        |x| (2.0 - x) / (1.0 + x),
        |x| x * x / (1.0 + x).powi(4),
    ];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for f in family {
        for &z in &zs {
            let mf = |x: C| x * f(x);
            let cert_m = GrowthCertificate::fit(1, |x, o: &mut [C]| { o[0] = mf(x); Ok(()) }, lambda, z, &base, 0.1).unwrap();
            let cert_f = GrowthCertificate::fit(1, |x, o: &mut [C]| { o[0] = f(x); Ok(()) }, lambda, q * z, &base, 0.1).unwrap();
            let lhs = lap.transform(mf, lambda, z, &cert_m).unwrap();
            let rhs = z * lap.transform(f, lambda, q * z, &cert_f).unwrap();
            worst = worst.max(rel(lhs, rhs));
        }
    }
    let elapsed = start.elapsed();
    // L(1) = log q / π_q = (q^{-1}; q^{-1})_∞, and L(τ) = κ T.
    let kappa = euler_function(1.0 / q);
    let z = zs[0];
    let one = lap.transform(|_| c(1.0, 0.0), lambda, z, &GrowthCertificate::new(4.0, 0.1, &base).unwrap()).unwrap();
    let cert = GrowthCertificate::fit(1, |x, o: &mut [C]| { o[0] = x; Ok(()) }, lambda, z, &base, 0.1).unwrap();
    let lin = lap.transform(|x| x, lambda, z, &cert).unwrap();
    let kappa_err = rel(one, kappa).max(rel(lin, kappa * z));
    outcome(
        worst <= 1e-6 && kappa_err <= 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "commutation max rel err {worst:.2e} (<= 1e-6), L(1), L(tau) vs kappa {kappa_err:.2e}, {:.2} s (< 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let base = QBase::polar(1.7, 0.05).unwrap();
    let q = base.q();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w0c = C::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..TAU));
        let initial = InitialData(vec![vec![InitialTerm { c: w0c, a: 0, b: 0, r: 0 }, InitialTerm { c: w0c, a: 1, b: 0, r: 0 }]]);
        let ev = CoefficientEvaluator::new(CauchyProblem::single_term(1, 2, 1.0).unwrap(), initial, base).unwrap();
        let eps = C::from_polar(rng.gen_range(0.05..0.95), rng.gen_range(0.0..TAU));
        let tau = C::from_polar(rng.gen_range(0.1..5.0), rng.gen_range(0.0..TAU));
        let w0 = w0c * (1.0 + tau);
        for h in 0..=30usize {
            let hf = h as f64;
            let want = w0 * (tau / ((tau + 1.0) * eps)).powi(h as i32) * qpow(q, -hf * (hf - 1.0));
            worst = worst.max(rel(ev.coefficient(h, eps, tau).unwrap(), want));
        }
    }
    outcome(worst <= 1e-12, format!("max rel err {worst:.2e} (<= 1e-12)"))
}

fn gevrey(m_big: f64, a1: f64, cg: f64) -> GevreyParams {
    GevreyParams {
        m_big,
        m_tilde: 0.5 * m_big,
        a1_type: a1,
        c_geom: cg,
        delta_theta: 0.3,
        xi: 0.9,
        xi_bar: 0.9,
        aux: AuxConstants { a1: 1.0, a2: 1.0, b1: 1.0, b2: 1.0, d1: 1.0, d2: 1.0 },
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let base = QBase::polar(rng.gen_range(1.2..3.0), rng.gen_range(0.0..0.5)).unwrap();
        let g = gevrey(rng.gen_range(0.05..0.4), rng.gen_range(0.2..1.5), rng.gen_range(0.5..3.0));
        let (k, s) = loop {
            let (k, s) = (rng.gen_range(0..3usize), rng.gen_range(0..3usize));
            if k + s > 0 {
                break (k, s);
            }
        };
        let n = (k + s) as f64;
        let m1 = rng.gen_range(0..=(g.c_geom * n).floor() as u32);
        let m2 = (2.0 * n * g.a1_type).ceil() as u32 + rng.gen_range(0..3u32);
        let (cu, cv) = (rng.gen_range(0.1..0.9), rng.gen_range(0.5..1.5));
        let delta = rng.gen_range(0.2..1.0);
        let eps = C::from_polar(cu * rng.gen_range(0.05f64..1.0), rng.gen_range(0.0..TAU));
        let v0 = C::from_polar(cv * rng.gen_range(1.0..1.5), rng.gen_range(0.0..TAU));
        let taus: Vec<C> = (0..40).map(|i| v0 * qpow(base.q(), 0.1 * i as f64)).collect();
        let series: Vec<Vec<C>> = (0..20)
            .map(|_| taus.iter().map(|_| C::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(0.0..TAU))).collect())
            .collect();
        let image = apply_shift_operator(&taus, &series, eps, s, k, m1, m2, &base);
        let lhs = series_norm(&taus, &image, eps, delta, &g, Flavor::Spiral, &base);
        let rhs = lemma1_constant(s, k, m1, m2, &g, cu, cv, &base).unwrap()
            * delta.powi((k + s) as i32)
            * series_norm(&taus, &series, eps, delta, &g, Flavor::Spiral, &base);
        worst_ratio = worst_ratio.max(lhs / rhs);
    }
    outcome(worst_ratio <= 1.0, format!("max lhs/rhs {worst_ratio:.4} (<= 1) over 20 tuples"))
}

fn demo_context() -> Context {
    Context::new(RunConfig::demo()).unwrap()
}

fn criteria_6_7(ctx: &Context) -> (Outcome, Outcome) {
    let start = Instant::now();
    let run = residual_run(ctx).unwrap();
    let elapsed = start.elapsed();
    let rs = ctx.config.verify.residual;
    let in_range = run.samples.len() == 100 && run.samples.iter().all(|s| s.z.norm() <= 0.5) && ctx.config.beta_max == 25 && rs.quad_tol == 1e-8;
    let six = outcome(
        in_range && run.max_residual <= 1e-6 && elapsed < Duration::from_secs(60),
        format!("max |residual| {:.2e} (<= 1e-6) over {} samples, {:.1} s (< 60 s)", run.max_residual, run.samples.len(), elapsed.as_secs_f64()),
    );
    let threshold = -0.9 * ctx.config.gevrey.a1_type * QBase::new(ctx.config.q).unwrap().log_abs();
    let seven = outcome(
        run.decay.quadratic <= threshold,
        format!("beta^2 coefficient {:.4} (<= {threshold:.4}), r2 {:.4}", run.decay.quadratic, run.decay.r2),
    );
    (six, seven)
}

fn criterion_8(ctx: &Context) -> Outcome {
    let g = ctx.config.gevrey;
    let l = (ctx.config.q.norm()).ln();
    let inv_a = (1.0 - g.xi_bar) * (g.xi / (2.0 * l) - g.m_big);
    let threshold = -0.9 * inv_a;
    let start = Instant::now();
    let fit = flatness_run(ctx).unwrap();
    let elapsed = start.elapsed();
    outcome(
        fit.slope <= threshold && ctx.config.verify.flatness.n_points == 13 && elapsed < Duration::from_secs(300),
        format!(
            "slope {:.4} (<= {threshold:.4}), {} points used, r2 {:.3}, {:.1} s (< 300 s)",
            fit.slope,
            fit.points.iter().filter(|p| p.used).count(),
            fit.r2,
            elapsed.as_secs_f64()
        ),
    )
}

/// `X_k(t, z)` of the demo problem from `W_β = ε^{−β} q^{−m₁β(β−1)/2} τ^β (1+τ)^{1−β}`
/// and `L(τⁿ)(T) = κ q^{n(n−1)/2} Tⁿ`, summed over `β`.
fn demo_coefficient(k: usize, t: C, z: C, q: C, m1: f64) -> C {
    let kappa = euler_function(1.0 / q);
    let mut sum = c(0.0, 0.0);
    let mut fact = 1.0;
    for beta in 0..60usize {
        if beta > 0 {
            fact *= beta as f64;
        }
        let b = beta as f64;
        // binom(1 − β, k) · k!
        let falling: f64 = (0..k).map(|i| 1.0 - b - i as f64).product();
        let n = b + k as f64;
        let term = z.powi(beta as i32) / fact * falling * qpow(q, -m1 * b * (b - 1.0) / 2.0 + n * (n - 1.0) / 2.0) * t.powi((beta + k) as i32);
        sum += term;
    }
    kappa * sum
}

fn criterion_9(ctx: &Context) -> Outcome {
    let s = &ctx.config.verify.asympt;
    let run = asympt_run(ctx).unwrap();
    let cross = run.agreement.iter().take(4).cloned().fold(0.0, f64::max);
    let complete = run.agreement.len() >= 4 && run.first.stopped_at.is_none() && run.second.stopped_at.is_none();
    let q = ctx.config.q;
    let m1 = ctx.config.problem.terms[0].m1 as f64;
    let mut per_k = Vec::new();
    for (k, row) in run.first.coeffs.iter().enumerate().take(4) {
        let want: Vec<C> = s.grid.iter().map(|&(t, z)| demo_coefficient(k, t, z, q, m1)).collect();
        let scale = want.iter().map(|w| w.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let err = row.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        per_k.push(err);
    }
    outcome(
        complete && cross <= 1e-4,
        format!(
            "cross-chart agreement {:?} (each <= 1e-4), closed-form deviation {:?} (reported)",
            run.agreement.iter().map(|a| format!("{a:.1e}")).collect::<Vec<_>>(),
            per_k.iter().map(|a| format!("{a:.1e}")).collect::<Vec<_>>()
        ),
    )
}

/// Golden section followed by Newton steps on central differences; exact
/// for quadratics up to rounding, unlike comparisons of function values.
fn numeric_argmin(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let mut x = 0.5 * (a + b);
    let h = 0.25;
    for _ in 0..4 {
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        x -= d1 / d2;
    }
    x
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut young: f64 = 0.0;
    let mut minim: f64 = 0.0;
    for _ in 0..100 {
        let base = QBase::real(rng.gen_range(1.1..4.0)).unwrap();
        let l = base.log_abs();
        let y = rng.gen_range(0.0..50.0);
        let yc = young_conjugate(y, &base).unwrap();
        let sup = numeric_argmin(|x| -(x * y - x * x / (4.0 * l)), 0.0, 8.0 * l * y + 1.0);
        let sup = (sup * y - sup * sup / (4.0 * l)).max(0.0);
        let scale = (l * y * y).max(1.0);
        young = young.max((yc.numeric - l * y * y).abs() / scale).max((sup - l * y * y).abs() / scale);

        let (c1, h, a): (f64, f64, f64) = (rng.gen_range(0.1..10.0), rng.gen_range(0.5..3.0), rng.gen_range(0.3..3.0));
        let e = (-rng.gen_range(1.0..12.0f64)).exp() / h;
        let log_g = |x: f64| c1.ln() + h.ln() * x + 0.5 * l * a * x * x + (x + 1.0) * e.ln();
        let x_num = numeric_argmin(log_g, 0.0, 4.0 * (-(h * e).ln()) / (a * l) + 1.0);
        let x0 = prop4_minimizer(h, a, e, &base);
        minim = minim.max((x_num - x0).abs() / x0.abs().max(1.0));
    }
    outcome(
        young <= 1e-9 && minim <= 1e-8,
        format!("young conjugate {young:.2e} (<= 1e-9), minimizer {minim:.2e} (<= 1e-8)"),
    )
}

fn criterion_11() -> Outcome {
    let base = QBase::real(1.5).unwrap();
    let cov = build_covering(5, 5, 0.1).unwrap();
    let rep = validate_covering(&cov, &base, 10_000, 11);
    outcome(
        rep.covered() && rep.no_quadruple() && rep.samples >= 10_000,
        format!("{} samples, {} uncovered, max multiplicity {}", rep.samples, rep.uncovered, rep.max_multiplicity),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut disagree = 0;
    let mut seen = [[0usize; 2]; 3];
    for _ in 0..100 {
        let base = QBase::polar(rng.gen_range(1.05..4.0), rng.gen_range(-0.5..0.5)).unwrap();
        let l = base.q().norm().ln();
        let aux = AuxConstants {
            a1: log_uniform(&mut rng, 1e-2, 1e3),
            a2: log_uniform(&mut rng, 1e-3, 1e2),
            b1: log_uniform(&mut rng, 1e-2, 1e2),
            b2: log_uniform(&mut rng, 1e-2, 1e2),
            d1: log_uniform(&mut rng, 1e-2, 1e2),
            d2: log_uniform(&mut rng, 1e-2, 1e2),
        };
        let m_big = rng.gen_range(0.01..2.0);
        let g = GevreyParams {
            m_big,
            m_tilde: 0.5 * m_big,
            a1_type: log_uniform(&mut rng, 0.05, 5.0),
            c_geom: log_uniform(&mut rng, 0.05, 5.0),
            delta_theta: 0.3,
            xi: rng.gen_range(0.05..0.99),
            xi_bar: rng.gen_range(0.05..0.99),
            aux,
        };
        let s_order = rng.gen_range(1..=4usize);
        let mut terms = Vec::new();
        for k in 0..s_order {
            if !rng.gen_bool(0.7) {
                continue;
            }
            let coeffs = (0..3usize)
                .filter(|_| rng.gen_bool(0.5))
                .map(|s| ZCoeff { s, poly: Poly::constant(c(1.0, 0.0)) })
                .collect();
            terms.push(Term { k, m0: rng.gen_range(1..=8), m1: rng.gen_range(1..=12), coeffs });
        }
        let problem = CauchyProblem::new(s_order, terms, 1.0).unwrap();

        // (A): m0 ≤ C(S − k + s) and m1 ≥ 2(S − k + s)A1 for all k and s ∈ I_k.
        let mut want_a = true;
        for t in &problem.terms {
            for z in &t.coeffs {
                let n = (s_order - t.k + z.s) as f64;
                want_a &= t.m0 as f64 <= g.c_geom * n && t.m1 as f64 >= 2.0 * n * g.a1_type;
            }
        }
        // (B): M ≤ 1/(2 log|q|).
        let want_b = g.m_big <= 1.0 / (2.0 * l);
        // (C.1)–(C.4).
        let (xi, xb, mm, a1t, cg) = (g.xi, g.xi_bar, g.m_big, g.a1_type, g.c_geom);
        let w = xi / (2.0 * l) - mm;
        let c1 = l < aux.b1 / aux.b2;
        let c2 = l + xi * aux.b1 / (2.0 * aux.b2) + (aux.d1 / aux.d2) * (mm - xi / (2.0 * l)) > 0.0;
        let c3 = mm - xi / (2.0 * l) + (aux.d2 / aux.d1) * l < 0.0;
        let c4 = a1t * (1.0 - aux.d2 * l / (aux.d1 * w)) > cg * cg / (4.0 * xb * l * w) + cg * aux.a2 / aux.a1;
        let want_c = c1 && c2 && c3 && c4;

        let got = [check_assumption_a(&problem, &g).holds(), check_assumption_b(&g, &base).holds, check_assumption_c(&g, &base).holds()];
        for (i, (gv, wv)) in got.iter().zip([want_a, want_b, want_c]).enumerate() {
            seen[i][wv as usize] += 1;
            if *gv != wv {
                disagree += 1;
            }
        }
    }
    outcome(
        disagree == 0,
        format!("{disagree} disagreements; true/false counts A {:?}, B {:?}, C {:?}", [seen[0][1], seen[0][0]], [seen[1][1], seen[1][0]], [seen[2][1], seen[2][0]]),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {n:>2} {:<28} {}  {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "theta_functional_equation", criterion_1());
    report(2, "theta_direct_sum", criterion_2());
    report(3, "laplace_commutation", criterion_3());
    report(4, "recursion_closed_form", criterion_4());
    report(5, "shift_lemma_inequality", criterion_5());
    let ctx = demo_context();
    let (six, seven) = criteria_6_7(&ctx);
    report(6, "demo_residual", six);
    report(7, "coefficient_decay", seven);
    report(8, "flatness_slope", criterion_8(&ctx));
    report(9, "asymptotic_coefficients", criterion_9(&ctx));
    report(10, "young_and_minimizer", criterion_10());
    report(11, "covering_validation", criterion_11());
    report(12, "assumption_checkers", criterion_12());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

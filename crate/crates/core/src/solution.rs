//! Chart solutions `X_I(ε, t, z) = Σ_β L^{λ_I}(W_β(ε, ·))(εt) z^β/β!`, the
//! residual of the equation they solve, flatness of their differences and
//! the extraction of their common asymptotic expansion in ε.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::CoefficientEvaluator;
use crate::qgeometry::{discrete_spiral_index, ChartBase, ContinuousBase, QBase};
use crate::qlaplace::{GrowthCertificate, QLaplace};

/// Ordinary least squares `y ≈ X c`; returns `(c, r²)`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = rows.len();
    let p = rows.first()?.len();
    if n < p {
        return None;
    }
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let c = x.clone().svd(true, true).solve(&yv, 1e-12).ok()?;
    let fitted = &x * &c;
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((c.iter().copied().collect(), r2))
}

/// Value of the interpolating polynomial through `(xs, ys)` at 0.
pub fn neville_at_zero(xs: &[Complex64], ys: &[Complex64]) -> Complex64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Transforms `L(W_β)(ε, εt)` for `β = 0..=β_max + S`, with quadrature diagnostics.
#[derive(Debug, Clone)]
pub struct ChartTransforms {
    pub values: Vec<Complex64>,
    pub cert: GrowthCertificate,
    pub window: (f64, f64),
    pub halvings: usize,
    pub last_change: f64,
}

type EtKey = [u64; 4];

fn et_key(eps: Complex64, t: Complex64) -> EtKey {
    [eps.re.to_bits(), eps.im.to_bits(), t.re.to_bits(), t.im.to_bits()]
}

#[derive(Debug)]
pub struct SolutionChart {
    pub chart_index: usize,
    pub chart: ChartBase,
    pub lambda: Complex64,
    pub evaluator: Arc<CoefficientEvaluator>,
    pub laplace: Arc<QLaplace>,
    pub beta_max: usize,
    /// Growth exponent used to fit the certificates of the integrands.
    pub mbar: f64,
    /// The set `T`; points outside it are evaluated with a warning.
    pub t_set: Option<ContinuousBase>,
    cache: Mutex<HashMap<EtKey, Arc<ChartTransforms>>>,
}

/// `X_I(ε, t, z)` with the estimated size of the omitted terms `β > β_max`.
#[derive(Debug, Clone, Serialize)]
pub struct XValue {
    pub value: Complex64,
    pub tail: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualValue {
    pub value: Complex64,
    /// Size of the left-hand side, for relative comparisons.
    pub scale: f64,
    pub warnings: Vec<String>,
}

impl SolutionChart {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        chart_index: usize,
        chart: ChartBase,
        lambda: Complex64,
        evaluator: Arc<CoefficientEvaluator>,
        laplace: Arc<QLaplace>,
        beta_max: usize,
        mbar: f64,
        t_set: Option<ContinuousBase>,
    ) -> Result<Self> {
        if beta_max < evaluator.s_order() {
            return Err(Error::InvalidParameter(format!(
                "beta_max = {beta_max} below the order S = {}",
                evaluator.s_order()
            )));
        }
        if lambda.norm() == 0.0 {
            return Err(Error::ZeroArgument("lambda"));
        }
        Ok(Self {
            chart_index,
            chart,
            lambda,
            evaluator,
            laplace,
            beta_max,
            mbar,
            t_set,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Same chart data with another direction and an empty cache.
    pub fn with_lambda(&self, lambda: Complex64) -> Result<Self> {
        Self::new(
            self.chart_index,
            self.chart,
            lambda,
            self.evaluator.clone(),
            self.laplace.clone(),
            self.beta_max,
            self.mbar,
            self.t_set,
        )
    }

    pub fn base(&self) -> &QBase {
        self.laplace.base()
    }

    pub fn s_order(&self) -> usize {
        self.evaluator.s_order()
    }

    fn dim(&self) -> usize {
        self.beta_max + self.s_order() + 1
    }

    pub fn check_eps(&self, eps: Complex64) -> Result<()> {
        if discrete_spiral_index(eps, &self.chart, self.base())?.is_none() {
            let (u, v) = self.base().spiral_coords(eps);
            return Err(Error::Domain(format!(
                "epsilon {eps} (u = {u:.6}, v = {v:.6}) is not in the discrete spiral of chart {}",
                self.chart_index
            )));
        }
        Ok(())
    }

    fn t_warning(&self, t: Complex64, what: &str) -> Option<String> {
        match &self.t_set {
            Some(ts) if !ts.contains(t) => Some(format!("{what} = {t} lies outside T")),
            _ => None,
        }
    }

    /// All transforms at `(ε, t)`, computed once and shared.
    pub fn transforms(&self, eps: Complex64, t: Complex64) -> Result<Arc<ChartTransforms>> {
        let key = et_key(eps, t);
        if let Some(v) = self.cache.lock().expect("poisoned").get(&key) {
            return Ok(v.clone());
        }
        let dim = self.dim();
        let rec = self.evaluator.at_eps(eps, dim)?;
        let f = |tau: Complex64, out: &mut [Complex64]| rec.fill(tau, out);
        let z = eps * t;
        let cert = GrowthCertificate::fit(dim, f, self.lambda, z, self.base(), self.mbar)?;
        let q = self.laplace.transform_many(dim, f, self.lambda, z, &cert)?;
        let tr = Arc::new(ChartTransforms {
            values: q.values,
            cert,
            window: q.window,
            halvings: q.halvings,
            last_change: q.last_change,
        });
        self.cache.lock().expect("poisoned").insert(key, tr.clone());
        Ok(tr)
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("poisoned").clear();
    }

    /// `φ_{I,j}(ε, t)`, the `z^j/j!` coefficient of `X_I`.
    pub fn phi(&self, j: usize, eps: Complex64, t: Complex64) -> Result<Complex64> {
        if j >= self.s_order() {
            return Err(Error::InvalidParameter(format!("initial condition index {j} not below S = {}", self.s_order())));
        }
        self.check_eps(eps)?;
        Ok(self.transforms(eps, t)?.values[j])
    }

    pub fn evaluate(&self, eps: Complex64, t: Complex64, z: Complex64) -> Result<XValue> {
        self.check_eps(eps)?;
        let tr = self.transforms(eps, t)?;
        let mut value = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        for (beta, y) in tr.values[..=self.beta_max].iter().enumerate() {
            if beta > 0 {
                zp *= z / beta as f64;
            }
            value += y * zp;
        }
        let tail = tail_estimate(&tr.values[..=self.beta_max], self.s_order(), z.norm());
        let mut warnings: Vec<String> = self.t_warning(t, "t").into_iter().collect();
        let tol = self.laplace.quad().abs_tol;
        if tail > tol {
            warnings.push(format!("estimated truncation tail {tail:.3e} exceeds tolerance {tol:.3e}"));
        }
        Ok(XValue { value, tail, warnings })
    }

    /// `εt ∂_z^S X(ε, qt, z) + ∂_z^S X(ε, t, z) − Σ_k b_k(ε, z) (tσ_q)^{m₀ₖ} (∂_z^k X)(ε, t, z q^{−m₁ₖ})`
    /// on the series truncated at `z^{β_max}`.
    pub fn residual(&self, eps: Complex64, t: Complex64, z: Complex64) -> Result<ResidualValue> {
        self.check_eps(eps)?;
        let base = *self.base();
        let s_order = self.s_order();
        let y_t = self.transforms(eps, t)?;
        let qt = base.q() * t;
        let y_qt = self.transforms(eps, qt)?;
        let mut warnings: Vec<String> = self.t_warning(t, "t").into_iter().collect();
        warnings.extend(self.t_warning(qt, "q t"));
        let n = self.beta_max + 1;
        let mut diff = vec![Complex64::new(0.0, 0.0); n];
        let mut lhs = vec![Complex64::new(0.0, 0.0); n];
        for h in 0..n {
            lhs[h] = eps * t * y_qt.values[h + s_order] + y_t.values[h + s_order];
            diff[h] = lhs[h];
        }
        for term in &self.evaluator.problem.terms {
            let shifted = base.pow_i(term.m0 as i64) * t;
            let y = self.transforms(eps, shifted)?;
            if term.m0 > 1 {
                warnings.extend(self.t_warning(shifted, "q^m0 t"));
            }
            let m0 = term.m0 as f64;
            let dil = base.pow(m0 * (m0 - 1.0) / 2.0) * t.powu(term.m0);
            let qm1 = base.pow_i(-(term.m1 as i64));
            for zc in &term.coeffs {
                let b = zc.poly.eval(eps);
                let s = zc.s;
                for h in s..n {
                    let falling: f64 = ((h - s + 1)..=h).map(|i| i as f64).product();
                    diff[h] -= b * falling * y.values[h - s + term.k] * qm1.powu((h - s) as u32) * dil;
                }
            }
        }
        let mut value = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        let mut zp = Complex64::new(1.0, 0.0);
        for h in 0..n {
            if h > 0 {
                zp *= z / h as f64;
            }
            value += diff[h] * zp;
            scale += (lhs[h] * zp).norm();
        }
        Ok(ResidualValue { value, scale, warnings })
    }
}

/// Magnitudes of the omitted terms extrapolated from a fit of `log|Y_β|`
/// on `(1, β, β²)`.
fn tail_estimate(values: &[Complex64], start: usize, zabs: f64) -> f64 {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(b, v)| (b as f64, v.norm().ln()))
        .collect();
    if pts.len() < 3 {
        return 0.0;
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|(b, _)| vec![1.0, *b, b * b]).collect();
    let y: Vec<f64> = pts.iter().map(|(_, l)| *l).collect();
    let Some((c, _)) = least_squares(&rows, &y) else {
        return f64::INFINITY;
    };
    let last = values.len() - 1;
    let mut log_fact: f64 = (1..=last).map(|i| (i as f64).ln()).sum();
    let mut tail = 0.0;
    for beta in last + 1..last + 40 {
        let b = beta as f64;
        log_fact += b.ln();
        let zl = if zabs > 0.0 { b * zabs.ln() } else { f64::NEG_INFINITY };
        tail += (c[0] + c[1] * b + c[2] * b * b + zl - log_fact).exp();
    }
    tail
}

/// Fit of `log|L(W_β)|` against `(1, β, β²)` over `β = S..=β_max`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub intercept: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub r2: f64,
}

pub fn coefficient_decay(sc: &SolutionChart, eps: Complex64, t: Complex64) -> Result<DecayFit> {
    sc.check_eps(eps)?;
    let tr = sc.transforms(eps, t)?;
    let pts: Vec<(f64, f64)> = tr.values[..=sc.beta_max]
        .iter()
        .enumerate()
        .skip(sc.s_order())
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(b, v)| (b as f64, v.norm().ln()))
        .collect();
    let rows: Vec<Vec<f64>> = pts.iter().map(|(b, _)| vec![1.0, *b, b * b]).collect();
    let y: Vec<f64> = pts.iter().map(|(_, l)| *l).collect();
    let (c, r2) = least_squares(&rows, &y).ok_or_else(|| Error::Degenerate("too few nonzero transforms for a decay fit".into()))?;
    Ok(DecayFit {
        intercept: c[0],
        linear: c[1],
        quadratic: c[2],
        r2,
    })
}

/// Sample point of the `(t, z)` evaluation grid.
pub type TzPoint = (Complex64, Complex64);

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessPoint {
    pub n: usize,
    pub eps: Complex64,
    pub eps_abs: f64,
    pub log2_eps: f64,
    pub d: f64,
    pub used: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `−1/A`.
    pub predicted: f64,
    pub points: Vec<FlatnessPoint>,
}

pub const FLATNESS_FLOOR: f64 = 1e-14;

/// `d_n = max_grid |X_I − X_{I'}|` at `ε₀ q^{−n}`, and a least-squares line
/// of `log d_n` against `log²|ε|`.
pub fn flatness_fit(sc1: &SolutionChart, sc2: &SolutionChart, eps0: Complex64, n_points: usize, grid: &[TzPoint], inv_a: f64) -> Result<FlatnessFit> {
    if !(inv_a > 0.0) {
        return Err(Error::Hypothesis(format!("flatness exponent 1/A = {inv_a} is not positive")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty (t, z) grid".into()));
    }
    let base = *sc1.base();
    let eps: Vec<Complex64> = (0..n_points).map(|n| eps0 * base.pow_i(-(n as i64))).collect();
    for e in &eps {
        sc1.check_eps(*e)?;
        sc2.check_eps(*e)?;
    }
    let d: Vec<f64> = eps
        .par_iter()
        .map(|e| {
            grid.iter().try_fold(0.0f64, |m, (t, z)| {
                let a = sc1.evaluate(*e, *t, *z)?.value;
                let b = sc2.evaluate(*e, *t, *z)?.value;
                Ok(m.max((a - b).norm()))
            })
        })
        .collect::<Result<_>>()?;
    let points: Vec<FlatnessPoint> = eps
        .iter()
        .zip(&d)
        .enumerate()
        .map(|(n, (e, d))| {
            let l = e.norm().ln();
            FlatnessPoint {
                n,
                eps: *e,
                eps_abs: e.norm(),
                log2_eps: l * l,
                d: *d,
                used: *d > FLATNESS_FLOOR,
            }
        })
        .collect();
    let used: Vec<&FlatnessPoint> = points.iter().filter(|p| p.used).collect();
    if used.len() < 8 {
        return Err(Error::Degenerate(format!(
            "only {} of {} differences above the floor {FLATNESS_FLOOR:e}",
            used.len(),
            points.len()
        )));
    }
    let rows: Vec<Vec<f64>> = used.iter().map(|p| vec![1.0, p.log2_eps]).collect();
    let y: Vec<f64> = used.iter().map(|p| p.d.ln()).collect();
    let (c, r2) = least_squares(&rows, &y).ok_or_else(|| Error::Degenerate("singular flatness regression".into()))?;
    Ok(FlatnessFit {
        slope: c[1],
        intercept: c[0],
        r2,
        predicted: -inv_a,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtractionSettings {
    /// First index `n` of the sequence `ε₀ q^{−n}`.
    pub n_first: usize,
    /// Last index, the depth bound.
    pub n_last: usize,
    /// Number of consecutive points per extrapolation.
    pub order: usize,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            n_first: 8,
            n_last: 16,
            order: 5,
        }
    }
}

/// `X_k` (not divided by `k!`) on a fixed evaluation grid.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticSeries {
    pub coeffs: Vec<Vec<Complex64>>,
    /// Relative change between the two closest successive estimates per `k`.
    pub stab: Vec<f64>,
    /// First `k` that failed to stabilize, if extraction stopped early.
    pub stopped_at: Option<usize>,
    pub eps: Vec<Complex64>,
    /// `X(ε_n)` on the grid, for remainder estimates.
    pub samples: Vec<Vec<Complex64>>,
}

/// Extraction from any sampled function of ε: `f(ε)` returns its values on
/// the grid. `X_k/k!` is the value at 0 of the polynomial through
/// `(X(ε) − Σ_{p<k} X_p ε^p/p!)/ε^k` at `order` consecutive points, and is
/// accepted where two successive windows agree to `tol` relative.
pub fn extract_from_fn<F>(f: F, eps0: Complex64, base: &QBase, k_max: usize, tol: f64, settings: &ExtractionSettings) -> Result<AsymptoticSeries>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync,
{
    if k_max > 4 {
        return Err(Error::InvalidParameter(format!("k_max = {k_max} exceeds 4")));
    }
    let ExtractionSettings { n_first, n_last, order } = *settings;
    if order < 1 || n_last < n_first + order {
        return Err(Error::InvalidParameter(format!("extraction window {settings:?} too short")));
    }
    let eps: Vec<Complex64> = (n_first..=n_last).map(|n| eps0 * base.pow_i(-(n as i64))).collect();
    let samples: Vec<Vec<Complex64>> = eps.par_iter().map(|e| f(*e)).collect::<Result<_>>()?;
    let g = samples[0].len();
    let mut coeffs: Vec<Vec<Complex64>> = Vec::new();
    let mut stab = Vec::new();
    let mut stopped_at = None;
    let mut fact = 1.0;
    for k in 0..=k_max {
        if k > 0 {
            fact *= k as f64;
        }
        // Reduced values (X − Σ_{p<k} X_p ε^p/p!)/ε^k per sample and grid point.
        let reduced: Vec<Vec<Complex64>> = eps
            .iter()
            .zip(&samples)
            .map(|(e, xs)| {
                (0..g)
                    .map(|i| {
                        let mut r = xs[i];
                        let mut pf = 1.0;
                        for (p, c) in coeffs.iter().enumerate() {
                            if p > 0 {
                                pf *= p as f64;
                            }
                            r -= c[i] * e.powu(p as u32) / pf;
                        }
                        r / e.powu(k as u32)
                    })
                    .collect()
            })
            .collect();
        let estimates: Vec<Vec<Complex64>> = (0..=eps.len() - order)
            .map(|start| {
                (0..g)
                    .map(|i| {
                        let ys: Vec<Complex64> = reduced[start..start + order].iter().map(|r| r[i]).collect();
                        neville_at_zero(&eps[start..start + order], &ys)
                    })
                    .collect()
            })
            .collect();
        let mut best = (f64::INFINITY, 0);
        for w in 1..estimates.len() {
            let scale = estimates[w].iter().map(|v| v.norm()).fold(1.0, f64::max);
            let change = estimates[w].iter().zip(&estimates[w - 1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
            if change < best.0 {
                best = (change, w);
            }
        }
        if !(best.0 < tol) {
            if k == 0 {
                return Err(Error::NonStabilization { k, residual: best.0 });
            }
            stopped_at = Some(k);
            stab.push(best.0);
            break;
        }
        stab.push(best.0);
        coeffs.push(estimates[best.1].iter().map(|v| v * fact).collect());
    }
    Ok(AsymptoticSeries {
        coeffs,
        stab,
        stopped_at,
        eps,
        samples,
    })
}

pub fn extract_coefficients(sc: &SolutionChart, eps0: Complex64, k_max: usize, tol: f64, grid: &[TzPoint], settings: &ExtractionSettings) -> Result<AsymptoticSeries> {
    let f = |e: Complex64| grid.iter().map(|(t, z)| sc.evaluate(e, *t, *z).map(|x| x.value)).collect::<Result<Vec<_>>>();
    extract_from_fn(f, eps0, sc.base(), k_max, tol, settings)
}

#[derive(Debug, Clone, Serialize)]
pub struct GevreyFit {
    pub c1: f64,
    pub h: f64,
    pub b_type: f64,
    pub r2: f64,
    /// Fewer than three remainders above the floor: the expansion is a
    /// polynomial to working precision and the type is reported as 0.
    pub degenerate: bool,
    /// `log` of the normalized remainder per truncation order `N`.
    pub log_remainders: Vec<f64>,
}

/// Relative floor below which a remainder is taken as zero.
pub const REMAINDER_FLOOR: f64 = 1e-13;

/// `ρ_N = max |X(ε) − Σ_{k≤N} X_k ε^k/k!| (N+1)!/|ε|^{N+1}` over samples, and
/// `log ρ_N ≈ log C₁ + N log H + (B log|q|/2) N²`.
pub fn gevrey_fit(series: &AsymptoticSeries, base: &QBase) -> Result<GevreyFit> {
    let orders = series.coeffs.len();
    if orders < 3 {
        return Err(Error::Degenerate(format!("{orders} coefficients, need at least 3 orders")));
    }
    let scale = series.samples.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut log_remainders = Vec::with_capacity(orders);
    let mut usable = Vec::new();
    let mut fact_n1 = 1.0;
    for n in 0..orders {
        fact_n1 *= (n + 1) as f64;
        let mut rho: f64 = 0.0;
        for (e, xs) in series.eps.iter().zip(&series.samples) {
            for (i, x) in xs.iter().enumerate() {
                let mut partial = Complex64::new(0.0, 0.0);
                let mut kf = 1.0;
                for k in 0..=n {
                    if k > 0 {
                        kf *= k as f64;
                    }
                    partial += series.coeffs[k][i] * e.powu(k as u32) / kf;
                }
                let r = (x - partial).norm();
                if r > REMAINDER_FLOOR * scale {
                    rho = rho.max(r * fact_n1 / e.norm().powi(n as i32 + 1));
                }
            }
        }
        log_remainders.push(rho.ln());
        if rho > 0.0 {
            usable.push((n as f64, rho.ln()));
        }
    }
    if usable.len() < 3 {
        return Ok(GevreyFit {
            c1: 0.0,
            h: 0.0,
            b_type: 0.0,
            r2: 0.0,
            degenerate: true,
            log_remainders,
        });
    }
    let rows: Vec<Vec<f64>> = usable.iter().map(|(n, _)| vec![1.0, *n, n * n]).collect();
    let y: Vec<f64> = usable.iter().map(|(_, l)| *l).collect();
    let (c, r2) = least_squares(&rows, &y).ok_or_else(|| Error::Degenerate("singular Gevrey regression".into()))?;
    Ok(GevreyFit {
        c1: c[0].exp(),
        h: c[1].exp(),
        b_type: 2.0 * c[2] / base.log_abs(),
        r2,
        degenerate: false,
        log_remainders,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct YoungConjugate {
    /// `sup_{x ≥ 0} (xy − x²/(4 log|q|))` at the stationary point.
    pub numeric: f64,
    /// `log|q| y²`.
    pub closed: f64,
    pub argmax: f64,
}

pub fn young_conjugate(y: f64, base: &QBase) -> Result<YoungConjugate> {
    if !(y >= 0.0) {
        return Err(Error::InvalidParameter(format!("y must be nonnegative, got {y}")));
    }
    let l = base.log_abs();
    let x = (2.0 * l * y).max(0.0);
    Ok(YoungConjugate {
        numeric: x * y - x * x / (4.0 * l),
        closed: l * y * y,
        argmax: x,
    })
}

/// `log G(x) = log C₁ + x log H + (A log|q|/2) x² + (x+1) log|ε|`.
pub fn prop4_log_g(x: f64, c1: f64, h: f64, a_type: f64, eps_abs: f64, base: &QBase) -> f64 {
    c1.ln() + x * h.ln() + 0.5 * a_type * base.log_abs() * x * x + (x + 1.0) * eps_abs.ln()
}

/// Stationary point `x₀ = (−log H − log|ε|)/(A log|q|)` of `G`.
pub fn prop4_minimizer(h: f64, a_type: f64, eps_abs: f64, base: &QBase) -> f64 {
    (-h.ln() - eps_abs.ln()) / (a_type * base.log_abs())
}

/// Coefficient `1/(2 ã log|q|)` of `−log²|ε|` in the flatness bound implied
/// by a null expansion of type `a_type`, for any `ã > a_type`.
pub fn prop4_convert(a_type: f64, base: &QBase, a_tilde: f64) -> Result<f64> {
    if !(a_type > 0.0) || !(a_tilde > a_type) {
        return Err(Error::InvalidParameter(format!("need 0 < A < A~, got A = {a_type}, A~ = {a_tilde}")));
    }
    Ok(1.0 / (2.0 * a_tilde * base.log_abs()))
}

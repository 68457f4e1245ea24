//! The q-Laplace transform along a direction `λ`:
//!
//! `L^λ F(z) = (log q / π_q) ∫_R F(q^s λ) / Θ(q^s λ / z) ds`,
//!
//! truncated to a window outside which a Gaussian majorant of the integrand
//! is below tolerance, and integrated by composite Simpson with global step
//! halving. Vector-valued integrands share one Theta evaluation per node.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qgeometry::{theta_safe_margin, QBase};
use crate::theta::{log_theta, lower_constant, q_pochhammer_inv, ThetaSettings};

/// Successive Simpson values closer than this multiple of the largest
/// integrand modulus times the window length are equal up to rounding.
pub const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
    pub s_pad: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            initial_step: 0.25,
            max_halvings: 12,
            s_pad: 1.0,
        }
    }
}

impl QuadSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.initial_step > 0.0 && self.initial_step <= 0.5) || self.max_halvings < 3 || !(self.s_pad >= 0.0) {
            return Err(Error::InvalidParameter(format!("invalid quadrature settings {self:?}")));
        }
        Ok(())
    }
}

/// `|F(x)| ≤ c1 · e^{mbar log²|x|}` along the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub c1: f64,
    pub mbar: f64,
}

impl GrowthCertificate {
    pub fn new(c1: f64, mbar: f64, base: &QBase) -> Result<Self> {
        let limit = 1.0 / (2.0 * base.log_abs());
        if !(c1 > 0.0) || !(mbar > 0.0) || !(mbar < limit) {
            return Err(Error::InvalidParameter(format!(
                "growth certificate needs c1 > 0 and 0 < mbar < {limit}, got c1 = {c1}, mbar = {mbar}"
            )));
        }
        Ok(Self { c1, mbar })
    }

    /// Fits `c1` for a given `mbar` by sampling `|F|e^{-mbar log²|x|}` along
    /// the path through the region where the kernel at `z` is not negligible,
    /// with a factor 4 for the gaps between samples.
    pub fn fit<F>(dim: usize, f: F, lambda: Complex64, z: Complex64, base: &QBase, mbar: f64) -> Result<Self>
    where
        F: Fn(Complex64, &mut [Complex64]) -> Result<()>,
    {
        let big_l = base.log_abs();
        let center = (z.norm().ln() - lambda.norm().ln()) / big_l;
        let span = (100.0 / big_l).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        let mut c1 = f64::MIN_POSITIVE;
        let steps = (2.0 * span / 0.25).ceil() as usize;
        for i in 0..=steps {
            let s = center - span + 0.25 * i as f64;
            let x = base.pow(s) * lambda;
            f(x, &mut buf)?;
            let l = x.norm().ln();
            let w = (-mbar * l * l).exp();
            for v in &buf {
                let m = v.norm() * w;
                if m.is_finite() {
                    c1 = c1.max(m);
                }
            }
        }
        Self::new(4.0 * c1, mbar, base)
    }
}

/// `ξ` halfway between `2·mbar·log|q|` and 1.
pub fn default_xi(mbar: f64, base: &QBase) -> f64 {
    0.5 * (2.0 * mbar * base.log_abs() + 1.0)
}

/// Window `[s_lo, s_hi]` outside which the majorant
/// `|κ| c1 e^{mbar ℓ²} / (C_ξ e^{ξ(ℓ − log|z|)²/(2L)})`, `ℓ = log|q^s λ|`,
/// integrates to less than `tol`. `κ = log q / π_q`.
#[allow(clippy::too_many_arguments)]
pub fn truncation_window(
    cert: &GrowthCertificate,
    lambda: Complex64,
    z: Complex64,
    base: &QBase,
    xi: f64,
    tol: f64,
    c_xi: f64,
    s_pad: f64,
) -> Result<(f64, f64)> {
    let big_l = base.log_abs();
    let limit = xi / (2.0 * big_l);
    if !(cert.mbar < limit) {
        return Err(Error::Divergent { mbar: cert.mbar, limit });
    }
    let alpha = limit - cert.mbar;
    let lz = z.norm().ln();
    let l_lambda = lambda.norm().ln();
    let k = (cert.c1 * q_pochhammer_inv(base).norm()).ln() - c_xi.ln();
    let exponent = |l: f64| k + cert.mbar * l * l - xi * (l - lz).powi(2) / (2.0 * big_l);
    let l_star = xi * lz / (2.0 * alpha * big_l);
    let e_star = exponent(l_star);
    let s_star = (l_star - l_lambda) / big_l;
    let a = alpha * big_l * big_l;
    // Both tails together: e^{E* − a w²} / (a w) ≤ tol.
    let target = e_star - tol.ln();
    let mut w = (target.max(1.0) / a).sqrt();
    for _ in 0..30 {
        w = ((target - (a * w).ln()).max(0.0) / a).sqrt().max(1.0);
    }
    Ok((s_star - w - s_pad, s_star + w + s_pad))
}

/// Result of one transform together with its quadrature diagnostics.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub values: Vec<Complex64>,
    pub window: (f64, f64),
    pub halvings: usize,
    pub last_change: f64,
    pub nodes: usize,
}

#[derive(Debug)]
pub struct QLaplace {
    base: QBase,
    delta: f64,
    quad: QuadSettings,
    theta: ThetaSettings,
    xi: Option<f64>,
    prefactor: Complex64,
    c_xi: Mutex<HashMap<u64, f64>>,
}

impl Clone for QLaplace {
    fn clone(&self) -> Self {
        Self {
            base: self.base,
            delta: self.delta,
            quad: self.quad,
            theta: self.theta,
            xi: self.xi,
            prefactor: self.prefactor,
            c_xi: Mutex::new(self.c_xi.lock().expect("poisoned").clone()),
        }
    }
}

impl QLaplace {
    pub fn new(base: QBase, delta: f64, quad: QuadSettings, theta: ThetaSettings) -> Result<Self> {
        quad.validate()?;
        theta.validate()?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            base,
            delta,
            quad,
            theta,
            xi: None,
            prefactor: q_pochhammer_inv(&base),
            c_xi: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::InvalidParameter(format!("xi must lie in (0, 1), got {xi}")));
        }
        self.xi = Some(xi);
        Ok(self)
    }

    pub fn base(&self) -> &QBase {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn quad(&self) -> &QuadSettings {
        &self.quad
    }

    pub fn theta_settings(&self) -> &ThetaSettings {
        &self.theta
    }

    /// `log q / π_q`.
    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    pub fn xi_for(&self, cert: &GrowthCertificate) -> f64 {
        self.xi.unwrap_or_else(|| default_xi(cert.mbar, &self.base))
    }

    pub fn lower_constant(&self, xi: f64) -> Result<f64> {
        let key = xi.to_bits();
        if let Some(v) = self.c_xi.lock().expect("poisoned").get(&key) {
            return Ok(*v);
        }
        let v = lower_constant(&self.base, self.delta, xi, &self.theta)?;
        self.c_xi.lock().expect("poisoned").insert(key, v);
        Ok(v)
    }

    pub fn truncation_window(&self, cert: &GrowthCertificate, lambda: Complex64, z: Complex64) -> Result<(f64, f64)> {
        let xi = self.xi_for(cert);
        truncation_window(cert, lambda, z, &self.base, xi, self.quad.abs_tol, self.lower_constant(xi)?, self.quad.s_pad)
    }

    pub fn check_safe(&self, lambda: Complex64, z: Complex64) -> Result<()> {
        let margin = theta_safe_margin(z, lambda, &self.base, self.delta)?;
        if margin <= self.delta {
            return Err(Error::NotThetaSafe {
                z,
                lambda,
                margin,
                delta: self.delta,
            });
        }
        Ok(())
    }

    pub fn transform<F>(&self, f: F, lambda: Complex64, z: Complex64, cert: &GrowthCertificate) -> Result<Complex64>
    where
        F: Fn(Complex64) -> Complex64,
    {
        let g = |x: Complex64, out: &mut [Complex64]| {
            out[0] = f(x);
            Ok(())
        };
        Ok(self.transform_many(1, g, lambda, z, cert)?.values[0])
    }

    pub fn transform_many<F>(&self, dim: usize, f: F, lambda: Complex64, z: Complex64, cert: &GrowthCertificate) -> Result<Quadrature>
    where
        F: Fn(Complex64, &mut [Complex64]) -> Result<()>,
    {
        self.check_safe(lambda, z)?;
        let window = self.truncation_window(cert, lambda, z)?;
        self.integrate(dim, &f, lambda, z, window)
    }

    /// The branches over `s ≥ 0` and `s ≤ 0`.
    pub fn split<F>(&self, f: F, lambda: Complex64, z: Complex64, cert: &GrowthCertificate) -> Result<(Complex64, Complex64)>
    where
        F: Fn(Complex64) -> Complex64,
    {
        self.check_safe(lambda, z)?;
        let (lo, hi) = self.truncation_window(cert, lambda, z)?;
        let g = |x: Complex64, out: &mut [Complex64]| {
            out[0] = f(x);
            Ok(())
        };
        let zero = Complex64::new(0.0, 0.0);
        let plus = if hi > 0.0 { self.integrate(1, &g, lambda, z, (lo.max(0.0), hi))?.values[0] } else { zero };
        let minus = if lo < 0.0 { self.integrate(1, &g, lambda, z, (lo, hi.min(0.0)))?.values[0] } else { zero };
        Ok((plus, minus))
    }

    /// Composite Simpson on `[a, b]` from successive trapezoid sums
    /// `S_{h/2} = (4 T_{h/2} − T_h) / 3`, reusing all earlier nodes.
    pub fn integrate<F>(&self, dim: usize, f: &F, lambda: Complex64, z: Complex64, (a, b): (f64, f64)) -> Result<Quadrature>
    where
        F: Fn(Complex64, &mut [Complex64]) -> Result<()>,
    {
        let zero = Complex64::new(0.0, 0.0);
        let mut buf = vec![zero; dim];
        // `mass` accumulates `|term|`, which sets the rounding floor of the sums.
        let mass = std::cell::Cell::new(0.0f64);
        let mut eval = |s: f64, acc: &mut [Complex64], weight: f64| -> Result<()> {
            let x = self.base.pow(s) * lambda;
            let kernel = (-log_theta(x / z, &self.base, &self.theta)?).exp();
            f(x, &mut buf)?;
            for (acc, v) in acc.iter_mut().zip(&buf) {
                let term = *v * kernel;
                if term.re.is_finite() && term.im.is_finite() {
                    *acc += term * weight;
                    mass.set(mass.get().max(term.norm()));
                }
            }
            Ok(())
        };

        let mut n = ((b - a) / self.quad.initial_step).ceil().max(2.0) as usize;
        n += n % 2;
        let mut h = (b - a) / n as f64;
        let mut sum = vec![zero; dim];
        eval(a, &mut sum, 0.5)?;
        eval(b, &mut sum, 0.5)?;
        for i in 1..n {
            eval(a + h * i as f64, &mut sum, 1.0)?;
        }
        let mut trap: Vec<Complex64> = sum.iter().map(|v| v * h).collect();
        let mut simpson: Option<Vec<Complex64>> = None;
        let mut previous_change = f64::INFINITY;

        for halving in 1..=self.quad.max_halvings {
            let mut mids = vec![zero; dim];
            for i in 0..n {
                eval(a + h * (i as f64 + 0.5), &mut mids, 1.0)?;
            }
            for (s, m) in sum.iter_mut().zip(&mids) {
                *s += m;
            }
            n *= 2;
            h *= 0.5;
            let trap_new: Vec<Complex64> = sum.iter().map(|v| v * h).collect();
            let simp_new: Vec<Complex64> = trap_new.iter().zip(&trap).map(|(t2, t1)| (4.0 * t2 - t1) / 3.0).collect();
            if let Some(old) = &simpson {
                let change = simp_new.iter().zip(old).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                let floor = ROUNDING_FLOOR * mass.get() * (b - a);
                if change < self.quad.abs_tol || change <= floor {
                    let values = simp_new.iter().map(|v| v * self.prefactor).collect();
                    return Ok(Quadrature {
                        values,
                        window: (a, b),
                        halvings: halving,
                        last_change: change,
                        nodes: n + 1,
                    });
                }
                previous_change = change;
            }
            trap = trap_new;
            simpson = Some(simp_new);
        }
        Err(Error::NonConvergence {
            halvings: self.quad.max_halvings,
            last_change: previous_change,
            tol: self.quad.abs_tol,
        })
    }
}

/// One-shot transform with default Theta settings.
pub fn q_laplace<F>(
    f: F,
    lambda: Complex64,
    z: Complex64,
    base: &QBase,
    cert: &GrowthCertificate,
    settings: &QuadSettings,
    delta: f64,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    QLaplace::new(*base, delta, *settings, ThetaSettings::default())?.transform(f, lambda, z, cert)
}

pub fn q_laplace_split<F>(
    f: F,
    lambda: Complex64,
    z: Complex64,
    base: &QBase,
    cert: &GrowthCertificate,
    settings: &QuadSettings,
    delta: f64,
) -> Result<(Complex64, Complex64)>
where
    F: Fn(Complex64) -> Complex64,
{
    QLaplace::new(*base, delta, *settings, ThetaSettings::default())?.split(f, lambda, z, cert)
}

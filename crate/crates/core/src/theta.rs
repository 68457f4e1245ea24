//! The Theta Jacobi function `Θ(x) = Σ_{n∈Z} q^{-n(n-1)/2} xⁿ` and `π_q`.
//!
//! Evaluation reduces `x = q^m x₀` with `1 ≤ |x₀| < |q|` and uses
//! `Θ(q^m x₀) = q^{m(m+1)/2} x₀^m Θ(x₀)`; the prefactor is kept as a logarithm.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::qgeometry::QBase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSettings {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for ThetaSettings {
    fn default() -> Self {
        Self {
            tol: 1e-17,
            max_terms: 400,
        }
    }
}

impl ThetaSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_terms < 8 {
            return Err(Error::InvalidParameter(format!(
                "theta settings need tol > 0 and max_terms >= 8, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `x = q^m x₀` with `1 ≤ |x₀| < |q|`.
#[derive(Debug, Clone, Copy)]
pub struct Reduced {
    pub m: i64,
    pub x0: Complex64,
    /// `log(q^{m(m+1)/2} x₀^m)`.
    pub log_factor: Complex64,
}

pub fn reduce(x: Complex64, base: &QBase) -> Result<Reduced> {
    if x.norm() == 0.0 {
        return Err(Error::ZeroArgument("theta argument"));
    }
    let mut m = (x.norm().ln() / base.log_abs()).floor() as i64;
    let mut x0 = x * base.pow_i(-m);
    // Rounding can leave |x₀| a hair outside [1, |q|).
    if x0.norm() < 1.0 {
        m -= 1;
        x0 *= base.q();
    } else if x0.norm() >= base.abs() {
        m += 1;
        x0 /= base.q();
    }
    let mf = m as f64;
    let log_factor = base.log_q() * (0.5 * mf * (mf + 1.0)) + x0.ln() * mf;
    Ok(Reduced { m, x0, log_factor })
}

/// `|Σ terms| / Σ |terms|` below which the sum is repeated in double-double.
pub const CANCELLATION: f64 = 1e-3;

/// Two-sided sum on the fundamental annulus with a geometric tail bound.
///
/// Near the zeros `x₀ = −1` and `x₀ = −q` the terms cancel to well below
/// their size; the same terms are then summed again in double-double.
pub fn theta_fundamental(x0: Complex64, base: &QBase, settings: &ThetaSettings) -> Result<Complex64> {
    let qinv = 1.0 / base.q();
    let abs_x0 = x0.norm();
    let abs_q = base.abs();
    let mut sum = Complex64::new(1.0, 0.0);
    let mut mass = 1.0;
    let mut terms = 1;

    // n ≥ 1: term_{n+1} = term_n · x₀ q^{-n}.
    let mut term = Complex64::new(1.0, 0.0);
    let mut qpow_neg = Complex64::new(1.0, 0.0);
    let mut ratio_abs = abs_x0;
    let mut n_pos = 0;
    loop {
        term *= x0 * qpow_neg;
        sum += term;
        mass += term.norm();
        terms += 1;
        n_pos += 1;
        qpow_neg *= qinv;
        ratio_abs /= abs_q;
        if ratio_abs < 0.5 && 2.0 * ratio_abs * term.norm() < 0.5 * settings.tol {
            break;
        }
        if terms > settings.max_terms {
            return Err(too_many_terms(settings));
        }
    }

    // n ≤ -1: term_{n-1} = term_n · q^{n-1} / x₀.
    let x0inv = 1.0 / x0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut qpow_neg = qinv;
    let mut ratio_abs = 1.0 / (abs_q * abs_x0);
    let mut n_neg = 0;
    loop {
        term *= x0inv * qpow_neg;
        sum += term;
        mass += term.norm();
        terms += 1;
        n_neg += 1;
        qpow_neg *= qinv;
        ratio_abs /= abs_q;
        if ratio_abs < 0.5 && 2.0 * ratio_abs * term.norm() < 0.5 * settings.tol {
            break;
        }
        if terms > settings.max_terms {
            return Err(too_many_terms(settings));
        }
    }
    if sum.norm() < CANCELLATION * mass {
        return Ok(sum_double_double(x0, base.q(), n_pos, n_neg));
    }
    Ok(sum)
}

fn too_many_terms(settings: &ThetaSettings) -> Error {
    Error::InvalidParameter(format!("theta series needs more than {} terms", settings.max_terms))
}

fn sum_double_double(x0: Complex64, q: Complex64, n_pos: usize, n_neg: usize) -> Complex64 {
    type Dd = Complex<TwoFloat>;
    let dd = |z: Complex64| Dd::new(TwoFloat::from(z.re), TwoFloat::from(z.im));
    let one = Dd::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    let (x0, qinv) = (dd(x0), one / dd(q));
    let x0inv = one / x0;
    let mut sum = one;
    let (mut term, mut qpow_neg) = (one, one);
    for _ in 0..n_pos {
        term = term * x0 * qpow_neg;
        sum = sum + term;
        qpow_neg = qpow_neg * qinv;
    }
    let (mut term, mut qpow_neg) = (one, qinv);
    for _ in 0..n_neg {
        term = term * x0inv * qpow_neg;
        sum = sum + term;
        qpow_neg = qpow_neg * qinv;
    }
    Complex64::new(sum.re.into(), sum.im.into())
}

pub fn theta(x: Complex64, base: &QBase, settings: &ThetaSettings) -> Result<Complex64> {
    let r = reduce(x, base)?;
    if r.log_factor.re > 700.0 || r.log_factor.re < -745.0 {
        return Err(Error::ThetaRange { m: r.m });
    }
    Ok(r.log_factor.exp() * theta_fundamental(r.x0, base, settings)?)
}

/// `log Θ(x)` on some branch; never overflows.
pub fn log_theta(x: Complex64, base: &QBase, settings: &ThetaSettings) -> Result<Complex64> {
    let r = reduce(x, base)?;
    Ok(r.log_factor + theta_fundamental(r.x0, base, settings)?.ln())
}

/// `(q^{-1}; q^{-1})_∞ = Π_{n≥0} (1 − q^{-n-1})`.
pub fn q_pochhammer_inv(base: &QBase) -> Complex64 {
    let qinv = 1.0 / base.q();
    let mut p = Complex64::new(1.0, 0.0);
    let mut w = qinv;
    loop {
        p *= 1.0 - w;
        if w.norm() < 1e-15 {
            return p;
        }
        w *= qinv;
    }
}

pub fn pi_q(base: &QBase) -> Complex64 {
    base.log_q() / q_pochhammer_inv(base)
}

/// `|Θ(x)| / exp(ξ log²|x| / (2 log|q|))`.
pub fn theta_lower_ratio(x: Complex64, base: &QBase, xi: f64, settings: &ThetaSettings) -> Result<f64> {
    let l = x.norm().ln();
    Ok((log_theta(x, base, settings)?.re - xi * l * l / (2.0 * base.log_abs())).exp())
}

/// `min_k |1 + x q^k|` over integers `k`; the value that keeps `1/Θ(x)` bounded.
pub fn zero_distance(x: Complex64, base: &QBase) -> f64 {
    let Ok(r) = reduce(x, base) else {
        return 1.0;
    };
    (-3..=2)
        .map(|k| (1.0 + r.x0 * base.pow_i(k)).norm())
        .fold(f64::INFINITY, f64::min)
}

/// A lower constant `C_ξ` with `|Θ(x)| ≥ C_ξ e^{ξ log²|x|/(2 log|q|)}` whenever
/// `|1 + x q^k| > δ` for every integer `k`.
///
/// Uses the identity `|Θ(x)| = e^{ℓ²/(2L) + ℓ/2} g(x₀)` with `ℓ = log|x|`,
/// minimizing `g` on a polar grid of the fundamental annulus and the
/// remaining Gaussian factor in closed form. A 0.9 factor covers grid gaps.
pub fn lower_constant(base: &QBase, delta: f64, xi: f64, settings: &ThetaSettings) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidParameter(format!("xi must lie in (0, 1), got {xi}")));
    }
    let big_l = base.log_abs();
    let (n_r, n_a) = (96, 384);
    let mut g_min = f64::INFINITY;
    for i in 0..n_r {
        let l0 = big_l * (i as f64 + 0.5) / n_r as f64;
        for j in 0..n_a {
            let x0 = Complex64::from_polar(l0.exp(), std::f64::consts::TAU * j as f64 / n_a as f64);
            if zero_distance(x0, base) <= delta {
                continue;
            }
            let g = theta_fundamental(x0, base, settings)?.norm() * (-l0 * l0 / (2.0 * big_l) - 0.5 * l0).exp();
            g_min = g_min.min(g);
        }
    }
    if !g_min.is_finite() {
        return Err(Error::InvalidParameter(format!("no theta-safe points for delta {delta}")));
    }
    Ok(0.9 * g_min * (-big_l / (8.0 * (1.0 - xi))).exp())
}

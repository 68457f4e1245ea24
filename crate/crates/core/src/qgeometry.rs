//! Powers of q and membership tests for q-spirals and the Theta-safe domain.
//!
//! Points are described by spiral coordinates `(u, v)` with
//! `x = e^{2πiu} q^v`: `v = ln|x| / ln|q|` and `u` is the turn left over once
//! the rotation carried by `q^v` is removed. Multiplying by `q^n` shifts `v`
//! by `n` and leaves `u` unchanged.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBase {
    q: Complex64,
    log_q: Complex64,
}

impl QBase {
    pub fn new(q: Complex64) -> Result<Self> {
        if !(q.norm() > 1.0) || !q.re.is_finite() || !q.im.is_finite() {
            return Err(Error::InvalidParameter(format!("|q| must exceed 1, got {q}")));
        }
        Ok(Self { q, log_q: q.ln() })
    }

    pub fn real(q: f64) -> Result<Self> {
        Self::new(Complex64::new(q, 0.0))
    }

    /// `q = modulus · e^{2πi·turns}`.
    pub fn polar(modulus: f64, turns: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(modulus, TAU * turns))
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn log_q(&self) -> Complex64 {
        self.log_q
    }

    /// `log|q|`, written `L` throughout the crate.
    pub fn log_abs(&self) -> f64 {
        self.log_q.re
    }

    pub fn abs(&self) -> f64 {
        self.q.norm()
    }

    pub fn pow(&self, t: f64) -> Complex64 {
        (self.log_q * t).exp()
    }

    pub fn pow_c(&self, w: Complex64) -> Complex64 {
        (self.log_q * w).exp()
    }

    pub fn pow_i(&self, n: i64) -> Complex64 {
        self.pow(n as f64)
    }

    /// Spiral coordinates `(u, v)` of a nonzero point, `u ∈ [0, 1)`.
    pub fn spiral_coords(&self, x: Complex64) -> (f64, f64) {
        let v = x.norm().ln() / self.log_abs();
        let u = (x.arg() - v * self.log_q.im) / TAU;
        (u.rem_euclid(1.0), v)
    }

    pub fn from_spiral(&self, u: f64, v: f64) -> Complex64 {
        Complex64::from_polar(1.0, TAU * u) * self.pow(v)
    }
}

pub fn qpow(base: &QBase, t: f64) -> Complex64 {
    base.pow(t)
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Membership of `x` modulo 1, for intervals of turns.
    pub fn contains_mod1(&self, x: f64) -> bool {
        if self.len() >= 1.0 {
            return true;
        }
        let offset = (x - self.lo).rem_euclid(1.0);
        offset > 0.0 && offset < self.len()
    }
}

/// The pair `(I₁, I₂)` carrying `U_I = {e^{2πiu} q^v : u ∈ I₁, v ∈ I₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartBase {
    pub i1: Interval,
    pub i2: Interval,
}

impl ChartBase {
    pub fn new(i1: Interval, i2: Interval) -> Result<Self> {
        if !(i1.len() < 0.25 && i2.len() < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "chart intervals must be shorter than 1/4, got {} and {}",
                i1.len(),
                i2.len()
            )));
        }
        Ok(Self { i1, i2 })
    }

    pub fn contains(&self, x: Complex64, base: &QBase) -> bool {
        if x == Complex64::new(0.0, 0.0) {
            return false;
        }
        let (u, v) = base.spiral_coords(x);
        self.i2.contains(v) && self.i1.contains_mod1(u)
    }

    pub fn sup_modulus(&self, base: &QBase) -> f64 {
        base.abs().powf(self.i2.hi)
    }

    pub fn inf_modulus(&self, base: &QBase) -> f64 {
        base.abs().powf(self.i2.lo)
    }

    pub fn center(&self, base: &QBase) -> Complex64 {
        base.from_spiral(self.i1.mid(), self.i2.mid())
    }

    pub fn point(&self, base: &QBase, u: f64, v: f64) -> Complex64 {
        base.from_spiral(u, v)
    }
}

/// A patch `{r e^{2πiθ} : r ∈ modulus, θ ∈ arg}` with the argument in turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousBase {
    pub modulus: Interval,
    pub arg: Interval,
}

impl ContinuousBase {
    pub fn new(modulus: Interval, arg: Interval) -> Result<Self> {
        if !(modulus.lo > 0.0) {
            return Err(Error::InvalidParameter(
                "patch must stay at positive distance from the origin".into(),
            ));
        }
        if arg.len() > 1.0 {
            return Err(Error::InvalidParameter("argument band wider than one turn".into()));
        }
        Ok(Self { modulus, arg })
    }

    pub fn dist0(&self) -> f64 {
        self.modulus.lo
    }

    pub fn contains(&self, x: Complex64) -> bool {
        self.modulus.contains(x.norm()) && self.arg.contains_mod1(turns(x))
    }

    pub fn point(&self, r: f64, turn: f64) -> Complex64 {
        Complex64::from_polar(r, TAU * turn)
    }

    pub fn center(&self) -> Complex64 {
        self.point(self.modulus.mid(), self.arg.mid())
    }
}

pub fn turns(x: Complex64) -> f64 {
    (x.arg() / TAU).rem_euclid(1.0)
}

pub fn in_discrete_spiral(eps: Complex64, chart: &ChartBase, base: &QBase) -> Result<bool> {
    if eps.norm() == 0.0 {
        return Err(Error::ZeroArgument("epsilon"));
    }
    discrete_spiral_index(eps, chart, base).map(|n| n.is_some())
}

/// The smallest `n ≥ 0` with `ε qⁿ ∈ U_I`, if any.
pub fn discrete_spiral_index(eps: Complex64, chart: &ChartBase, base: &QBase) -> Result<Option<u32>> {
    if eps.norm() == 0.0 {
        return Err(Error::ZeroArgument("epsilon"));
    }
    let bound = ((chart.sup_modulus(base).ln() - eps.norm().ln()) / base.log_abs()).ceil() + 1.0;
    if bound < 0.0 {
        return Ok(None);
    }
    let (u, v) = base.spiral_coords(eps);
    if !chart.i1.contains_mod1(u) {
        return Ok(None);
    }
    for n in 0..=(bound as u32) {
        if chart.i2.contains(v + n as f64) {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

pub fn in_continuous_spiral(tau: Complex64, v: &ContinuousBase, base: &QBase) -> Result<bool> {
    spiral_meets(tau, v, base, 0.0, f64::INFINITY)
}

/// `τ ∈ V q^{R}`: some real `l` of either sign has `τ q^{-l} ∈ V`.
pub fn in_two_sided_spiral(tau: Complex64, v: &ContinuousBase, base: &QBase) -> Result<bool> {
    spiral_meets(tau, v, base, f64::NEG_INFINITY, f64::INFINITY)
}

fn spiral_meets(tau: Complex64, v: &ContinuousBase, base: &QBase, l_min: f64, l_max: f64) -> Result<bool> {
    if tau.norm() == 0.0 {
        return Err(Error::ZeroArgument("tau"));
    }
    let big_l = base.log_abs();
    let ln_tau = tau.norm().ln();
    let lo = ((ln_tau - v.modulus.hi.ln()) / big_l).max(l_min);
    let hi = ((ln_tau - v.modulus.lo.ln()) / big_l).min(l_max);
    if !(lo < hi) {
        return Ok(false);
    }
    let rate = -base.log_q().im / TAU;
    let a0 = turns(tau) + rate * lo;
    let a1 = turns(tau) + rate * hi;
    let (start, len) = (a0.min(a1), (a1 - a0).abs());
    Ok(arc_meets_band(start, len, &v.arg))
}

fn arc_meets_band(start: f64, len: f64, band: &Interval) -> bool {
    if len + band.len() >= 1.0 {
        return true;
    }
    let gap = (band.lo - start).rem_euclid(1.0);
    gap < len || gap + band.len() > 1.0
}

/// Closest approach of `k ↦ λ q^{-k} / z` to `-1`, as `min |1 + λ q^{-k}/z|`
/// over the modulus window where that approach can be small.
///
/// Returns `f64::INFINITY` when the spiral never enters the window.
pub fn theta_safe_margin(z: Complex64, lambda: Complex64, base: &QBase, delta: f64) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("z"));
    }
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroArgument("lambda"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let w = lambda / z;
    let big_l = base.log_abs();
    let r_lo = (1.0 - 3.0 * delta).max(0.5 * (1.0 - delta));
    let r_hi = 1.0 + 3.0 * delta;
    let k_lo = (w.norm().ln() - r_hi.ln()) / big_l;
    let k_hi = (w.norm().ln() - r_lo.ln()) / big_l;
    Ok(min_distance(w, base, k_lo, k_hi))
}

fn min_distance(w: Complex64, base: &QBase, k_lo: f64, k_hi: f64) -> f64 {
    const STEP: f64 = 1e-3;
    let dist = |k: f64| (1.0 + w * base.pow(-k)).norm();
    let n = ((k_hi - k_lo) / STEP).ceil().max(1.0) as usize;
    let h = (k_hi - k_lo) / n as f64;
    let ratio = base.pow(-h);
    let mut x = w * base.pow(-k_lo);
    let (mut best, mut best_j) = (f64::INFINITY, 0);
    for j in 0..=n {
        let d = (1.0 + x).norm();
        if d < best {
            best = d;
            best_j = j;
        }
        x *= ratio;
    }
    let mut a = k_lo + h * best_j.saturating_sub(1) as f64;
    let mut b = (k_lo + h * (best_j + 1) as f64).min(k_hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(dist(0.5 * (a + b)))
}

pub fn in_theta_safe(z: Complex64, lambda: Complex64, base: &QBase, delta: f64) -> Result<bool> {
    Ok(theta_safe_margin(z, lambda, base, delta)? > delta)
}

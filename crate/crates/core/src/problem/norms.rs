//! Grid versions of the weighted sup-norms, the shift-operator constant of
//! the norm lemmas, and the admissibility fit of initial data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{GevreyParams, InitialTerm};
use crate::error::{Error, Result};
use crate::qgeometry::QBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// `|v| e^{−M log²|τ/ε|} |τ/ε|^{−Cβ} |q|^{A₁β²}` on `V q^{R+}`.
    Spiral,
    /// `|v| |ε|^{Cβ} e^{−M log²|ε/τ|} |q|^{A₁β²}` on the punctured disc.
    Disc,
}

fn log_weight(tau: Complex64, beta: usize, eps: Complex64, g: &GevreyParams, flavor: Flavor, base: &QBase) -> f64 {
    let l = (tau / eps).norm().ln();
    let b = beta as f64;
    let common = -g.m_big * l * l + g.a1_type * b * b * base.log_abs();
    match flavor {
        Flavor::Spiral => common - g.c_geom * b * l,
        Flavor::Disc => common + g.c_geom * b * eps.norm().ln(),
    }
}

/// Grid maximum of the weighted modulus of `values[i] = v(taus[i])`.
pub fn weighted_norm(taus: &[Complex64], values: &[Complex64], beta: usize, eps: Complex64, g: &GevreyParams, flavor: Flavor, base: &QBase) -> f64 {
    taus.iter()
        .zip(values)
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(t, v)| (v.norm().ln() + log_weight(*t, beta, eps, g, flavor, base)).exp())
        .fold(0.0, f64::max)
}

/// `Σ_β ‖v_β‖_β δ^β / β!` for a series sampled as `series[β][i] = v_β(taus[i])`.
pub fn series_norm(taus: &[Complex64], series: &[Vec<Complex64>], eps: Complex64, delta: f64, g: &GevreyParams, flavor: Flavor, base: &QBase) -> f64 {
    let mut fact = 1.0;
    let mut total = 0.0;
    for (beta, v) in series.iter().enumerate() {
        if beta > 0 {
            fact *= beta as f64;
        }
        total += weighted_norm(taus, v, beta, eps, g, flavor, base) * delta.powi(beta as i32) / fact;
    }
    total
}

/// Coefficients of `z^s (τ/ε)^{m₁} ∂_z^{−k} v(τ, z q^{−m₂})`:
/// entry `β ≥ k+s` is `(τ/ε)^{m₁} v_{β−k−s} β!/(β−s)! q^{−m₂(β−s)}`.
#[allow(clippy::too_many_arguments)]
pub fn apply_shift_operator(
    taus: &[Complex64],
    series: &[Vec<Complex64>],
    eps: Complex64,
    s: usize,
    k: usize,
    m1: u32,
    m2: u32,
    base: &QBase,
) -> Vec<Vec<Complex64>> {
    let shift = k + s;
    let n = series.len() + shift;
    let zero = vec![Complex64::new(0.0, 0.0); taus.len()];
    (0..n)
        .map(|beta| {
            if beta < shift {
                return zero.clone();
            }
            let falling: f64 = ((beta - s + 1)..=beta).map(|i| i as f64).product();
            let dil = base.pow(-(m2 as f64) * (beta - s) as f64);
            series[beta - shift]
                .iter()
                .zip(taus)
                .map(|(v, t)| (t / eps).powu(m1) * v * falling * dil)
                .collect()
        })
        .collect()
}

fn check_shift_hypotheses(s: usize, k: usize, m1: u32, m2: u32, g: &GevreyParams) -> Result<()> {
    let n = (k + s) as f64;
    if !(m1 as f64 <= g.c_geom * n) || !(m2 as f64 >= 2.0 * n * g.a1_type) {
        return Err(Error::Hypothesis(format!(
            "need m1 <= C(k+s) = {} and m2 >= 2(k+s)A1 = {}, got m1 = {m1}, m2 = {m2}",
            g.c_geom * n,
            2.0 * n * g.a1_type
        )));
    }
    Ok(())
}

/// `(c_U/c_V)^{C(k+s)−m₁} |q|^{(k+s)²A₁ − m₂k}` for the spiral norm, where
/// `c_U ≥ |ε|` and `c_V ≤ |τ|` on the sets involved.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_constant(s: usize, k: usize, m1: u32, m2: u32, g: &GevreyParams, cu: f64, cv: f64, base: &QBase) -> Result<f64> {
    check_shift_hypotheses(s, k, m1, m2, g)?;
    let n = (k + s) as f64;
    Ok((cu / cv).powf(g.c_geom * n - m1 as f64) * base.abs().powf(n * n * g.a1_type - (m2 as f64) * k as f64))
}

/// Disc analogue: `ρ₀^{m₁} r₀^{C(k+s)−m₁} |q|^{(k+s)²A₁ − m₂k}` with
/// `|τ| ≤ ρ₀`, `|ε| ≤ r₀`.
#[allow(clippy::too_many_arguments)]
pub fn lemma4_constant(s: usize, k: usize, m1: u32, m2: u32, g: &GevreyParams, rho0: f64, r0: f64, base: &QBase) -> Result<f64> {
    check_shift_hypotheses(s, k, m1, m2, g)?;
    let n = (k + s) as f64;
    Ok(rho0.powi(m1 as i32) * r0.powf(g.c_geom * n - m1 as f64) * base.abs().powf(n * n * g.a1_type - (m2 as f64) * k as f64))
}

/// Polar patch `{r e^{2πiθ}}` sampled at cell midpoints, log-spaced in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarPatch {
    pub modulus: (f64, f64),
    pub arg: (f64, f64),
}

impl PolarPatch {
    pub fn points(&self, n: usize) -> Vec<Complex64> {
        let (l0, l1) = (self.modulus.0.ln(), self.modulus.1.ln());
        let mut pts = Vec::with_capacity(n * n);
        for i in 0..n {
            let r = (l0 + (l1 - l0) * (i as f64 + 0.5) / n as f64).exp();
            for j in 0..n {
                let a = self.arg.0 + (self.arg.1 - self.arg.0) * (j as f64 + 0.5) / n as f64;
                pts.push(Complex64::from_polar(r, std::f64::consts::TAU * a));
            }
        }
        pts
    }
}

/// Sample sets for the admissibility fit. `tau_spiral` patches are swept
/// along `q^l`, `0 ≤ l ≤ l_max`, to reach into `V q^{R+}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilityGrid {
    pub eps: Vec<PolarPatch>,
    pub tau: Vec<PolarPatch>,
    #[serde(default)]
    pub tau_spiral: Vec<PolarPatch>,
    #[serde(default = "default_l_max")]
    pub l_max: f64,
    pub n: usize,
}

fn default_l_max() -> f64 {
    6.0
}

impl AdmissibilityGrid {
    fn eps_points(&self, n: usize) -> Vec<Complex64> {
        self.eps.iter().flat_map(|p| p.points(n)).collect()
    }

    fn tau_points(&self, n: usize, base: &QBase) -> Vec<Complex64> {
        let mut pts: Vec<Complex64> = self.tau.iter().flat_map(|p| p.points(n)).collect();
        for p in &self.tau_spiral {
            let v = p.points(n);
            for i in 0..n {
                let shift = base.pow(self.l_max * (i as f64 + 0.5) / n as f64);
                pts.extend(v.iter().map(|x| x * shift));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityFit {
    pub delta: f64,
    pub delta_refined: f64,
    pub m_tilde_used: f64,
    pub pass: bool,
}

fn admissibility_delta(w: &[InitialTerm], eps: &[Complex64], taus: &[Complex64], m: f64) -> f64 {
    let mut best: f64 = 0.0;
    for e in eps {
        for t in taus {
            let v: Complex64 = w.iter().map(|x| x.eval(*e, *t)).sum();
            let l = (t / e).norm().ln();
            let val = v.norm() * (-m * l * l).exp();
            best = if val.is_nan() { f64::INFINITY } else { best.max(val) };
        }
    }
    best
}

/// `Δ = max |W| e^{−M̃ log²|τ/ε|}` with `M̃ = 0.9 M`, accepted when finite
/// and stable within 10% under a 2× refinement of every grid.
pub fn admissibility_fit(w: &[InitialTerm], grid: &AdmissibilityGrid, g: &GevreyParams, base: &QBase) -> AdmissibilityFit {
    let m = 0.9 * g.m_big;
    let coarse = admissibility_delta(w, &grid.eps_points(grid.n), &grid.tau_points(grid.n, base), m);
    let fine = admissibility_delta(w, &grid.eps_points(2 * grid.n), &grid.tau_points(2 * grid.n, base), m);
    let pass = coarse.is_finite() && fine.is_finite() && (fine - coarse).abs() <= 0.1 * coarse.max(f64::MIN_POSITIVE);
    AdmissibilityFit {
        delta: coarse,
        delta_refined: fine,
        m_tilde_used: m,
        pass,
    }
}

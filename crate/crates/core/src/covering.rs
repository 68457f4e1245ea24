//! Good coverings by discrete q-spirals and their associated families.
//!
//! Near the origin, `ε ∈ U_I q^{−N}` reduces to `(u, v mod 1) ∈ I₁ × I₂` on the
//! unit torus of spiral coordinates, so a covering is a set of overlapping
//! rectangles there. [`build_covering`] lays them out in brick rows: row `j`
//! is shifted by half a cell when `j` is odd, so that the corners where two
//! rows meet are never shared by more than three charts.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qgeometry::{discrete_spiral_index, theta_safe_margin, ChartBase, ContinuousBase, Interval, QBase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodCovering {
    pub charts: Vec<ChartBase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringParams {
    pub n_u: usize,
    pub n_v: usize,
    pub overlap: f64,
    #[serde(default = "default_v_origin")]
    pub v_origin: f64,
}

fn default_v_origin() -> f64 {
    -2.0
}

impl CoveringParams {
    pub fn new(n_u: usize, n_v: usize, overlap: f64) -> Self {
        Self {
            n_u,
            n_v,
            overlap,
            v_origin: default_v_origin(),
        }
    }
}

/// `n_u × n_v` brick covering with v-rows starting at `v = -2`.
pub fn build_covering(n_u: usize, n_v: usize, overlap: f64) -> Result<GoodCovering> {
    build_covering_with(&CoveringParams::new(n_u, n_v, overlap))
}

/// Cells of size `1/n_u × 1/n_v` widened by `overlap` of a cell in each
/// direction. An odd number of rows would line the last row up with the
/// first across the v-period, so the last row is then shifted by a quarter
/// cell instead.
pub fn build_covering_with(p: &CoveringParams) -> Result<GoodCovering> {
    let CoveringParams { n_u, n_v, overlap, v_origin } = *p;
    if n_u < 5 || n_v < 5 {
        return Err(Error::InvalidParameter(format!(
            "need at least 5 charts per direction to cover with intervals shorter than 1/4, got {n_u} x {n_v}"
        )));
    }
    if !(0.0..0.5).contains(&overlap) {
        return Err(Error::InvalidParameter(format!("overlap must lie in [0, 0.5), got {overlap}")));
    }
    if !v_origin.is_finite() {
        return Err(Error::InvalidParameter("v origin must be finite".into()));
    }
    let (du, dv) = (1.0 / n_u as f64, 1.0 / n_v as f64);
    if du * (1.0 + overlap) >= 0.25 || dv * (1.0 + overlap) >= 0.25 {
        return Err(Error::InvalidParameter(format!(
            "overlap {overlap} makes chart intervals reach 1/4 for a {n_u} x {n_v} grid"
        )));
    }
    let odd_last = n_v % 2 == 1;
    // Overlap strips of adjacent rows must not meet: half-cell shifts leave
    // gaps of du/2 between seams, the quarter-cell row leaves du/4.
    let seam_gap = if odd_last { 0.25 } else { 0.5 };
    if overlap >= seam_gap {
        return Err(Error::InvalidParameter(format!(
            "overlap {overlap} lets seams of adjacent rows meet (limit {seam_gap} for {n_v} rows)"
        )));
    }
    let (pu, pv) = (0.5 * overlap * du, 0.5 * overlap * dv);
    let mut charts = Vec::with_capacity(n_u * n_v);
    for j in 0..n_v {
        let shift = if odd_last && j == n_v - 1 {
            0.25
        } else if j % 2 == 1 {
            0.5
        } else {
            0.0
        };
        let v0 = v_origin + j as f64 * dv;
        for i in 0..n_u {
            let u0 = (i as f64 + shift) * du;
            charts.push(ChartBase::new(Interval::new(u0 - pu, u0 + du + pu)?, Interval::new(v0 - pv, v0 + dv + pv)?)?);
        }
    }
    Ok(GoodCovering { charts })
}

impl GoodCovering {
    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    /// `min_I inf |U_I|`; points below it reach every chart only through `q^N`.
    pub fn r_max(&self, base: &QBase) -> f64 {
        self.charts.iter().map(|c| c.inf_modulus(base)).fold(f64::INFINITY, f64::min)
    }

    /// Indices of the charts whose spiral `U_I q^{−N}` contains `eps`.
    pub fn charts_containing(&self, eps: Complex64, base: &QBase) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, c) in self.charts.iter().enumerate() {
            if discrete_spiral_index(eps, c, base)?.is_some() {
                out.push(i);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub samples: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub uncovered: usize,
    pub first_uncovered: Option<(f64, f64)>,
    pub max_multiplicity: usize,
    /// Samples lying in four or more chart spirals.
    pub quadruple: usize,
    pub chart_counts: Vec<usize>,
}

impl CoveringReport {
    pub fn covered(&self) -> bool {
        self.uncovered == 0
    }

    pub fn no_quadruple(&self) -> bool {
        self.quadruple == 0
    }

    pub fn passes(&self) -> bool {
        self.covered() && self.no_quadruple()
    }
}

/// Samples the annulus `r_max |q|^{−3} ≤ |ε| ≤ r_max` with `n_samples` random
/// points plus every chart corner and edge midpoint (where gaps between
/// charts would show first), then counts spiral memberships.
pub fn validate_covering(c: &GoodCovering, base: &QBase, n_samples: usize, seed: u64) -> CoveringReport {
    let r_max = if c.is_empty() { 1.0 } else { c.r_max(base) };
    let r_min = r_max * base.abs().powi(-3);
    let (ln_lo, ln_hi) = (r_min.ln(), r_max.ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Complex64> = (0..n_samples)
        .map(|_| {
            let r = rng.gen_range(ln_lo..ln_hi).exp();
            Complex64::from_polar(r, std::f64::consts::TAU * rng.gen_range(0.0..1.0))
        })
        .collect();
    // Boundary points, carried one or two periods down into the annulus.
    let v_top = ln_hi / base.log_abs();
    for ch in &c.charts {
        for u in [ch.i1.lo, ch.i1.mid(), ch.i1.hi] {
            for v in [ch.i2.lo, ch.i2.mid(), ch.i2.hi] {
                let n = (v - v_top).ceil() + 1.0;
                pts.push(base.from_spiral(u, v - n));
            }
        }
    }
    let members: Vec<Vec<usize>> = pts
        .par_iter()
        .map(|e| c.charts_containing(*e, base).expect("sample points are nonzero"))
        .collect();
    let mut chart_counts = vec![0; c.len()];
    let (mut uncovered, mut quadruple, mut max_multiplicity) = (0, 0, 0);
    let mut first_uncovered = None;
    for (p, m) in pts.iter().zip(&members) {
        for &i in m {
            chart_counts[i] += 1;
        }
        max_multiplicity = max_multiplicity.max(m.len());
        if m.is_empty() {
            uncovered += 1;
            first_uncovered.get_or_insert_with(|| base.spiral_coords(*p));
        }
        if m.len() >= 4 {
            quadruple += 1;
        }
    }
    CoveringReport {
        samples: pts.len(),
        r_min,
        r_max,
        uncovered,
        first_uncovered,
        max_multiplicity,
        quadruple,
        chart_counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssociatedFamily {
    pub v_sets: Vec<ContinuousBase>,
    pub t_set: ContinuousBase,
    pub rho0: f64,
    pub delta: f64,
}

/// A point of `V ∩ D(0, ρ₀)` of modulus above 1: the middle of the usable
/// modulus range at the middle of the argument band.
pub fn pick_lambda(v: &ContinuousBase, rho0: f64) -> Result<Complex64> {
    let lo = v.modulus.lo.max(1.0);
    let hi = v.modulus.hi.min(rho0);
    if !(lo < hi) {
        return Err(Error::Domain(format!(
            "no point of modulus in (1, {rho0}) inside the patch of modulus ({}, {})",
            v.modulus.lo, v.modulus.hi
        )));
    }
    Ok(v.point(0.5 * (lo + hi), v.arg.mid()))
}

/// Rules for generating an associated family from a covering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub v_modulus: (f64, f64),
    /// Width in turns of each `V_I` band.
    pub band_width: f64,
    /// Bands centred closer than this to the turn 1/2 are pushed out to it.
    pub avoid_half: f64,
    pub t_modulus: (f64, f64),
    pub t_arg_half: f64,
    pub rho0: f64,
    pub delta: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            v_modulus: (1.05, 1.6),
            band_width: 0.04,
            avoid_half: 0.15,
            t_modulus: (0.5, 0.95),
            t_arg_half: 0.02,
            rho0: 2.0,
            delta: 0.3,
        }
    }
}

/// `V_I` is a narrow band at the u-centre of `U_I`, kept away from the
/// direction of `−1`; `T` is a thin sector around the positive axis.
pub fn auto_family(c: &GoodCovering, p: &FamilyParams) -> Result<AssociatedFamily> {
    let v_modulus = Interval::new(p.v_modulus.0, p.v_modulus.1)?;
    let v_sets = c
        .charts
        .iter()
        .map(|ch| {
            let mut centre = ch.i1.mid().rem_euclid(1.0);
            if (centre - 0.5).abs() < p.avoid_half {
                centre = if centre <= 0.5 { 0.5 - p.avoid_half } else { 0.5 + p.avoid_half };
            }
            let half = 0.5 * p.band_width;
            ContinuousBase::new(v_modulus, Interval::new(centre - half, centre + half)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let t_set = ContinuousBase::new(
        Interval::new(p.t_modulus.0, p.t_modulus.1)?,
        Interval::new(-p.t_arg_half, p.t_arg_half)?,
    )?;
    Ok(AssociatedFamily {
        v_sets,
        t_set,
        rho0: p.rho0,
        delta: p.delta,
    })
}

impl AssociatedFamily {
    pub fn lambdas(&self) -> Result<Vec<Complex64>> {
        self.v_sets.iter().map(|v| pick_lambda(v, self.rho0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    /// `V_I ∩ D(0, ρ₀) ≠ ∅` for every chart.
    pub item1: bool,
    /// Smallest sampled `|1 + τ|` over `V_I q^R`.
    pub item2_margin: f64,
    pub item2: bool,
    /// Smallest sampled `|1 + λ_I/(ε t q^r)|`, coarse and refined grids.
    pub item3_margin: f64,
    pub item3_margin_refined: f64,
    pub item3: bool,
    /// `|t| ≤ 1` on `T`.
    pub item4: bool,
    pub worst_chart: Option<usize>,
}

impl FamilyReport {
    pub fn passes(&self) -> bool {
        self.item1 && self.item2 && self.item3 && self.item4
    }
}

fn patch_samples(v: &ContinuousBase, n: usize) -> Vec<Complex64> {
    let (l0, l1) = (v.modulus.lo.ln(), v.modulus.hi.ln());
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        let r = (l0 + (l1 - l0) * i as f64 / n as f64).exp();
        for j in 0..=n {
            out.push(v.point(r, v.arg.lo + v.arg.len() * j as f64 / n as f64));
        }
    }
    out
}

#[cfg(test)]
fn chart_samples(ch: &ChartBase, base: &QBase, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        let u = ch.i1.lo + ch.i1.len() * i as f64 / n as f64;
        for j in 0..=n {
            out.push(base.from_spiral(u, ch.i2.lo + ch.i2.len() * j as f64 / n as f64));
        }
    }
    out
}

/// `theta_safe_margin(εt, λ)` depends on `εt` only through its spiral class,
/// that is through `u(ε) + u(t) mod 1`; the chart and `T` contribute an
/// interval of such `u`, sampled at `(n+1)²` points.
fn item3_margin(ch: &ChartBase, lambda: Complex64, t_set: &ContinuousBase, base: &QBase, delta: f64, n: usize) -> Result<f64> {
    let slope = base.log_q().im / (TAU * base.log_abs());
    let corners = [t_set.modulus.lo, t_set.modulus.hi]
        .into_iter()
        .flat_map(|r| [t_set.arg.lo, t_set.arg.hi].map(|a| a - r.ln() * slope));
    let (t_lo, t_hi) = corners.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| (lo.min(u), hi.max(u)));
    let (lo, hi) = (ch.i1.lo + t_lo, ch.i1.hi + t_hi);
    let m = (n + 1) * (n + 1);
    (0..m)
        .into_par_iter()
        .map(|i| theta_safe_margin(base.from_spiral(lo + (hi - lo) * i as f64 / (m - 1) as f64, 0.0), lambda, base, delta))
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))
}

/// Checks the four conditions of an associated family on sample grids of
/// `n_samples` points per side (refined ×2 for item 3).
pub fn validate_family(f: &AssociatedFamily, c: &GoodCovering, base: &QBase, lambdas: &[Complex64], n_samples: usize) -> Result<FamilyReport> {
    if f.v_sets.len() != c.len() || lambdas.len() != c.len() {
        return Err(Error::InvalidParameter(format!(
            "{} charts but {} V-sets and {} directions",
            c.len(),
            f.v_sets.len(),
            lambdas.len()
        )));
    }
    if !(f.rho0 > 1.0) || !(f.delta > 0.0 && f.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("need rho0 > 1 and delta in (0, 1), got {} and {}", f.rho0, f.delta)));
    }
    for (i, (v, l)) in f.v_sets.iter().zip(lambdas).enumerate() {
        if !v.contains(*l) || !(l.norm() < f.rho0) {
            return Err(Error::Domain(format!("direction {l} of chart {i} is not in V_I ∩ D(0, rho0)")));
        }
    }
    let n = n_samples.max(2);
    let item1 = f.v_sets.iter().all(|v| v.modulus.lo < f.rho0);
    let item4 = f.t_set.modulus.hi <= 1.0;
    let one = Complex64::new(1.0, 0.0);
    let mut item2_margin = f64::INFINITY;
    for v in &f.v_sets {
        for x in patch_samples(v, n) {
            item2_margin = item2_margin.min(theta_safe_margin(one, x, base, f.delta)?);
        }
    }
    let (mut coarse, mut fine, mut worst) = (f64::INFINITY, f64::INFINITY, None);
    for (i, (ch, l)) in c.charts.iter().zip(lambdas).enumerate() {
        let a = item3_margin(ch, *l, &f.t_set, base, f.delta, n)?;
        let b = item3_margin(ch, *l, &f.t_set, base, f.delta, 2 * n)?;
        if b < fine {
            worst = Some(i);
        }
        coarse = coarse.min(a);
        fine = fine.min(b);
    }
    Ok(FamilyReport {
        item1,
        item2_margin,
        item2: item2_margin > f.delta,
        item3_margin: coarse,
        item3_margin_refined: fine,
        item3: coarse.min(fine) > f.delta,
        item4,
        worst_chart: worst,
    })
}

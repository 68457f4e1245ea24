//! Checkers for Assumptions (A), (B) and (C), evaluated exactly as stated.
//! Every slack is "right-hand margin": positive means the inequality holds.

use serde::Serialize;

use super::model::{AuxConstants, CauchyProblem, GevreyParams};
use crate::qgeometry::QBase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub slack: f64,
}

impl Check {
    fn strict(slack: f64) -> Self {
        Self { holds: slack > 0.0, slack }
    }

    fn weak(slack: f64) -> Self {
        Self { holds: slack >= 0.0, slack }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionAEntry {
    pub k: usize,
    pub s: usize,
    pub m0: u32,
    pub m1: u32,
    /// `m₀ ≤ C(S − k + s)`.
    pub m0_bound: Check,
    /// `m₁ ≥ 2(S − k + s)A₁`.
    pub m1_bound: Check,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionAReport {
    pub entries: Vec<AssumptionAEntry>,
}

impl AssumptionAReport {
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.m0_bound.holds && e.m1_bound.holds)
    }
}

pub fn check_assumption_a(p: &CauchyProblem, g: &GevreyParams) -> AssumptionAReport {
    let mut entries = Vec::new();
    for t in &p.terms {
        for s in t.index_set() {
            let n = (p.s_order - t.k + s) as f64;
            entries.push(AssumptionAEntry {
                k: t.k,
                s,
                m0: t.m0,
                m1: t.m1,
                m0_bound: Check::weak(g.c_geom * n - t.m0 as f64),
                m1_bound: Check::weak(t.m1 as f64 - 2.0 * n * g.a1_type),
            });
        }
    }
    AssumptionAReport { entries }
}

/// `M ≤ 1/(2 log|q|)`.
pub fn check_assumption_b(g: &GevreyParams, base: &QBase) -> Check {
    Check::weak(1.0 / (2.0 * base.log_abs()) - g.m_big)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCReport {
    pub c1: Check,
    pub c2: Check,
    pub c3: Check,
    pub c4: Check,
    /// `1/A = (1 − ξ̄)(ξ/(2 log|q|) − M)`, the flatness exponent.
    pub inv_a: f64,
    pub inv_a_positive: bool,
}

impl AssumptionCReport {
    pub fn holds(&self) -> bool {
        self.c1.holds && self.c2.holds && self.c3.holds && self.c4.holds
    }
}

pub fn check_assumption_c(g: &GevreyParams, base: &QBase) -> AssumptionCReport {
    let l = base.log_abs();
    let AuxConstants { a1, a2, b1, b2, d1, d2 } = g.aux;
    let gap = g.xi / (2.0 * l) - g.m_big;
    let c1 = Check::strict(b1 / b2 - l);
    let c2 = Check::strict(l + g.xi * b1 / (2.0 * b2) - (d1 / d2) * gap);
    let c3 = Check::strict(gap - (d2 / d1) * l);
    let lhs = g.a1_type * (1.0 - d2 * l / (d1 * gap));
    let rhs = g.c_geom * g.c_geom / (4.0 * g.xi_bar * l * gap) + g.c_geom * a2 / a1;
    let c4 = Check::strict(lhs - rhs);
    let inv_a = (1.0 - g.xi_bar) * gap;
    AssumptionCReport {
        c1,
        c2,
        c3,
        c4,
        inv_a,
        inv_a_positive: inv_a > 0.0,
    }
}

/// Grid search for auxiliary constants satisfying (C.1)–(C.4) with `M`,
/// `A₁`, `C` held fixed. Returns the first hit in a deterministic order
/// that prefers large `ξ`, `ξ̄`.
pub fn sweep_assumption_c(g: &GevreyParams, base: &QBase) -> Option<GevreyParams> {
    let fractions = [0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
    let ratios = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e3];
    for &xi in &fractions {
        for &xi_bar in &fractions {
            for &a in &ratios {
                for &b in &ratios {
                    for &d in &ratios {
                        let cand = GevreyParams {
                            xi,
                            xi_bar,
                            aux: AuxConstants {
                                a1: 1.0,
                                a2: a,
                                b1: b,
                                b2: 1.0,
                                d1: 1.0,
                                d2: d,
                            },
                            ..*g
                        };
                        if check_assumption_c(&cand, base).holds() {
                            return Some(cand);
                        }
                    }
                }
            }
        }
    }
    None
}

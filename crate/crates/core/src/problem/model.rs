use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial in ε, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Poly(pub Vec<Complex64>);

impl Poly {
    pub fn constant(c: Complex64) -> Self {
        Self(vec![c])
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.norm() == 0.0)
    }

    /// Taylor coefficient of εⁿ.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.0.get(n).copied().unwrap_or_default()
    }
}

/// `b_{ks}(ε) z^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZCoeff {
    pub s: usize,
    pub poly: Poly,
}

/// `b_k(ε, z) (tσ_q)^{m0} (∂_z^k X)(ε, t, z q^{-m1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub k: usize,
    pub m0: u32,
    pub m1: u32,
    pub coeffs: Vec<ZCoeff>,
}

impl Term {
    /// The index set `I_k`.
    pub fn index_set(&self) -> BTreeSet<usize> {
        self.coeffs.iter().map(|c| c.s).collect()
    }

    pub fn coeff(&self, s: usize) -> Option<&Poly> {
        self.coeffs.iter().find(|c| c.s == s).map(|c| &c.poly)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyProblem {
    pub s_order: usize,
    pub terms: Vec<Term>,
    pub r0: f64,
}

impl CauchyProblem {
    pub fn new(s_order: usize, terms: Vec<Term>, r0: f64) -> Result<Self> {
        let p = Self { s_order, terms, r0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_order == 0 {
            return Err(Error::InvalidParameter("S must be positive".into()));
        }
        if !(self.r0 > 0.0 && self.r0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("r0 must lie in (0, 1], got {}", self.r0)));
        }
        let mut seen = BTreeSet::new();
        for t in &self.terms {
            if t.k >= self.s_order {
                return Err(Error::InvalidParameter(format!("term index k = {} not below S = {}", t.k, self.s_order)));
            }
            if !seen.insert(t.k) {
                return Err(Error::InvalidParameter(format!("term k = {} appears twice", t.k)));
            }
            if t.m0 == 0 || t.m1 == 0 {
                return Err(Error::InvalidParameter(format!("exponents of term k = {} must be positive", t.k)));
            }
            if t.index_set().len() != t.coeffs.len() {
                return Err(Error::InvalidParameter(format!("repeated z-power in term k = {}", t.k)));
            }
        }
        Ok(())
    }

    pub fn term(&self, k: usize) -> Option<&Term> {
        self.terms.iter().find(|t| t.k == k)
    }

    pub fn zero(s_order: usize) -> Self {
        Self { s_order, terms: Vec::new(), r0: 1.0 }
    }

    /// `S = 1`, single term `k = 0`, `b₀₀ ≡ 1`.
    pub fn single_term(m0: u32, m1: u32, r0: f64) -> Result<Self> {
        Self::new(
            1,
            vec![Term {
                k: 0,
                m0,
                m1,
                coeffs: vec![ZCoeff {
                    s: 0,
                    poly: Poly::constant(Complex64::new(1.0, 0.0)),
                }],
            }],
            r0,
        )
    }
}

/// `c τ^a ε^{-b} (1 + τ)^{-r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialTerm {
    pub c: Complex64,
    #[serde(default)]
    pub a: u32,
    #[serde(default)]
    pub b: u32,
    #[serde(default)]
    pub r: u32,
}

impl InitialTerm {
    pub fn eval(&self, eps: Complex64, tau: Complex64) -> Complex64 {
        self.c * tau.powu(self.a) / eps.powu(self.b) / (1.0 + tau).powu(self.r)
    }
}

/// `W_j(ε, τ)` for `j < S`, each a finite sum of [`InitialTerm`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct InitialData(pub Vec<Vec<InitialTerm>>);

impl InitialData {
    pub fn eval(&self, j: usize, eps: Complex64, tau: Complex64) -> Complex64 {
        self.0.get(j).map(|w| w.iter().map(|t| t.eval(eps, tau)).sum()).unwrap_or_default()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|w| w.iter().map(|t| InitialTerm { c: t.c * c, ..*t }).collect()).collect())
    }

    pub fn validate(&self, s_order: usize) -> Result<()> {
        if self.0.len() != s_order {
            return Err(Error::InvalidParameter(format!(
                "initial data has {} entries, expected S = {s_order}",
                self.0.len()
            )));
        }
        Ok(())
    }

    pub fn max_pole_order(&self) -> u32 {
        self.0.iter().flatten().map(|t| t.r).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxConstants {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GevreyParams {
    pub m_big: f64,
    pub m_tilde: f64,
    pub a1_type: f64,
    pub c_geom: f64,
    pub delta_theta: f64,
    pub xi: f64,
    pub xi_bar: f64,
    pub aux: AuxConstants,
}

impl GevreyParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.m_big,
            self.m_tilde,
            self.a1_type,
            self.c_geom,
            self.aux.a1,
            self.aux.a2,
            self.aux.b1,
            self.aux.b2,
            self.aux.d1,
            self.aux.d2,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("Gevrey constants must be positive and finite".into()));
        }
        for (name, v) in [("delta", self.delta_theta), ("xi", self.xi), ("xi_bar", self.xi_bar)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.m_tilde < self.m_big) {
            return Err(Error::InvalidParameter("M~ must be smaller than M".into()));
        }
        Ok(())
    }
}

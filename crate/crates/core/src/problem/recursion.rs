//! Pointwise evaluation of the Borel-plane coefficients `W_β(ε, τ)`:
//!
//! `W_{h+S}/h! = Σ_k Σ_{h₁+h₂=h, h₁∈I_k} b_{k h₁}(ε) τ^{m₀ₖ} W_{h₂+k}
//!               / ((τ+1) ε^{m₀ₖ} h₂! q^{m₁ₖ h₂})`.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;

use super::model::{CauchyProblem, InitialData};
use crate::error::{Error, Result};
use crate::qgeometry::QBase;

/// Per-ε constants of one recursion term.
struct TermAtEps {
    k: usize,
    m0: u32,
    /// `(h₁, b_{k h₁}(ε))` for `h₁ ∈ I_k`.
    b: Vec<(usize, Complex64)>,
    eps_pow: Complex64,
    /// `q^{-m₁ h₂}` for `h₂ = 0..`.
    q_neg: Vec<Complex64>,
}

/// Recursion data frozen at one ε; evaluates all `W_0..=W_{β_max}` at a τ.
pub struct RecursionAtEps<'a> {
    problem: &'a CauchyProblem,
    initial: &'a InitialData,
    eps: Complex64,
    terms: Vec<TermAtEps>,
}

impl<'a> RecursionAtEps<'a> {
    pub fn new(problem: &'a CauchyProblem, initial: &'a InitialData, base: &QBase, eps: Complex64, beta_max: usize) -> Result<Self> {
        if eps.norm() == 0.0 {
            return Err(Error::ZeroArgument("epsilon"));
        }
        let terms = problem
            .terms
            .iter()
            .map(|t| {
                let q = base.pow_i(-(t.m1 as i64));
                let mut q_neg = Vec::with_capacity(beta_max + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..=beta_max {
                    q_neg.push(acc);
                    acc *= q;
                }
                TermAtEps {
                    k: t.k,
                    m0: t.m0,
                    b: t.coeffs.iter().map(|c| (c.s, c.poly.eval(eps))).collect(),
                    eps_pow: eps.powu(t.m0),
                    q_neg,
                }
            })
            .collect();
        Ok(Self {
            problem,
            initial,
            eps,
            terms,
        })
    }

    /// Fills `out[β] = W_β(ε, τ)` for `β < out.len()`.
    pub fn fill(&self, tau: Complex64, out: &mut [Complex64]) -> Result<()> {
        let one = Complex64::new(1.0, 0.0);
        if tau == -one {
            return Err(Error::Pole);
        }
        let s_order = self.problem.s_order;
        let inv_pole = 1.0 / (tau + one);
        let factors: Vec<Complex64> = self.terms.iter().map(|t| tau.powu(t.m0) * inv_pole / t.eps_pow).collect();
        for beta in 0..out.len() {
            if beta < s_order {
                out[beta] = self.initial.eval(beta, self.eps, tau);
                continue;
            }
            let h = beta - s_order;
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, f) in self.terms.iter().zip(&factors) {
                for &(h1, b) in &t.b {
                    if h1 > h {
                        continue;
                    }
                    let h2 = h - h1;
                    // h!/h₂! as a falling product.
                    let falling: f64 = ((h2 + 1)..=h).map(|i| i as f64).product();
                    acc += b * f * out[h2 + t.k] * t.q_neg[h2] * falling;
                }
            }
            out[beta] = acc;
        }
        Ok(())
    }

    pub fn eps(&self) -> Complex64 {
        self.eps
    }
}

type PointKey = [u64; 4];

fn key(eps: Complex64, tau: Complex64) -> PointKey {
    [eps.re.to_bits(), eps.im.to_bits(), tau.re.to_bits(), tau.im.to_bits()]
}

/// Memoized `W_β(ε, τ)`; each cached point stores the prefix `W_0..=W_β`.
pub struct CoefficientEvaluator {
    pub problem: CauchyProblem,
    pub initial: InitialData,
    pub base: QBase,
    memo: Mutex<HashMap<PointKey, Vec<Complex64>>>,
}

impl Clone for CoefficientEvaluator {
    fn clone(&self) -> Self {
        Self::new(self.problem.clone(), self.initial.clone(), self.base).expect("validated on construction")
    }
}

impl std::fmt::Debug for CoefficientEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientEvaluator")
            .field("problem", &self.problem)
            .field("initial", &self.initial)
            .field("base", &self.base)
            .finish_non_exhaustive()
    }
}

impl CoefficientEvaluator {
    pub fn new(problem: CauchyProblem, initial: InitialData, base: QBase) -> Result<Self> {
        problem.validate()?;
        initial.validate(problem.s_order)?;
        Ok(Self {
            problem,
            initial,
            base,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn s_order(&self) -> usize {
        self.problem.s_order
    }

    pub fn at_eps(&self, eps: Complex64, beta_max: usize) -> Result<RecursionAtEps<'_>> {
        RecursionAtEps::new(&self.problem, &self.initial, &self.base, eps, beta_max)
    }

    pub fn coefficient(&self, beta: usize, eps: Complex64, tau: Complex64) -> Result<Complex64> {
        let k = key(eps, tau);
        if let Some(v) = self.memo.lock().expect("poisoned").get(&k) {
            if let Some(w) = v.get(beta) {
                return Ok(*w);
            }
        }
        let rec = self.at_eps(eps, beta)?;
        let mut out = vec![Complex64::new(0.0, 0.0); beta + 1];
        rec.fill(tau, &mut out)?;
        let w = out[beta];
        self.memo.lock().expect("poisoned").insert(k, out);
        Ok(w)
    }

    pub fn clear_cache(&self) {
        self.memo.lock().expect("poisoned").clear();
    }
}

/// Unrolled recursion for `S = 1`, one term `k = 0`, `I₀ = {0}`, `b₀₀ ≡ 1`:
/// `W_h = W₀ (τ^{m₀}/((τ+1) ε^{m₀}))^h q^{−m₁ h(h−1)/2}`.
pub fn closed_form_single_term(w0: Complex64, m0: u32, m1: u32, base: &QBase, eps: Complex64, tau: Complex64, h: usize) -> Complex64 {
    let ratio = tau.powu(m0) / ((tau + 1.0) * eps.powu(m0));
    let hf = h as f64;
    w0 * ratio.powu(h as u32) * base.pow(-(m1 as f64) * hf * (hf - 1.0) / 2.0)
}

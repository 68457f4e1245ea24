//! The Cauchy problem
//!
//! `εt ∂_z^S X(ε, qt, z) + ∂_z^S X(ε, t, z)
//!     = Σ_k b_k(ε, z) (tσ_q)^{m₀ₖ} (∂_z^k X)(ε, t, z q^{−m₁ₖ})`,
//!
//! its structural assumptions, the Borel-plane coefficient recursion and the
//! weighted norms used to bound it.

mod assumptions;
mod model;
mod norms;
mod recursion;

pub use assumptions::{
    check_assumption_a, check_assumption_b, check_assumption_c, sweep_assumption_c, AssumptionAEntry, AssumptionAReport,
    AssumptionCReport, Check,
};
pub use model::{AuxConstants, CauchyProblem, GevreyParams, InitialData, InitialTerm, Poly, Term, ZCoeff};
pub use norms::{
    admissibility_fit, apply_shift_operator, lemma1_constant, lemma4_constant, series_norm, weighted_norm, AdmissibilityFit,
    AdmissibilityGrid, Flavor, PolarPatch,
};
pub use recursion::{closed_form_single_term, CoefficientEvaluator, RecursionAtEps};

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::qgeometry::QBase;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(m: f64, a1: f64, cg: f64) -> GevreyParams {
        GevreyParams {
            m_big: m,
            m_tilde: 0.9 * m,
            a1_type: a1,
            c_geom: cg,
            delta_theta: 0.3,
            xi: 0.5,
            xi_bar: 0.5,
            aux: AuxConstants {
                a1: 9.0,
                a2: 1.0,
                b1: 1.0,
                b2: 1.0,
                d1: 1.0,
                d2: 12.0,
            },
        }
    }

    fn remark_problem() -> CauchyProblem {
        let one = Poly::constant(c(1.0, 0.0));
        CauchyProblem::new(
            4,
            vec![
                Term {
                    k: 0,
                    m0: 3,
                    m1: 17,
                    coeffs: vec![ZCoeff { s: 0, poly: one.clone() }, ZCoeff { s: 1, poly: one.clone() }],
                },
                Term {
                    k: 1,
                    m0: 4,
                    m1: 21,
                    coeffs: vec![ZCoeff { s: 1, poly: one }],
                },
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn assumption_a_single_term_boundary() {
        let p = CauchyProblem::single_term(1, 2, 1.0).unwrap();
        let r = check_assumption_a(&p, &params(1.0, 1.0, 1.0));
        assert!(r.holds());
        assert_eq!(r.entries[0].m0_bound.slack, 0.0);
        assert_eq!(r.entries[0].m1_bound.slack, 0.0);
    }

    #[test]
    fn assumption_a_remark_equation_fails() {
        let r = check_assumption_a(&remark_problem(), &params(1.0, 2.0, 1.0));
        assert!(!r.holds());
        let bad: Vec<_> = r.entries.iter().filter(|e| !e.m1_bound.holds).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!((bad[0].k, bad[0].s), (0, 1));
        assert_eq!(bad[0].m1_bound.slack, 17.0 - 20.0);
    }

    #[test]
    fn assumption_a_vacuous() {
        assert!(check_assumption_a(&CauchyProblem::zero(2), &params(1.0, 1.0, 1.0)).holds());
    }

    #[test]
    fn assumption_b_cases() {
        let b = QBase::real((1.0f64 / 16.0).exp()).unwrap();
        let r = check_assumption_b(&params(1.0, 2.0, 1.0), &b);
        assert!(r.holds);
        assert_relative_eq!(r.slack, 7.0, epsilon = 1e-12);
        let e = QBase::real(std::f64::consts::E).unwrap();
        assert!(!check_assumption_b(&params(1.0, 1.0, 1.0), &e).holds);
        let r = check_assumption_b(&params(0.5, 1.0, 1.0), &e);
        assert!(r.holds);
        assert!(r.slack.abs() < 1e-15);
    }

    #[test]
    fn assumption_c_flags_nonpositive_exponent() {
        let e = QBase::real(std::f64::consts::E).unwrap();
        let r = check_assumption_c(&params(1.0, 1.0, 1.0), &e);
        assert!(!r.inv_a_positive);
        assert!(r.inv_a < 0.0);
    }

    #[test]
    fn assumption_c_sweep_finds_tuple() {
        let b = QBase::real((1.0f64 / 16.0).exp()).unwrap();
        let found = sweep_assumption_c(&params(1.0, 2.0, 1.0), &b).expect("sweep finds a tuple");
        let r = check_assumption_c(&found, &b);
        assert!(r.holds() && r.inv_a_positive);
    }

    #[test]
    fn assumption_c1_strict_boundary() {
        let b = QBase::real(2.0).unwrap();
        let mut g = params(0.1, 1.0, 1.0);
        g.aux.b1 = b.log_abs();
        g.aux.b2 = 1.0;
        assert!(!check_assumption_c(&g, &b).c1.holds);
    }

    #[test]
    fn zero_problem_gives_zero_coefficients() {
        let b = QBase::real(1.5).unwrap();
        let mut p = CauchyProblem::single_term(1, 2, 1.0).unwrap();
        p.terms[0].coeffs[0].poly = Poly(vec![c(0.0, 0.0)]);
        let init = InitialData(vec![vec![InitialTerm { c: c(1.0, 0.0), a: 0, b: 0, r: 0 }]]);
        let ev = CoefficientEvaluator::new(p, init, b).unwrap();
        for beta in 1..10 {
            assert_eq!(ev.coefficient(beta, c(0.1, 0.0), c(2.0, 1.0)).unwrap(), c(0.0, 0.0));
        }
        assert_eq!(ev.coefficient(0, c(0.1, 0.0), c(2.0, 1.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn recursion_rejects_pole_and_zero() {
        let b = QBase::real(1.5).unwrap();
        let p = CauchyProblem::single_term(1, 2, 1.0).unwrap();
        let init = InitialData(vec![vec![InitialTerm { c: c(1.0, 0.0), a: 0, b: 0, r: 0 }]]);
        let ev = CoefficientEvaluator::new(p, init, b).unwrap();
        assert!(ev.coefficient(3, c(0.1, 0.0), c(-1.0, 0.0)).is_err());
        assert!(ev.coefficient(3, c(0.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn recursion_matches_closed_form() {
        let b = QBase::polar(1.7, 0.02).unwrap();
        let p = CauchyProblem::single_term(1, 2, 1.0).unwrap();
        let init = InitialData(vec![vec![InitialTerm { c: c(0.5, -0.25), a: 1, b: 0, r: 0 }]]);
        let ev = CoefficientEvaluator::new(p, init, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let eps = Complex64::from_polar(rng.gen_range(0.05..0.9), rng.gen_range(0.0..6.28));
            let tau = Complex64::from_polar(rng.gen_range(0.2..5.0), rng.gen_range(0.0..6.28));
            let w0 = c(0.5, -0.25) * tau;
            for h in 0..=30 {
                let got = ev.coefficient(h, eps, tau).unwrap();
                let want = closed_form_single_term(w0, 1, 2, &b, eps, tau, h);
                assert!((got - want).norm() <= 1e-12 * want.norm(), "h = {h}");
            }
        }
    }

    #[test]
    fn memo_is_transparent() {
        let b = QBase::real(1.5).unwrap();
        let init = InitialData(vec![vec![InitialTerm { c: c(1.0, 0.0), a: 1, b: 1, r: 1 }], vec![InitialTerm { c: c(0.0, 1.0), a: 0, b: 0, r: 0 }]]);
        let p = CauchyProblem::new(
            2,
            vec![
                Term { k: 0, m0: 1, m1: 4, coeffs: vec![ZCoeff { s: 0, poly: Poly(vec![c(1.0, 0.0), c(0.5, 0.0)]) }] },
                Term { k: 1, m0: 1, m1: 4, coeffs: vec![ZCoeff { s: 1, poly: Poly::constant(c(0.3, 0.0)) }] },
            ],
            1.0,
        )
        .unwrap();
        let ev = CoefficientEvaluator::new(p, init, b).unwrap();
        let a = ev.coefficient(12, c(0.2, 0.1), c(1.5, 0.3)).unwrap();
        let bb = ev.coefficient(12, c(0.2, 0.1), c(1.5, 0.3)).unwrap();
        assert_eq!(a.re.to_bits(), bb.re.to_bits());
        assert_eq!(a.im.to_bits(), bb.im.to_bits());
    }

    #[test]
    fn problem_validation() {
        assert!(CauchyProblem::single_term(1, 2, 1.5).is_err());
        assert!(CauchyProblem::single_term(0, 2, 1.0).is_err());
        let t = Term { k: 0, m0: 1, m1: 1, coeffs: vec![] };
        assert!(CauchyProblem::new(1, vec![t.clone(), t.clone()], 1.0).is_err());
        let t1 = Term { k: 1, ..t.clone() };
        assert!(CauchyProblem::new(1, vec![t1], 1.0).is_err());
        let dup = Term { coeffs: vec![ZCoeff { s: 0, poly: Poly::default() }, ZCoeff { s: 0, poly: Poly::default() }], ..t };
        assert!(CauchyProblem::new(1, vec![dup], 1.0).is_err());
    }

    #[test]
    fn weighted_norm_trivial_cases() {
        let b = QBase::real(2.0).unwrap();
        let g = params(0.5, 1.0, 1.0);
        let taus: Vec<_> = (1..20).map(|i| c(0.3 * i as f64, 0.1)).collect();
        let eps = c(0.1, 0.0);
        let zeros = vec![c(0.0, 0.0); taus.len()];
        assert_eq!(weighted_norm(&taus, &zeros, 3, eps, &g, Flavor::Spiral, &b), 0.0);
        let ones = vec![c(1.0, 0.0); taus.len()];
        let want = taus.iter().map(|t| (-0.5 * (t / eps).norm().ln().powi(2)).exp()).fold(0.0, f64::max);
        assert_relative_eq!(weighted_norm(&taus, &ones, 0, eps, &g, Flavor::Spiral, &b), want, max_relative = 1e-14);
        let fine: Vec<_> = (1..39).map(|i| c(0.15 * i as f64, 0.1)).collect();
        let f = |t: &Complex64| t.sin() / (1.0 + t);
        let coarse_v: Vec<_> = taus.iter().map(f).collect();
        let fine_v: Vec<_> = fine.iter().map(f).collect();
        for flavor in [Flavor::Spiral, Flavor::Disc] {
            assert!(weighted_norm(&fine, &fine_v, 2, eps, &g, flavor, &b) >= weighted_norm(&taus, &coarse_v, 2, eps, &g, flavor, &b));
        }
    }

    #[test]
    fn lemma1_constant_examples() {
        let b = QBase::real(2.0).unwrap();
        let g = params(0.5, 1.0, 1.0);
        assert_relative_eq!(lemma1_constant(1, 1, 0, 4, &g, 0.5, 1.0, &b).unwrap(), 0.25, max_relative = 1e-15);
        let brute = (2..=50)
            .map(|beta: i32| {
                let (n, m2, s) = (2.0, 4.0, 1.0);
                let p = beta as f64 * beta as f64 - (beta as f64 - n).powi(2) - m2 * (beta as f64 - s);
                0.5f64.powi(2) * 2f64.powf(p)
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(brute, 0.25, max_relative = 1e-15);
        assert_relative_eq!(lemma1_constant(2, 0, 2, 4, &g, 0.7, 1.3, &b).unwrap(), 2f64.powi(4), max_relative = 1e-15);
        let lo = lemma1_constant(1, 2, 1, 6, &g, 0.5, 1.0, &b).unwrap();
        let hi = lemma1_constant(1, 2, 1, 8, &g, 0.5, 1.0, &b).unwrap();
        assert!(hi <= lo);
        assert!(lemma1_constant(1, 1, 3, 4, &g, 0.5, 1.0, &b).is_err());
        assert!(lemma1_constant(1, 1, 1, 3, &g, 0.5, 1.0, &b).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let b = QBase::real(1.5).unwrap();
        let g = params(0.5, 1.0, 1.0);
        let grid = AdmissibilityGrid {
            eps: vec![PolarPatch { modulus: (1e-3, 0.9), arg: (0.0, 1.0) }],
            tau: vec![PolarPatch { modulus: (1e-3, 2.0), arg: (0.0, 1.0) }],
            tau_spiral: vec![],
            l_max: 6.0,
            n: 8,
        };
        let constant = [InitialTerm { c: c(2.0, 1.0), a: 0, b: 0, r: 0 }];
        let fit = admissibility_fit(&constant, &grid, &g, &b);
        assert!(fit.pass && fit.delta <= c(2.0, 1.0).norm() + 1e-15);
        assert_eq!(fit.m_tilde_used, 0.45);

        let away = AdmissibilityGrid {
            tau: vec![PolarPatch { modulus: (1e-3, 2.0), arg: (-0.3, 0.3) }],
            n: 16,
            ..grid.clone()
        };
        let rational = [InitialTerm { c: c(1.0, 0.0), a: 1, b: 0, r: 1 }];
        assert!(admissibility_fit(&rational, &away, &g, &b).pass);

        let near_pole = AdmissibilityGrid {
            tau: vec![PolarPatch { modulus: (1.0 - 1e-9, 1.0 + 1e-9), arg: (0.5 - 1e-9, 0.5 + 1e-9) }],
            n: 4,
            ..grid
        };
        let simple = admissibility_fit(&rational, &near_pole, &g, &b);
        assert!(!simple.pass);
        let quartic = [InitialTerm { c: c(1.0, 0.0), a: 0, b: 0, r: 4 }];
        let q = admissibility_fit(&quartic, &near_pole, &g, &b);
        assert!(!q.pass && q.delta_refined >= 10.0 * q.delta);
    }
}

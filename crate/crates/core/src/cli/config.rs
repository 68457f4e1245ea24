//! Run configuration and the objects built from it.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covering::{auto_family, build_covering_with, AssociatedFamily, CoveringParams, FamilyParams, GoodCovering};
use crate::error::{Error, Result};
use crate::problem::{
    AdmissibilityGrid, AuxConstants, CauchyProblem, CoefficientEvaluator, GevreyParams, InitialData, InitialTerm, PolarPatch, Poly, Term, ZCoeff,
};
use crate::qgeometry::{ChartBase, QBase};
use crate::qlaplace::{QLaplace, QuadSettings};
use crate::solution::{ExtractionSettings, SolutionChart, TzPoint};
use crate::theta::ThetaSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CoveringSpec {
    Build(CoveringParams),
    Charts(Vec<ChartBase>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Auto(FamilyParams),
    Explicit {
        family: AssociatedFamily,
        /// One direction per chart; picked from `V_I` when absent.
        #[serde(default)]
        lambdas: Option<Vec<Complex64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    pub covering: usize,
    pub family_grid: usize,
    pub residual: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSettings {
    pub bound: f64,
    pub z_max: f64,
    pub quad_tol: f64,
    /// Depth of the spiral `U_I q^{−n}` sampled, `n < depth`.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatnessSettings {
    pub charts: (usize, usize),
    pub eps0: Complex64,
    pub n_points: usize,
    pub grid: Vec<TzPoint>,
    pub quad_tol: f64,
    /// Acceptance margin: pass when `slope ≤ −margin/A`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptSettings {
    pub charts: (usize, usize),
    pub eps0: Complex64,
    pub k_max: usize,
    pub tol: f64,
    pub n_first: usize,
    pub n_last: usize,
    pub order: usize,
    pub grid: Vec<TzPoint>,
    pub quad_tol: f64,
    /// Relative agreement required between the two charts.
    pub agreement: f64,
}

impl AsymptSettings {
    pub fn extraction(&self) -> ExtractionSettings {
        ExtractionSettings {
            n_first: self.n_first,
            n_last: self.n_last,
            order: self.order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    pub residual: ResidualSettings,
    pub flatness: FlatnessSettings,
    pub asympt: AsymptSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub q: Complex64,
    pub problem: CauchyProblem,
    pub gevrey: GevreyParams,
    pub initial: InitialData,
    pub covering: CoveringSpec,
    pub family: FamilySpec,
    #[serde(default)]
    pub quad: QuadSettings,
    #[serde(default)]
    pub theta: ThetaSettings,
    pub beta_max: usize,
    pub admissibility: AdmissibilityGrid,
    pub samples: Samples,
    pub seed: u64,
    pub verify: VerifySettings,
}

/// Where each tolerance in force came from: `config`, or `env:NAME`.
pub type Provenance = BTreeMap<String, String>;

const ENV_OVERRIDES: [(&str, &str); 6] = [
    ("QGEVREY_QUAD_TOL", "quad.abs_tol"),
    ("QGEVREY_THETA_TOL", "theta.tol"),
    ("QGEVREY_RESIDUAL_BOUND", "verify.residual.bound"),
    ("QGEVREY_RESIDUAL_QUAD_TOL", "verify.residual.quad_tol"),
    ("QGEVREY_FLATNESS_QUAD_TOL", "verify.flatness.quad_tol"),
    ("QGEVREY_ASYMPT_TOL", "verify.asympt.tol"),
];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural validation; nothing numerical is computed.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        QBase::new(self.q).map_err(wrap)?;
        self.problem.validate().map_err(wrap)?;
        self.initial.validate(self.problem.s_order).map_err(wrap)?;
        self.gevrey.validate().map_err(wrap)?;
        self.quad.validate().map_err(wrap)?;
        self.theta.validate().map_err(wrap)?;
        if self.beta_max < self.problem.s_order {
            return Err(Error::Config(format!("beta_max {} below S = {}", self.beta_max, self.problem.s_order)));
        }
        if self.admissibility.n == 0 || self.admissibility.eps.is_empty() || self.admissibility.tau.is_empty() {
            return Err(Error::Config("admissibility grid needs eps and tau patches and n > 0".into()));
        }
        let v = &self.verify;
        for (name, tol) in [
            ("verify.residual.bound", v.residual.bound),
            ("verify.residual.quad_tol", v.residual.quad_tol),
            ("verify.flatness.quad_tol", v.flatness.quad_tol),
            ("verify.asympt.tol", v.asympt.tol),
            ("verify.asympt.quad_tol", v.asympt.quad_tol),
            ("verify.asympt.agreement", v.asympt.agreement),
        ] {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if v.flatness.grid.is_empty() || v.asympt.grid.is_empty() {
            return Err(Error::Config("verification grids must be nonempty".into()));
        }
        Ok(())
    }

    /// Applies tolerance overrides from the environment.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<Provenance> {
        let mut prov = Provenance::new();
        for (var, field) in ENV_OVERRIDES {
            let Some(raw) = env(var) else {
                prov.insert(field.into(), "config".into());
                continue;
            };
            let val: f64 = raw.trim().parse().map_err(|_| Error::Config(format!("{var} = {raw:?} is not a number")))?;
            if !(val > 0.0) {
                return Err(Error::Config(format!("{var} must be positive")));
            }
            match field {
                "quad.abs_tol" => self.quad.abs_tol = val,
                "theta.tol" => self.theta.tol = val,
                "verify.residual.bound" => self.verify.residual.bound = val,
                "verify.residual.quad_tol" => self.verify.residual.quad_tol = val,
                "verify.flatness.quad_tol" => self.verify.flatness.quad_tol = val,
                _ => self.verify.asympt.tol = val,
            }
            prov.insert(field.into(), format!("env:{var}"));
        }
        prov.insert("verify.asympt.quad_tol".into(), "config".into());
        prov.insert("verify.asympt.agreement".into(), "config".into());
        Ok(prov)
    }

    /// `S = 1`, `εt ∂_z X(ε, qt, z) + ∂_z X(ε, t, z) = (tσ_q) X(ε, t, z q^{−4})`
    /// with `W₀ = 1 + τ`, on a 5 × 5 covering for `q = 1.5`.
    pub fn demo() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let base = QBase::real(1.5).expect("valid base");
        // Both charts of row 1 whose u-intervals contain 1/2.
        let eps0 = -base.pow(-1.7);
        let grid: Vec<TzPoint> = vec![
            (Complex64::new(0.7, 0.0), Complex64::new(0.5, 0.0)),
            (Complex64::from_polar(0.9, 0.01 * std::f64::consts::TAU), Complex64::new(0.3, 0.3)),
            (Complex64::from_polar(0.6, -0.015 * std::f64::consts::TAU), Complex64::new(-0.4, 0.0)),
        ];
        Self {
            q: Complex64::new(1.5, 0.0),
            problem: CauchyProblem {
                s_order: 1,
                terms: vec![Term {
                    k: 0,
                    m0: 1,
                    m1: 4,
                    coeffs: vec![ZCoeff { s: 0, poly: Poly::constant(one) }],
                }],
                r0: 0.9,
            },
            gevrey: GevreyParams {
                m_big: 0.25,
                m_tilde: 0.225,
                a1_type: 1.0,
                c_geom: 1.0,
                delta_theta: 0.3,
                xi: 0.95,
                xi_bar: 0.95,
                aux: AuxConstants {
                    a1: 100.0,
                    a2: 1.0,
                    b1: 20.0,
                    b2: 1.0,
                    d1: 10.0,
                    d2: 1.0,
                },
            },
            initial: InitialData(vec![vec![InitialTerm { c: one, a: 0, b: 0, r: 0 }, InitialTerm { c: one, a: 1, b: 0, r: 0 }]]),
            covering: CoveringSpec::Build(CoveringParams::new(5, 5, 0.1)),
            family: FamilySpec::Auto(FamilyParams::default()),
            quad: QuadSettings::default(),
            theta: ThetaSettings::default(),
            beta_max: 25,
            admissibility: AdmissibilityGrid {
                eps: vec![PolarPatch { modulus: (1e-3, 0.9), arg: (0.0, 1.0) }],
                tau: vec![PolarPatch { modulus: (1e-3, 2.0), arg: (0.0, 1.0) }],
                tau_spiral: vec![PolarPatch { modulus: (1.05, 1.6), arg: (0.0, 1.0) }],
                l_max: 6.0,
                n: 16,
            },
            samples: Samples {
                covering: 10_000,
                family_grid: 6,
                residual: 100,
            },
            seed: 20240,
            verify: VerifySettings {
                residual: ResidualSettings {
                    bound: 1e-6,
                    z_max: 0.5,
                    quad_tol: 1e-8,
                    depth: 3,
                },
                flatness: FlatnessSettings {
                    charts: (6, 7),
                    eps0,
                    n_points: 13,
                    grid: grid.clone(),
                    quad_tol: 1e-15,
                    margin: 0.9,
                },
                asympt: AsymptSettings {
                    charts: (6, 7),
                    eps0,
                    k_max: 3,
                    tol: 1e-5,
                    n_first: 9,
                    n_last: 16,
                    order: 5,
                    grid,
                    quad_tol: 1e-15,
                    agreement: 1e-4,
                },
            },
        }
    }
}

/// Everything a command needs, built from a validated configuration.
#[derive(Debug)]
pub struct Context {
    pub config: RunConfig,
    pub base: QBase,
    pub covering: GoodCovering,
    pub family: AssociatedFamily,
    pub lambdas: Vec<Complex64>,
    pub evaluator: Arc<CoefficientEvaluator>,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let base = QBase::new(config.q)?;
        let covering = match &config.covering {
            CoveringSpec::Build(p) => build_covering_with(p)?,
            CoveringSpec::Charts(c) => GoodCovering { charts: c.clone() },
        };
        let (family, lambdas) = match &config.family {
            FamilySpec::Auto(p) => {
                let f = auto_family(&covering, p)?;
                let l = f.lambdas()?;
                (f, l)
            }
            FamilySpec::Explicit { family, lambdas } => {
                let l = match lambdas {
                    Some(l) => l.clone(),
                    None => family.lambdas()?,
                };
                (family.clone(), l)
            }
        };
        if family.v_sets.len() != covering.len() || lambdas.len() != covering.len() {
            return Err(Error::Config(format!(
                "{} charts but {} V-sets and {} directions",
                covering.len(),
                family.v_sets.len(),
                lambdas.len()
            )));
        }
        let evaluator = Arc::new(CoefficientEvaluator::new(config.problem.clone(), config.initial.clone(), base)?);
        Ok(Self {
            config,
            base,
            covering,
            family,
            lambdas,
            evaluator,
        })
    }

    pub fn laplace(&self, abs_tol: f64) -> Result<Arc<QLaplace>> {
        let quad = QuadSettings { abs_tol, ..self.config.quad };
        Ok(Arc::new(QLaplace::new(self.base, self.family.delta, quad, self.config.theta)?.with_xi(self.config.gevrey.xi)?))
    }

    pub fn chart(&self, index: usize, laplace: &Arc<QLaplace>) -> Result<SolutionChart> {
        let chart = *self
            .covering
            .charts
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("no chart {index} among {}", self.covering.len())))?;
        SolutionChart::new(
            index,
            chart,
            self.lambdas[index],
            self.evaluator.clone(),
            laplace.clone(),
            self.config.beta_max,
            self.config.gevrey.m_big,
            Some(self.family.t_set),
        )
    }

    /// `1/A = (1 − ξ̄)(ξ/(2 log|q|) − M)`.
    pub fn inv_a(&self) -> f64 {
        let g = &self.config.gevrey;
        (1.0 - g.xi_bar) * (g.xi / (2.0 * self.base.log_abs()) - g.m_big)
    }
}

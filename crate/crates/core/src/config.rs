//! Experiment configuration files.
//!
//! One JSON document drives every subcommand; each reads the blocks it needs.
//! Unknown keys are rejected so typos surface as configuration errors.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{Dictionary, DictionarySpec, Estimator, DEFAULT_SVD_REL_TOL};
use crate::json::{from_json_vec, ComplexJson, PoleJson};
use crate::quadrature::QuadRule;
use crate::spectral::CoeffExtractor;
use crate::symbols::{BlaschkeProduct, Polynomial, RationalSymbol, Root, DEFAULT_POLE_MARGIN};
use crate::trajectory::{Guards, DEFAULT_DISK_MARGIN, DEFAULT_POLE_BALL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub p: Vec<ComplexJson>,
    pub q: Vec<ComplexJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub z0: Vec<ComplexJson>,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_pole_ball")]
    pub pole_ball: f64,
    #[serde(default = "default_disk_margin")]
    pub disk_margin: f64,
}

impl SimulationConfig {
    pub fn guards(&self) -> Guards {
        Guards {
            pole_ball: self.pole_ball,
            disk_margin: self.disk_margin,
        }
    }

    pub fn starts(&self) -> Vec<Complex64> {
        from_json_vec(&self.z0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorConfig {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

impl ExtractorConfig {
    pub fn build(&self) -> Result<CoeffExtractor> {
        CoeffExtractor::new(self.radius, self.count, self.nodes)
    }
}

/// A Leibniz-pairing case for the verification battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeibnizCase {
    pub w: ComplexJson,
    pub j: u32,
    pub g: Vec<ComplexJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Symbol that generates the trajectory; defaults to the top-level
    /// symbol. A different symbol gives a deliberately mismatched pair.
    #[serde(default)]
    pub trajectory_symbol: Option<SymbolConfig>,
    pub z0: ComplexJson,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    /// Test polynomials `g`, ascending coefficients.
    #[serde(default = "default_test_polys")]
    pub g: Vec<Vec<ComplexJson>>,
    #[serde(default = "default_verify_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub leibniz: Vec<LeibnizCase>,
    #[serde(default = "default_verify_tol")]
    pub leibniz_tolerance: f64,
    /// Points at which the integral and endpoint representatives are compared.
    #[serde(default)]
    pub representative_points: Vec<ComplexJson>,
    /// Also run all three right-hand-side estimators on the simulation block.
    #[serde(default)]
    pub compare_estimators: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub symbol: Option<SymbolConfig>,
    /// Explicit poles; take precedence over computed ones.
    #[serde(default)]
    pub poles: Option<Vec<PoleJson>>,
    #[serde(default = "default_pole_margin")]
    pub pole_margin: f64,
    #[serde(default)]
    pub dictionary: Option<DictionarySpec>,
    #[serde(default)]
    pub rule: QuadRule,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_svd_rel_tol")]
    pub svd_rel_tol: f64,
    #[serde(default)]
    pub real_theta: bool,
    #[serde(default)]
    pub exact_velocity: bool,
    #[serde(default = "default_windows")]
    pub windows: usize,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub extractor: Option<ExtractorConfig>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
}

fn default_pole_ball() -> f64 {
    DEFAULT_POLE_BALL
}
fn default_disk_margin() -> f64 {
    DEFAULT_DISK_MARGIN
}
fn default_radius() -> f64 {
    0.9
}
fn default_count() -> usize {
    64
}
fn default_nodes() -> usize {
    256
}
fn default_pole_margin() -> f64 {
    DEFAULT_POLE_MARGIN
}
fn default_svd_rel_tol() -> f64 {
    DEFAULT_SVD_REL_TOL
}
fn default_windows() -> usize {
    10
}
fn default_verify_tol() -> f64 {
    1e-6
}
fn default_test_polys() -> Vec<Vec<ComplexJson>> {
    (0..3)
        .map(|k| {
            let mut g = vec![ComplexJson { re: 0.0, im: 0.0 }; k + 1];
            g[k].re = 1.0;
            g
        })
        .collect()
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub fn poles_from_json(poles: &[PoleJson]) -> Vec<Root> {
    poles.iter().map(|p| Root::new(Complex64::new(p.re, p.im), p.mult)).collect()
}

pub fn polynomial_from_json(coeffs: &[ComplexJson]) -> Polynomial {
    Polynomial::new(from_json_vec(coeffs))
}

impl SymbolConfig {
    pub fn build(&self, poles: Option<Vec<Root>>, pole_margin: f64) -> Result<RationalSymbol> {
        RationalSymbol::new(polynomial_from_json(&self.p), polynomial_from_json(&self.q), poles, pole_margin)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.svd_rel_tol >= 0.0 && self.svd_rel_tol < 1.0) {
            return Err(invalid(format!("svd_rel_tol = {} must lie in [0, 1)", self.svd_rel_tol)));
        }
        if !(self.pole_margin > 0.0 && self.pole_margin < 1.0) {
            return Err(invalid(format!("pole_margin = {} must lie in (0, 1)", self.pole_margin)));
        }
        if self.windows == 0 {
            return Err(invalid("windows must be positive"));
        }
        if let Some(sim) = &self.simulation {
            if sim.z0.is_empty() {
                return Err(invalid("simulation.z0 is empty"));
            }
            if !(sim.dt > 0.0 && sim.t_end > 0.0) {
                return Err(invalid("simulation.T and simulation.dt must be positive"));
            }
        }
        if let Some(p) = &self.poles {
            if let Some(bad) = p.iter().find(|p| p.mult == 0) {
                return Err(invalid(format!("pole ({}, {}) has multiplicity 0", bad.re, bad.im)));
            }
        }
        if let Some(v) = &self.verify {
            if !(v.dt > 0.0 && v.t_end > 0.0) {
                return Err(invalid("verify.T and verify.dt must be positive"));
            }
        }
        Ok(())
    }

    pub fn explicit_poles(&self) -> Option<Vec<Root>> {
        self.poles.as_deref().map(poles_from_json)
    }

    pub fn symbol(&self) -> Result<RationalSymbol> {
        self.symbol
            .as_ref()
            .ok_or_else(|| invalid("the configuration has no symbol"))?
            .build(self.explicit_poles(), self.pole_margin)
    }

    /// Blaschke product from the explicit poles, or from the symbol's poles.
    pub fn blaschke(&self) -> Result<BlaschkeProduct> {
        match (&self.poles, &self.symbol) {
            (Some(p), _) => BlaschkeProduct::new(poles_from_json(p)),
            (None, Some(_)) => Ok(self.symbol()?.blaschke()),
            (None, None) => Err(invalid("the configuration needs poles or a symbol")),
        }
    }

    pub fn dictionary(&self) -> Result<Dictionary> {
        self.dictionary
            .as_ref()
            .ok_or_else(|| invalid("the configuration has no dictionary"))?
            .build()
    }

    pub fn simulation(&self) -> Result<&SimulationConfig> {
        self.simulation
            .as_ref()
            .ok_or_else(|| invalid("the configuration has no simulation block"))
    }

    pub fn extractor(&self) -> Result<CoeffExtractor> {
        match &self.extractor {
            Some(e) => e.build(),
            None => Ok(CoeffExtractor::default()),
        }
    }

    pub fn verify(&self) -> Result<&VerifyConfig> {
        self.verify
            .as_ref()
            .ok_or_else(|| invalid("the configuration has no verify block"))
    }
}

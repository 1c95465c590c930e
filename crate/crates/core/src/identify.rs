//! Learning `F = B^2 f` from trajectory data by projecting onto a dictionary,
//! and the endpoint-difference baseline that fits `f` directly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::json::{ComplexJson, PoleJson};
use crate::kernels::{dwbar_from_parts, mixed_from_parts};
use crate::linalg::{self, CMatrix, CVector};
use crate::occkernel::{adjoint_endpoint_unweighted_derivative, occupation_apply};
use crate::quadrature::{integrate, pairwise_sum, QuadRule};
use crate::symbols::{BlaschkeProduct, Root};
use crate::trajectory::Trajectory;

pub const DEFAULT_SVD_REL_TOL: f64 = 1e-10;
/// Minimum distance from a zero of `B` at which `F / B^2` is evaluated.
pub const RECONSTRUCT_GUARD: f64 = 1e-8;

/// `Monomial(k) = z^k`, `Cauchy(a, m) = 1 / (1 - conj(a) z)^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisFn {
    Monomial(u32),
    Cauchy { a: Complex64, m: u32 },
}

impl BasisFn {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            BasisFn::Monomial(k) => z.powu(k),
            BasisFn::Cauchy { a, m } => (Complex64::new(1.0, 0.0) - a.conj() * z).powu(m).inv(),
        }
    }

    // Cauchy(a, 0) and Cauchy(0, m) are the constant 1.
    fn canonical(self) -> Self {
        match self {
            BasisFn::Cauchy { m: 0, .. } => BasisFn::Monomial(0),
            BasisFn::Cauchy { a, .. } if a == Complex64::new(0.0, 0.0) => BasisFn::Monomial(0),
            other => other,
        }
    }
}

impl fmt::Display for BasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisFn::Monomial(k) => write!(f, "z^{k}"),
            BasisFn::Cauchy { a, m } => write!(f, "(1 - conj({a}) z)^-{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    entries: Vec<BasisFn>,
}

impl Dictionary {
    pub fn new(entries: Vec<BasisFn>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDictionary("the dictionary is empty".into()));
        }
        for e in &entries {
            if let BasisFn::Cauchy { a, .. } = e {
                if !(a.norm() < 1.0) {
                    return Err(Error::InvalidDictionary(format!(
                        "Cauchy parameter {a} must satisfy |a| < 1"
                    )));
                }
            }
        }
        for (i, e) in entries.iter().enumerate() {
            if let Some(j) = entries[..i].iter().position(|o| o.canonical() == e.canonical()) {
                return Err(Error::InvalidDictionary(format!("entries {j} and {i} coincide ({e})")));
            }
        }
        Ok(Self { entries })
    }

    /// `{1, z, ..., z^(count-1)}`.
    pub fn monomials(count: usize) -> Result<Self> {
        Self::new((0..count as u32).map(BasisFn::Monomial).collect())
    }

    pub fn entries(&self) -> &[BasisFn] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eval_all(&self, z: Complex64) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.eval(z)).collect()
    }

    /// `sum theta_i Z_i(z)`.
    pub fn combine(&self, theta: &[Complex64], z: Complex64) -> Complex64 {
        self.entries.iter().zip(theta).map(|(e, t)| t * e.eval(z)).sum()
    }
}

/// JSON form of a dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DictionarySpec {
    Monomial { count: usize },
    Cauchy { entries: Vec<PoleJson> },
}

impl DictionarySpec {
    pub fn build(&self) -> Result<Dictionary> {
        match self {
            DictionarySpec::Monomial { count } => Dictionary::monomials(*count),
            DictionarySpec::Cauchy { entries } => Dictionary::new(
                entries
                    .iter()
                    .map(|e| BasisFn::Cauchy {
                        a: Complex64::new(e.re, e.im),
                        m: e.mult,
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    DataIntegral,
    EndpointThm43,
    EndpointSec7,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::DataIntegral => "data_integral",
            Estimator::EndpointThm43 => "endpoint_thm43",
            Estimator::EndpointSec7 => "endpoint_sec7",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data_integral" => Ok(Estimator::DataIntegral),
            "endpoint_thm43" => Ok(Estimator::EndpointThm43),
            "endpoint_sec7" => Ok(Estimator::EndpointSec7),
            other => Err(Error::InvalidInput(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryDiagnostics {
    pub index: usize,
    pub samples: usize,
    /// Frobenius norm of this trajectory's contribution to `G`.
    pub gram_norm: f64,
    /// Euclidean norm of its contribution to `b`.
    pub rhs_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GramSystem {
    pub g: CMatrix,
    pub b: CVector,
    pub diagnostics: Vec<TrajectoryDiagnostics>,
}

impl GramSystem {
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_min_eigenvalue(&self.g)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.g)
    }

    pub fn is_hermitian(&self) -> bool {
        self.g == self.g.adjoint()
    }
}

/// Per-trajectory precomputation shared by the Gram matrix and every
/// right-hand side.
struct Prepared {
    /// `Z_i(gamma_s)`, samples by entries.
    z_hat: CMatrix,
    /// `w_r w_s kappa(gamma_r, gamma_s)`.
    kappa_w: CMatrix,
    p: Vec<Complex64>,
    dp: Vec<Complex64>,
    weights: Vec<f64>,
}

fn prepare(b: &BlaschkeProduct, dict: &Dictionary, traj: &Trajectory, rule: QuadRule, exec: Execution) -> Result<Prepared> {
    let n = traj.len();
    let weights = rule.weights(n)?;
    let samples = traj.samples();
    let (p, dp): (Vec<_>, Vec<_>) = samples.iter().map(|&z| b.pshift_eval(z)).unzip();
    let rows = exec.map(n, |r| {
        (0..n)
            .map(|s| weights[r] * weights[s] * mixed_from_parts(p[r], dp[r], p[s], dp[s], samples[r], samples[s]))
            .collect::<Vec<_>>()
    });
    let kappa_w = CMatrix::from_fn(n, n, |r, s| rows[r][s]);
    if let Some(bad) = kappa_w.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidInput(format!("non-finite kernel value {bad}")));
    }
    let z_hat = CMatrix::from_fn(n, dict.len(), |s, i| dict.entries()[i].eval(samples[s]));
    Ok(Prepared {
        z_hat,
        kappa_w,
        p,
        dp,
        weights,
    })
}

impl Prepared {
    fn gram(&self, dt: f64) -> CMatrix {
        self.z_hat.adjoint() * (&self.kappa_w * &self.z_hat) * Complex64::new(dt * dt, 0.0)
    }

    fn rhs(
        &self,
        b: &BlaschkeProduct,
        dict: &Dictionary,
        traj: &Trajectory,
        velocity: Option<&[Complex64]>,
        rule: QuadRule,
        estimator: Estimator,
    ) -> Result<CVector> {
        let dt = traj.dt();
        let samples = traj.samples();
        match estimator {
            Estimator::DataIntegral => {
                let v = velocity.ok_or(Error::MissingVelocities)?;
                if v.len() != traj.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} velocity samples for a trajectory of {} samples",
                        v.len(),
                        traj.len()
                    )));
                }
                let f_hat = CVector::from_iterator(v.len(), self.p.iter().zip(v).map(|(p, v)| p * v));
                Ok(self.z_hat.adjoint() * (&self.kappa_w * f_hat) * Complex64::new(dt * dt, 0.0))
            }
            Estimator::EndpointThm43 => {
                // R_i(z) = int conj(Z_i(gamma)) D(gamma, z) dt; b_i = R_i(gamma_T) - R_i(gamma_0)
                let mut out = CVector::zeros(dict.len());
                for i in 0..dict.len() {
                    let mut value = Complex64::new(0.0, 0.0);
                    for (z, sign) in [(traj.first(), -1.0), (traj.last(), 1.0)] {
                        let (pz, _) = b.pshift_eval(z);
                        let terms: Vec<Complex64> = samples
                            .iter()
                            .enumerate()
                            .map(|(s, &g)| {
                                self.z_hat[(s, i)].conj()
                                    * self.weights[s]
                                    * dwbar_from_parts(self.p[s], self.dp[s], pz, g, z)
                            })
                            .collect();
                        value += pairwise_sum(&terms) * (sign * dt);
                    }
                    out[i] = value;
                }
                Ok(out)
            }
            Estimator::EndpointSec7 => {
                let (g0, gt) = (traj.first(), traj.last());
                let kernel: Vec<Complex64> = samples
                    .iter()
                    .map(|&z| adjoint_endpoint_unweighted_derivative(b, g0, gt, z))
                    .collect();
                let mut out = CVector::zeros(dict.len());
                for i in 0..dict.len() {
                    let values: Vec<Complex64> = (0..samples.len()).map(|s| self.z_hat[(s, i)] * kernel[s]).collect();
                    out[i] = integrate(&values, dt, rule)?;
                }
                Ok(out)
            }
        }
    }
}

fn hermitian_part(g: &CMatrix) -> CMatrix {
    (g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `G_ij = sum over trajectories of int int conj(Z_i(gamma(s))) kappa(gamma(s), gamma(t)) Z_j(gamma(t)) ds dt`.
pub fn gram_assemble(b: &BlaschkeProduct, dict: &Dictionary, trajs: &[Trajectory], rule: QuadRule) -> Result<CMatrix> {
    gram_assemble_with(b, dict, trajs, rule, Execution::default())
}

pub fn gram_assemble_with(
    b: &BlaschkeProduct,
    dict: &Dictionary,
    trajs: &[Trajectory],
    rule: QuadRule,
    exec: Execution,
) -> Result<CMatrix> {
    check_trajs(trajs)?;
    let mut g = CMatrix::zeros(dict.len(), dict.len());
    for (index, traj) in trajs.iter().enumerate() {
        let prep = prepare(b, dict, traj, rule, exec).map_err(|e| e.in_trajectory(index))?;
        g += prep.gram(traj.dt());
    }
    Ok(hermitian_part(&g))
}

pub fn rhs_assemble(
    b: &BlaschkeProduct,
    dict: &Dictionary,
    trajs: &[Trajectory],
    velocities: Option<&[Vec<Complex64>]>,
    rule: QuadRule,
    estimator: Estimator,
) -> Result<CVector> {
    Ok(assemble_system(b, dict, trajs, velocities, rule, estimator, Execution::default())?.b)
}

/// Assembles `G` and `b` in one pass over the trajectories.
pub fn assemble_system(
    b: &BlaschkeProduct,
    dict: &Dictionary,
    trajs: &[Trajectory],
    velocities: Option<&[Vec<Complex64>]>,
    rule: QuadRule,
    estimator: Estimator,
    exec: Execution,
) -> Result<GramSystem> {
    check_trajs(trajs)?;
    if estimator == Estimator::DataIntegral {
        match velocities {
            Some(v) if v.len() == trajs.len() => {}
            Some(v) => {
                return Err(Error::InvalidInput(format!(
                    "{} velocity sequences for {} trajectories",
                    v.len(),
                    trajs.len()
                )))
            }
            None => return Err(Error::MissingVelocities),
        }
    }
    let m = dict.len();
    let mut g = CMatrix::zeros(m, m);
    let mut rhs = CVector::zeros(m);
    let mut diagnostics = Vec::with_capacity(trajs.len());
    for (index, traj) in trajs.iter().enumerate() {
        let prep = prepare(b, dict, traj, rule, exec).map_err(|e| e.in_trajectory(index))?;
        let gi = prep.gram(traj.dt());
        let velocity = velocities.map(|v| v[index].as_slice());
        let bi = prep
            .rhs(b, dict, traj, velocity, rule, estimator)
            .map_err(|e| e.in_trajectory(index))?;
        diagnostics.push(TrajectoryDiagnostics {
            index,
            samples: traj.len(),
            gram_norm: gi.norm(),
            rhs_norm: bi.norm(),
        });
        g += gi;
        rhs += bi;
    }
    Ok(GramSystem {
        g: hermitian_part(&g),
        b: rhs,
        diagnostics,
    })
}

fn check_trajs(trajs: &[Trajectory]) -> Result<()> {
    if trajs.is_empty() {
        Err(Error::InvalidInput("at least one trajectory is required".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationResult {
    #[serde(serialize_with = "serialize_complex_vec")]
    pub theta: Vec<Complex64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// `||G theta - b|| / ||b||` (absolute when `b = 0`).
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
}

fn serialize_complex_vec<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| ComplexJson::from(*z)))
}

fn relative_residual(a: &CMatrix, x: &CVector, b: &CVector) -> f64 {
    let r = (a * x - b).norm();
    let nb = b.norm();
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// Moore-Penrose solve of `G theta = b`.
pub fn solve(g: &CMatrix, b: &CVector, svd_rel_tol: f64) -> IdentificationResult {
    let sol = linalg::pinv_solve(g, b, svd_rel_tol);
    IdentificationResult {
        residual: relative_residual(g, &sol.solution, b),
        theta: sol.solution.iter().copied().collect(),
        rank: sol.rank,
        singular_values: sol.singular_values,
        estimator: None,
    }
}

/// Real-coefficient solve: minimising over real `theta` gives the normal
/// equations `Re(G) theta = Re(b)`.
pub fn solve_real(g: &CMatrix, b: &CVector, svd_rel_tol: f64) -> IdentificationResult {
    let gr = g.map(|z| z.re);
    let br = b.map(|z| z.re);
    let (x, rank, singular_values) = linalg::pinv_solve_real(&gr, &br, svd_rel_tol);
    let theta: CVector = x.map(|v| Complex64::new(v, 0.0));
    IdentificationResult {
        residual: relative_residual(g, &theta, b),
        theta: theta.iter().copied().collect(),
        rank,
        singular_values,
        estimator: None,
    }
}

/// Full pipeline: assemble and solve.
#[allow(clippy::too_many_arguments)]
pub fn identify(
    b: &BlaschkeProduct,
    dict: &Dictionary,
    trajs: &[Trajectory],
    velocities: Option<&[Vec<Complex64>]>,
    rule: QuadRule,
    estimator: Estimator,
    svd_rel_tol: f64,
    real_theta: bool,
    exec: Execution,
) -> Result<(IdentificationResult, GramSystem)> {
    let system = assemble_system(b, dict, trajs, velocities, rule, estimator, exec)?;
    let mut result = if real_theta {
        solve_real(&system.g, &system.b, svd_rel_tol)
    } else {
        solve(&system.g, &system.b, svd_rel_tol)
    };
    result.estimator = Some(estimator);
    Ok((result, system))
}

/// Fits `f = sum theta_i Y_i` from `gamma(t_end) - gamma(t_start) = int f(gamma)`
/// over `windows` contiguous pieces of every trajectory.
pub fn baseline_identify(trajs: &[Trajectory], dict: &Dictionary, windows: usize, rule: QuadRule) -> Result<IdentificationResult> {
    baseline_identify_tol(trajs, dict, windows, rule, DEFAULT_SVD_REL_TOL)
}

pub fn baseline_identify_tol(
    trajs: &[Trajectory],
    dict: &Dictionary,
    windows: usize,
    rule: QuadRule,
    svd_rel_tol: f64,
) -> Result<IdentificationResult> {
    check_trajs(trajs)?;
    if windows == 0 {
        return Err(Error::InvalidInput("windows must be positive".into()));
    }
    let m = dict.len();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut rhs: Vec<Complex64> = Vec::new();
    for (index, traj) in trajs.iter().enumerate() {
        let last = traj.len() - 1;
        for w in 0..windows {
            let (start, end) = (w * last / windows, (w + 1) * last / windows);
            if end - start + 1 < 3 {
                return Err(Error::BadWindowCount {
                    window: w,
                    samples: end - start + 1,
                }
                .in_trajectory(index));
            }
            let piece = traj.window(start, end).map_err(|e| e.in_trajectory(index))?;
            let row = dict
                .entries()
                .iter()
                .map(|e| occupation_apply(&piece, |z| Ok(e.eval(z)), rule))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_trajectory(index))?;
            rows.push(row);
            rhs.push(piece.last() - piece.first());
        }
    }
    let a = CMatrix::from_fn(rows.len(), m, |r, i| rows[r][i]);
    let y = CVector::from_vec(rhs);
    let sol = linalg::pinv_solve(&a, &y, svd_rel_tol);
    Ok(IdentificationResult {
        residual: relative_residual(&a, &sol.solution, &y),
        theta: sol.solution.iter().copied().collect(),
        rank: sol.rank,
        singular_values: sol.singular_values,
        estimator: None,
    })
}

/// `f_est(z) = (sum theta_i Z_i(z)) / B(z)^2`.
pub fn reconstruct_f(b: &BlaschkeProduct, dict: &Dictionary, theta: &[Complex64], z: Complex64) -> Result<Complex64> {
    if theta.len() != dict.len() {
        return Err(Error::InvalidInput(format!(
            "{} coefficients for a dictionary of {} entries",
            theta.len(),
            dict.len()
        )));
    }
    if let Some(Root { location, .. }) = b.zeros().iter().find(|r| (z - r.location).norm() < RECONSTRUCT_GUARD) {
        return Err(Error::NearPole {
            z,
            pole: *location,
            distance: (z - location).norm(),
        });
    }
    let (p, _) = b.pshift_eval(z);
    Ok(dict.combine(theta, z) / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelError {
    pub sup: f64,
    pub rms: f64,
}

pub fn model_error<F, G>(f_true: F, f_est: G, grid: &[Complex64]) -> Result<ModelError>
where
    F: Fn(Complex64) -> Result<Complex64>,
    G: Fn(Complex64) -> Result<Complex64>,
{
    if grid.is_empty() {
        return Ok(ModelError { sup: 0.0, rms: 0.0 });
    }
    let mut sup = 0.0f64;
    let mut sq = 0.0;
    for &z in grid {
        let e = (f_true(z)? - f_est(z)?).norm();
        sup = sup.max(e);
        sq += e * e;
    }
    Ok(ModelError {
        sup,
        rms: (sq / grid.len() as f64).sqrt(),
    })
}

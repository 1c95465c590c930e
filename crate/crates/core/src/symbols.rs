//! Complex polynomials, rational symbols `f = p/q` with interior poles, and
//! finite Blaschke products.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Poles must satisfy `|a| <= 1 - pole_margin`.
pub const DEFAULT_POLE_MARGIN: f64 = 0.05;
/// Roots closer than this are merged by [`poles_of`].
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
/// [`RationalSymbol::eval`] refuses points closer than this to a pole.
pub const DEFAULT_POLE_GUARD: f64 = 1e-8;
/// Below this distance to a zero, [`BlaschkeProduct::derivative`] switches
/// from logarithmic differentiation to the explicit product rule.
const PRODUCT_RULE_RADIUS: f64 = 1e-6;
/// Relative tolerance for "q vanishes at a".
const VANISH_TOL: f64 = 1e-10;

/// Complex polynomial with coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Builds a polynomial, trimming exact trailing zeros.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    /// `lead * prod (z - a_k)^{m_k}`.
    pub fn from_roots(roots: &[Root], lead: Complex64) -> Self {
        let mut acc = Self::constant(lead);
        for r in roots {
            let factor = Self::new(vec![-r.location, Complex64::new(1.0, 0.0)]);
            for _ in 0..r.multiplicity {
                acc = acc.mul(&factor);
            }
        }
        acc
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Sum of coefficient moduli; bounds `sup |p|` on the closed disk.
    pub fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})z"),
                _ => format!("({c})z^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// A point with multiplicity; used for both poles of `f` and zeros of `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: u32,
}

impl Root {
    pub fn new(location: Complex64, multiplicity: u32) -> Self {
        Self {
            location,
            multiplicity,
        }
    }

    pub fn simple(location: Complex64) -> Self {
        Self::new(location, 1)
    }
}

/// Roots of `q` from the companion-matrix eigenvalues, clustered.
///
/// Roots within `cluster_tol` of each other are merged into their centroid.
/// A second pass merges nearby clusters (closer than `sqrt(cluster_tol)`)
/// when `q` and its derivatives up to the combined multiplicity vanish at the
/// merged centroid; this recovers multiple roots whose eigenvalues split by
/// O(sqrt(eps)).
pub fn poles_of(q: &Polynomial, cluster_tol: f64, pole_margin: f64) -> Result<Vec<Root>> {
    let degree = q
        .degree()
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::InvalidSymbol("poles_of needs a denominator of degree >= 1".into()))?;

    let lead = q.leading();
    let companion = CMatrix::from_fn(degree, degree, |r, c| {
        if c == degree - 1 {
            -q.coeffs()[r] / lead
        } else if r == c + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut roots = linalg::eigenvalues(&companion);
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut clusters = single_linkage(&roots, cluster_tol);
    merge_verified(q, &mut clusters, cluster_tol.sqrt().max(cluster_tol));

    let mut out: Vec<Root> = clusters
        .into_iter()
        .map(|members| Root::new(centroid(&members), members.len() as u32))
        .collect();
    out.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });

    for r in &out {
        let modulus = r.location.norm();
        if modulus > 1.0 - pole_margin {
            return Err(Error::NoInteriorPole {
                location: r.location,
                modulus,
                margin: pole_margin,
            });
        }
    }
    Ok(out)
}

fn centroid(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

fn single_linkage(points: &[Complex64], tol: f64) -> Vec<Vec<Complex64>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (i, &point) in points.iter().enumerate() {
        let root = find(&mut label, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(point),
            None => groups.push((root, vec![point])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

fn vanishes_to_order(q: &Polynomial, z: Complex64, order: usize) -> bool {
    let mut d = q.clone();
    for _ in 0..order {
        if d.eval(z).norm() > VANISH_TOL * d.norm1().max(f64::MIN_POSITIVE) {
            return false;
        }
        d = d.derivative();
    }
    true
}

fn merge_verified(q: &Polynomial, clusters: &mut Vec<Vec<Complex64>>, radius: f64) {
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let (ci, cj) = (centroid(&clusters[i]), centroid(&clusters[j]));
                if (ci - cj).norm() > radius {
                    continue;
                }
                let mut joined = clusters[i].clone();
                joined.extend_from_slice(&clusters[j]);
                if vanishes_to_order(q, centroid(&joined), joined.len()) {
                    clusters[i] = joined;
                    clusters.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
}

/// `f = p / q` with its interior poles.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSymbol {
    p: Polynomial,
    q: Polynomial,
    poles: Vec<Root>,
}

impl RationalSymbol {
    /// Builds a symbol. Explicit `poles`, when given, are used instead of the
    /// computed roots of `q` (after being checked against `q`).
    pub fn new(p: Polynomial, q: Polynomial, poles: Option<Vec<Root>>, pole_margin: f64) -> Result<Self> {
        let q_degree = q
            .degree()
            .ok_or_else(|| Error::InvalidSymbol("denominator is identically zero".into()))?;

        let poles = match poles {
            Some(poles) => {
                for r in &poles {
                    if r.multiplicity == 0 {
                        return Err(Error::InvalidSymbol("pole multiplicity must be positive".into()));
                    }
                    let modulus = r.location.norm();
                    if modulus > 1.0 - pole_margin {
                        return Err(Error::NoInteriorPole {
                            location: r.location,
                            modulus,
                            margin: pole_margin,
                        });
                    }
                    if !vanishes_to_order(&q, r.location, r.multiplicity as usize) {
                        return Err(Error::InvalidSymbol(format!(
                            "q does not vanish to order {} at {}",
                            r.multiplicity, r.location
                        )));
                    }
                }
                poles
            }
            None if q_degree == 0 => Vec::new(),
            None => poles_of(&q, DEFAULT_CLUSTER_TOL, pole_margin)?,
        };

        let total: u32 = poles.iter().map(|r| r.multiplicity).sum();
        if total as usize != q_degree {
            return Err(Error::InvalidSymbol(format!(
                "pole multiplicities sum to {total} but deg q = {q_degree}"
            )));
        }
        for (i, a) in poles.iter().enumerate() {
            if poles[..i].iter().any(|b| b.location == a.location) {
                return Err(Error::InvalidSymbol(format!("pole {} listed twice", a.location)));
            }
            if p.eval(a.location).norm() <= VANISH_TOL * p.norm1() {
                return Err(Error::InvalidSymbol(format!(
                    "p vanishes at the pole {}; cancel the common factor first",
                    a.location
                )));
            }
        }
        Ok(Self { p, q, poles })
    }

    /// Symbol with computed poles and the default margin.
    pub fn from_polys(p: Polynomial, q: Polynomial) -> Result<Self> {
        Self::new(p, q, None, DEFAULT_POLE_MARGIN)
    }

    /// Polynomial symbol (`q = 1`).
    pub fn polynomial(p: Polynomial) -> Self {
        Self {
            p,
            q: Polynomial::constant(Complex64::new(1.0, 0.0)),
            poles: Vec::new(),
        }
    }

    pub fn p(&self) -> &Polynomial {
        &self.p
    }

    pub fn q(&self) -> &Polynomial {
        &self.q
    }

    pub fn poles(&self) -> &[Root] {
        &self.poles
    }

    /// Distance from `z` to the nearest pole (infinite if there are none).
    pub fn pole_distance(&self, z: Complex64) -> (f64, Option<Complex64>) {
        self.poles
            .iter()
            .map(|r| ((z - r.location).norm(), Some(r.location)))
            .fold((f64::INFINITY, None), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.eval_guarded(z, DEFAULT_POLE_GUARD)
    }

    pub fn eval_guarded(&self, z: Complex64, pole_guard: f64) -> Result<Complex64> {
        let (distance, pole) = self.pole_distance(z);
        if let Some(pole) = pole {
            if distance < pole_guard {
                return Err(Error::NearPole { z, pole, distance });
            }
        }
        Ok(self.p.eval(z) / self.q.eval(z))
    }

    /// Blaschke product whose zeros are this symbol's poles.
    pub fn blaschke(&self) -> BlaschkeProduct {
        BlaschkeProduct {
            zeros: self.poles.clone(),
        }
    }
}

/// `B(z) = prod ((z - a_k) / (1 - conj(a_k) z))^{m_k}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlaschkeProduct {
    zeros: Vec<Root>,
}

impl BlaschkeProduct {
    /// Validates `|a_k| < 1` and positive multiplicities; repeated locations
    /// are merged by adding multiplicities.
    pub fn new(zeros: Vec<Root>) -> Result<Self> {
        let mut merged: Vec<Root> = Vec::with_capacity(zeros.len());
        for r in zeros {
            if r.multiplicity == 0 {
                return Err(Error::InvalidBlaschke("zero multiplicity must be positive".into()));
            }
            if !(r.location.norm() < 1.0) {
                return Err(Error::InvalidBlaschke(format!(
                    "zero {} is not inside the unit disk",
                    r.location
                )));
            }
            match merged.iter_mut().find(|m| m.location == r.location) {
                Some(m) => m.multiplicity += r.multiplicity,
                None => merged.push(r),
            }
        }
        Ok(Self { zeros: merged })
    }

    /// `B = 1`.
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn zeros(&self) -> &[Root] {
        &self.zeros
    }

    /// Total multiplicity.
    pub fn degree(&self) -> u32 {
        self.zeros.iter().map(|r| r.multiplicity).sum()
    }

    fn factor(a: Complex64, z: Complex64) -> Complex64 {
        (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
    }

    fn factor_derivative(a: Complex64, z: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - a.conj() * z;
        Complex64::new(1.0 - a.norm_sqr(), 0.0) / (d * d)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .map(|r| Self::factor(r.location, z).powu(r.multiplicity))
            .product()
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let near_zero = self
            .zeros
            .iter()
            .any(|r| (z - r.location).norm() < PRODUCT_RULE_RADIUS);
        if near_zero {
            self.derivative_product_rule(z)
        } else {
            let log_derivative: Complex64 = self
                .zeros
                .iter()
                .map(|r| {
                    let a = r.location;
                    Complex64::new(r.multiplicity as f64 * (1.0 - a.norm_sqr()), 0.0)
                        / ((z - a) * (Complex64::new(1.0, 0.0) - a.conj() * z))
                })
                .sum();
            self.eval(z) * log_derivative
        }
    }

    fn derivative_product_rule(&self, z: Complex64) -> Complex64 {
        let factors: Vec<Complex64> = self
            .zeros
            .iter()
            .map(|r| Self::factor(r.location, z).powu(r.multiplicity))
            .collect();
        self.zeros
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let m = r.multiplicity;
                let own = Self::factor(r.location, z).powu(m - 1)
                    * Self::factor_derivative(r.location, z)
                    * m as f64;
                let rest: Complex64 = factors
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, f)| *f)
                    .product();
                own * rest
            })
            .sum()
    }

    /// `(P, P')` with `P = B^2`.
    pub fn pshift_eval(&self, z: Complex64) -> (Complex64, Complex64) {
        let b = self.eval(z);
        let db = self.derivative(z);
        (b * b, 2.0 * b * db)
    }
}

//! Finite-section probes of the restricted Liouville operator
//! `A_f g = f g'` on `B^2 H^2`, Taylor-coefficient extraction, the
//! coefficient recursion behind the empty point spectrum of `A_{1/z}`, and
//! the sup bounds showing `B^2 z^n` lies in the operator's domain.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{self, CMatrix};
use crate::symbols::{BlaschkeProduct, RationalSymbol, Root};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Recovers Taylor coefficients from samples on the circle `|z| = radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffExtractor {
    radius: f64,
    count: usize,
    nodes: usize,
}

impl Default for CoeffExtractor {
    fn default() -> Self {
        Self {
            radius: 0.9,
            count: 64,
            nodes: 256,
        }
    }
}

impl CoeffExtractor {
    pub fn new(radius: f64, count: usize, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidInput(format!("extraction radius {radius} must lie in (0, 1)")));
        }
        if count == 0 {
            return Err(Error::InvalidInput("coefficient count must be positive".into()));
        }
        if !nodes.is_power_of_two() || nodes < 4 * count {
            return Err(Error::InvalidInput(format!(
                "node count {nodes} must be a power of two and at least 4 * {count}"
            )));
        }
        Ok(Self { radius, count, nodes })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Requires `radius > |a| + 0.05` for every pole.
    pub fn check_poles(&self, poles: &[Root]) -> Result<()> {
        for r in poles {
            if !(self.radius > r.location.norm() + 0.05) {
                return Err(Error::InvalidInput(format!(
                    "extraction radius {} must exceed |{}| + 0.05",
                    self.radius, r.location
                )));
            }
        }
        Ok(())
    }

    /// `c_k = (1/N) sum_j g(r w^j) r^{-k} w^{-jk}` for `k < count`, via FFT.
    pub fn taylor_coeffs<G>(&self, g: G) -> Result<Vec<Complex64>>
    where
        G: Fn(Complex64) -> Result<Complex64>,
    {
        let n = self.nodes;
        let mut buf = (0..n)
            .map(|j| g(Complex64::from_polar(self.radius, TAU * j as f64 / n as f64)))
            .collect::<Result<Vec<_>>>()?;
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut r_pow = 1.0;
        Ok(buf
            .into_iter()
            .take(self.count)
            .map(|c| {
                let v = c * scale / r_pow;
                r_pow *= self.radius;
                v
            })
            .collect())
    }
}

/// Coefficients of `P = B^2`.
fn pshift_coeffs(b: &BlaschkeProduct, ex: &CoeffExtractor) -> Result<Vec<Complex64>> {
    ex.taylor_coeffs(|z| Ok(b.pshift_eval(z).0))
}

/// `M[m][n] = <A_f(P z^n), P z^m>` over the orthonormal basis `{P z^n}`.
pub fn finite_section(b: &BlaschkeProduct, f: &RationalSymbol, n: usize, ex: &CoeffExtractor) -> Result<CMatrix> {
    finite_section_with(b, f, n, ex, Execution::default())
}

pub fn finite_section_with(
    b: &BlaschkeProduct,
    f: &RationalSymbol,
    n: usize,
    ex: &CoeffExtractor,
    exec: Execution,
) -> Result<CMatrix> {
    let p_degree = 2 * b.degree() as usize;
    if n == 0 || n + p_degree > ex.count() {
        return Err(Error::InvalidInput(format!(
            "section size {n} must satisfy 1 <= N <= {} - {p_degree}",
            ex.count()
        )));
    }
    ex.check_poles(f.poles())?;
    ex.check_poles(b.zeros())?;

    let pc = pshift_coeffs(b, ex)?;
    let columns = exec.try_map(n, |col| {
        let image = ex.taylor_coeffs(|z| {
            let (p, dp) = b.pshift_eval(z);
            let zn = z.powu(col as u32);
            let deriv = if col == 0 {
                dp
            } else {
                dp * zn + p * (col as f64) * z.powu(col as u32 - 1)
            };
            Ok(f.eval(z)? * deriv)
        })?;
        Ok::<_, Error>(
            (0..n)
                .map(|row| {
                    (row..ex.count())
                        .map(|k| image[k] * pc[k - row].conj())
                        .sum::<Complex64>()
                })
                .collect::<Vec<_>>(),
        )
    })?;
    Ok(CMatrix::from_fn(n, n, |r, c| columns[c][r]))
}

pub fn finite_section_eigs(m: &CMatrix) -> Vec<Complex64> {
    linalg::eigenvalues(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralProbe {
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: CMatrix,
    #[serde(serialize_with = "serialize_cvec")]
    pub eigenvalues: Vec<Complex64>,
    /// `||(A_f - lambda) u|| / ||u||` for the lifted eigenvector `u`.
    pub residuals: Vec<f64>,
}

fn serialize_cvec<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::json::to_json_vec(v).serialize(s)
}

fn serialize_matrix<S: serde::Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<crate::json::ComplexJson>> = (0..m.nrows())
        .map(|r| m.row(r).iter().map(|z| (*z).into()).collect())
        .collect();
    rows.serialize(s)
}

/// Finite section, its eigenvalues, and the residual of each lifted
/// eigenvector under the full operator.
pub fn probe_spectrum(b: &BlaschkeProduct, f: &RationalSymbol, n: usize, ex: &CoeffExtractor) -> Result<SpectralProbe> {
    let matrix = finite_section(b, f, n, ex)?;
    let eigenvalues = finite_section_eigs(&matrix);
    let residuals = eigenvalues
        .iter()
        .map(|&lambda| {
            let shifted = &matrix - CMatrix::identity(n, n) * lambda;
            let v = linalg::null_vector(&shifted);
            lifted_residual(b, f, v.as_slice(), lambda, ex)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralProbe {
        matrix,
        eigenvalues,
        residuals,
    })
}

fn lifted_residual(
    b: &BlaschkeProduct,
    f: &RationalSymbol,
    v: &[Complex64],
    lambda: Complex64,
    ex: &CoeffExtractor,
) -> Result<f64> {
    let series = |z: Complex64| -> (Complex64, Complex64) {
        let mut s = ZERO;
        let mut ds = ZERO;
        for &vk in v.iter().rev() {
            ds = ds * z + s;
            s = s * z + vk;
        }
        (s, ds)
    };
    let u = ex.taylor_coeffs(|z| {
        let (p, _) = b.pshift_eval(z);
        Ok(p * series(z).0)
    })?;
    let r = ex.taylor_coeffs(|z| {
        let (p, dp) = b.pshift_eval(z);
        let (s, ds) = series(z);
        Ok(f.eval(z)? * (dp * s + p * ds) - lambda * p * s)
    })?;
    let norm = |c: &[Complex64]| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    Ok(norm(&r) / norm(&u))
}

/// Coefficients forced by `(n + 2) a_n = lambda a_{n-2}` with
/// `a_{-1} = a_{-2} = 0`, i.e. an eigenfunction `z^2 g` of `A_{1/z}`.
pub fn recursion_check(lambda: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut a = vec![ZERO; n_max + 1];
    for n in 0..=n_max {
        let prev = if n >= 2 { a[n - 2] } else { ZERO };
        a[n] = lambda * prev / (n as f64 + 2.0);
    }
    a
}

/// The same recursion with `a_0`, `a_1` imposed instead of derived.
pub fn recursion_with_seed(lambda: Complex64, n_max: usize, a0: Complex64, a1: Complex64) -> Vec<Complex64> {
    let mut a = vec![ZERO; n_max + 1];
    for n in 0..=n_max {
        a[n] = match n {
            0 => a0,
            1 => a1,
            _ => lambda * a[n - 2] / (n as f64 + 2.0),
        };
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBound {
    pub n: usize,
    /// Max of `|f (B^2 z^n)'|` over the polar grid.
    pub grid_sup: f64,
    pub bound: f64,
    pub ok: bool,
    /// Max of `|B'|^2` over the same grid.
    pub bprime_sq_sup: f64,
    /// `sum (1 + |a_k|) / (1 - |a_k|)`, the published bound for `|B'|^2`.
    pub published_bprime_sq_bound: f64,
}

/// Checks `sup |f (B^2 z^n)'| <= bound` on a `grid_size x grid_size` polar
/// grid with radius up to `1 - 1e-6`.
///
/// The integrand is evaluated in the cancelled form
/// `p / (lead(q) prod (1 - conj(a_k) z)^{m_k}) * (n B z^{n-1} + 2 B' z^n)`,
/// which is well defined at the poles. The bound is
/// `||p||_1 / (|lead(q)| prod (1 - |a_k|)^{m_k}) * (n + 2 sum m_k (1 + |a_k|) / (1 - |a_k|))`.
pub fn density_bound_check(b: &BlaschkeProduct, f: &RationalSymbol, n: usize, grid_size: usize) -> Result<DensityBound> {
    if grid_size == 0 {
        return Err(Error::InvalidInput("grid size must be positive".into()));
    }
    let poles = f.poles();
    let matched = poles.len() == b.zeros().len()
        && poles.iter().all(|p| {
            b.zeros()
                .iter()
                .any(|z| (z.location - p.location).norm() < 1e-12 && z.multiplicity == p.multiplicity)
        });
    if !matched {
        return Err(Error::InvalidInput("the Blaschke zeros must equal the poles of f".into()));
    }

    let lead = f.q().leading();
    let reduced = |z: Complex64| -> Complex64 {
        let denom: Complex64 = b
            .zeros()
            .iter()
            .map(|r| (Complex64::new(1.0, 0.0) - r.location.conj() * z).powu(r.multiplicity))
            .product();
        f.p().eval(z) / (lead * denom)
    };

    let r_max = 1.0 - 1e-6;
    let mut grid_sup: f64 = 0.0;
    let mut bprime_sq_sup: f64 = 0.0;
    for i in 1..=grid_size {
        let radius = r_max * i as f64 / grid_size as f64;
        for j in 0..grid_size {
            let z = Complex64::from_polar(radius, TAU * j as f64 / grid_size as f64);
            let bz = b.eval(z);
            let dbz = b.derivative(z);
            let bracket = if n == 0 {
                2.0 * dbz
            } else {
                (n as f64) * bz * z.powu(n as u32 - 1) + 2.0 * dbz * z.powu(n as u32)
            };
            grid_sup = grid_sup.max((reduced(z) * bracket).norm());
            bprime_sq_sup = bprime_sq_sup.max(dbz.norm_sqr());
        }
    }

    let prefactor = f.p().norm1()
        / (lead.norm()
            * b.zeros()
                .iter()
                .map(|r| (1.0 - r.location.norm()).powi(r.multiplicity as i32))
                .product::<f64>());
    let bprime_bound: f64 = b
        .zeros()
        .iter()
        .map(|r| {
            let m = r.location.norm();
            r.multiplicity as f64 * (1.0 + m) / (1.0 - m)
        })
        .sum();
    let bound = prefactor * (n as f64 + 2.0 * bprime_bound);
    let published_bprime_sq_bound = b
        .zeros()
        .iter()
        .map(|r| {
            let m = r.location.norm();
            (1.0 + m) / (1.0 - m)
        })
        .sum();

    Ok(DensityBound {
        n,
        grid_sup,
        bound,
        ok: grid_sup <= bound * (1.0 + 1e-9),
        bprime_sq_sup,
        published_bprime_sq_bound,
    })
}

/// Max modulus of the entries of `m` selected by `keep(row, col)`.
pub fn max_entry_where(m: &CMatrix, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let mut out: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if keep(r, c) {
                out = out.max(m[(r, c)].norm());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Polynomial;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn inverse() -> RationalSymbol {
        RationalSymbol::from_polys(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[0.0, 1.0])).unwrap()
    }

    #[test]
    fn extractor_validation() {
        assert!(CoeffExtractor::new(0.9, 64, 200).is_err());
        assert!(CoeffExtractor::new(0.9, 64, 128).is_err());
        assert!(CoeffExtractor::new(1.0, 8, 64).is_err());
        let ex = CoeffExtractor::default();
        assert!(ex.check_poles(&[Root::simple(c(0.86, 0.0))]).is_err());
        assert!(ex.check_poles(&[Root::simple(c(0.8, 0.0))]).is_ok());
    }

    #[test]
    fn monomial_coefficients() {
        let c3 = CoeffExtractor::default().taylor_coeffs(|z| Ok(z * z * z)).unwrap();
        for (k, v) in c3.iter().enumerate() {
            let expected = if k == 3 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!((v - expected).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn geometric_coefficients() {
        let cs = CoeffExtractor::default()
            .taylor_coeffs(|z| Ok(1.0 / (1.0 - 0.5 * z)))
            .unwrap();
        for (k, v) in cs.iter().enumerate().take(21) {
            assert_abs_diff_eq!((v - 0.5f64.powi(k as i32)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_symbol_image() {
        // f (B^2 z)' = (z^3)' / z = 3 z
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.0, 0.0))]).unwrap();
        let f = inverse();
        let cs = CoeffExtractor::default()
            .taylor_coeffs(|z| {
                let (p, dp) = b.pshift_eval(z);
                Ok(f.eval(z)? * (dp * z + p))
            })
            .unwrap();
        for (k, v) in cs.iter().enumerate() {
            let expected = if k == 1 { 3.0 } else { 0.0 };
            assert_abs_diff_eq!((v - expected).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn polynomial_reproduction() {
        let p = Polynomial::new(vec![c(0.3, -1.0), c(2.0, 0.5), c(0.0, 0.0), c(-1.5, 0.25), c(0.7, 0.0)]);
        let cs = CoeffExtractor::default().taylor_coeffs(|z| Ok(p.eval(z))).unwrap();
        for (k, v) in cs.iter().enumerate() {
            let expected = p.coeffs().get(k).copied().unwrap_or_default();
            assert!((v - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_section_is_backward_shift() {
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.0, 0.0))]).unwrap();
        let m = finite_section(&b, &inverse(), 4, &CoeffExtractor::default()).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                // (z^{n+2})' / z = (n+2) z^n = (n+2) P z^{n-2}
                let expected = if r + 2 == col { (col + 2) as f64 } else { 0.0 };
                assert_abs_diff_eq!((m[(r, col)] - expected).norm(), 0.0, epsilon = 1e-10);
            }
        }
        for ev in finite_section_eigs(&m) {
            assert!(ev.norm() < 1e-8);
        }
        let one = finite_section(&b, &inverse(), 1, &CoeffExtractor::default()).unwrap();
        assert!(one[(0, 0)].norm() < 1e-10);
    }

    #[test]
    fn identity_symbol_section_is_diagonal() {
        let f = RationalSymbol::polynomial(Polynomial::from_real(&[0.0, 1.0]));
        let m = finite_section(&BlaschkeProduct::trivial(), &f, 5, &CoeffExtractor::default()).unwrap();
        for r in 0..5 {
            for col in 0..5 {
                let expected = if r == col { r as f64 } else { 0.0 };
                assert_abs_diff_eq!((m[(r, col)] - expected).norm(), 0.0, epsilon = 1e-10);
            }
        }
        let mut ev: Vec<f64> = finite_section_eigs(&m).iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        for (k, v) in ev.iter().enumerate() {
            assert_abs_diff_eq!(*v, k as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn section_size_limit() {
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.0, 0.0))]).unwrap();
        assert!(finite_section(&b, &inverse(), 63, &CoeffExtractor::default()).is_err());
        assert!(finite_section(&b, &inverse(), 0, &CoeffExtractor::default()).is_err());
    }

    #[test]
    fn probe_residuals_do_not_vanish() {
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.0, 0.0))]).unwrap();
        let probe = probe_spectrum(&b, &inverse(), 6, &CoeffExtractor::default()).unwrap();
        assert_eq!(probe.eigenvalues.len(), 6);
        // the kernel is spanned by z^2 and z^3, mapped to 2 and 3z; ratios lie in [2, 3]
        for r in &probe.residuals {
            assert!((2.0 - 1e-8..=3.0 + 1e-8).contains(r), "{r}");
        }
    }

    #[test]
    fn recursion_zero_and_seeded() {
        assert!(recursion_check(c(0.0, 0.0), 20).iter().all(|a| a.norm() == 0.0));
        assert!(recursion_check(c(3.7, -2.0), 50).iter().all(|a| a.norm() == 0.0));
        let lambda = c(1.5, 0.5);
        let a = recursion_with_seed(lambda, 20, c(1.0, 0.0), c(0.0, 0.0));
        for k in 0..=10usize {
            let denom: f64 = (1..=k).map(|j| (2 * j + 2) as f64).product();
            let expected = lambda.powu(k as u32) / denom;
            assert!((a[2 * k] - expected).norm() < 1e-14 * expected.norm().max(1.0));
            if 2 * k < 20 {
                assert_eq!(a[2 * k + 1], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn density_bound_inverse() {
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.0, 0.0))]).unwrap();
        let d = density_bound_check(&b, &inverse(), 1, 200).unwrap();
        // f (z^3)' = 3 z
        assert_abs_diff_eq!(d.grid_sup, 3.0 * (1.0 - 1e-6), epsilon = 1e-9);
        assert!(d.ok);
        let d0 = density_bound_check(&b, &inverse(), 0, 50).unwrap();
        assert!(d0.ok && d0.grid_sup.is_finite());
    }

    #[test]
    fn density_bound_off_center() {
        let a = c(0.2, 0.1);
        let f = RationalSymbol::from_polys(Polynomial::from_real(&[1.0]), Polynomial::new(vec![-a, c(1.0, 0.0)])).unwrap();
        let d = density_bound_check(&f.blaschke(), &f, 2, 100).unwrap();
        assert!(d.ok, "{d:?}");
    }

    #[test]
    fn density_bound_requires_matching_poles() {
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.1, 0.0))]).unwrap();
        assert!(density_bound_check(&b, &inverse(), 1, 10).is_err());
    }
}

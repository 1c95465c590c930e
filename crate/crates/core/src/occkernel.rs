//! Occupation-kernel functionals and adjoint representatives of restricted
//! Liouville operators, with numerical checks of the operator identities.
//!
//! For a symbol `h` and a path `gamma` in the disk, `A_h^* Gamma_gamma` is the
//! element of `B^2 H^2` representing `u -> int h(gamma) u'(gamma) dt`. Since
//! `u'(w) = <u, D(w, .)>` with `D = d/d conj(w) K_{B^2}`, the representative is
//! `int conj(h(gamma(t))) D(gamma(t), .) dt`. When `gamma` is an integral
//! curve of `h` the integrand is an exact derivative and the representative
//! collapses to `K_{B^2}(gamma(T), .) - K_{B^2}(gamma(0), .)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::{self, dwbar_from_parts, mixed_from_parts, szego};
use crate::quadrature::{integrate, pairwise_sum, QuadRule};
use crate::spectral::CoeffExtractor;
use crate::symbols::{BlaschkeProduct, Polynomial, RationalSymbol};
use crate::trajectory::Trajectory;

/// `int_0^T g(gamma(t)) dt`, i.e. `<g, Gamma_gamma>`.
pub fn occupation_apply<G>(traj: &Trajectory, g: G, rule: QuadRule) -> Result<Complex64>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let values = traj.samples().iter().map(|&z| g(z)).collect::<Result<Vec<_>>>()?;
    integrate(&values, traj.dt(), rule)
}

/// `A_h^* Gamma_gamma` in integral form, with `h` sampled along the path.
#[derive(Debug, Clone)]
pub struct AdjointRepresentative {
    b: BlaschkeProduct,
    traj: Trajectory,
    symbol_values: Vec<Complex64>,
    rule: QuadRule,
    // conj(h_s) * w_s * dt, P(gamma_s), P'(gamma_s)
    weighted: Vec<Complex64>,
    p: Vec<Complex64>,
    dp: Vec<Complex64>,
}

impl AdjointRepresentative {
    pub fn new(b: BlaschkeProduct, traj: Trajectory, symbol_values: Vec<Complex64>, rule: QuadRule) -> Result<Self> {
        if symbol_values.len() != traj.len() {
            return Err(Error::InvalidInput(format!(
                "{} symbol values for a trajectory of {} samples",
                symbol_values.len(),
                traj.len()
            )));
        }
        if let Some(v) = symbol_values.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite symbol value {v}")));
        }
        let weights = rule.weights(traj.len())?;
        let dt = traj.dt();
        let weighted = symbol_values
            .iter()
            .zip(&weights)
            .map(|(h, w)| h.conj() * (w * dt))
            .collect();
        let (p, dp) = traj.samples().iter().map(|&z| b.pshift_eval(z)).unzip();
        Ok(Self {
            b,
            traj,
            symbol_values,
            rule,
            weighted,
            p,
            dp,
        })
    }

    /// Samples `h` along the trajectory.
    pub fn from_symbol<H>(b: BlaschkeProduct, traj: Trajectory, h: H, rule: QuadRule) -> Result<Self>
    where
        H: Fn(Complex64) -> Result<Complex64>,
    {
        let values = traj.samples().iter().map(|&z| h(z)).collect::<Result<Vec<_>>>()?;
        Self::new(b, traj, values, rule)
    }

    pub fn blaschke(&self) -> &BlaschkeProduct {
        &self.b
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn symbol_values(&self) -> &[Complex64] {
        &self.symbol_values
    }

    pub fn rule(&self) -> QuadRule {
        self.rule
    }

    /// Value of the representative at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (pz, _) = self.b.pshift_eval(z);
        let terms: Vec<Complex64> = self
            .traj
            .samples()
            .iter()
            .enumerate()
            .map(|(s, &g)| self.weighted[s] * dwbar_from_parts(self.p[s], self.dp[s], pz, g, z))
            .collect();
        pairwise_sum(&terms)
    }

    /// Derivative of the representative at `z` (the integrand becomes the
    /// mixed kernel).
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let (pz, dpz) = self.b.pshift_eval(z);
        let terms: Vec<Complex64> = self
            .traj
            .samples()
            .iter()
            .enumerate()
            .map(|(s, &g)| self.weighted[s] * mixed_from_parts(self.p[s], self.dp[s], pz, dpz, g, z))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn eval_many(&self, points: &[Complex64], exec: Execution) -> Vec<Complex64> {
        exec.map(points.len(), |i| self.eval(points[i]))
    }
}

/// `adjoint_apply(rep, z)`.
pub fn adjoint_apply(rep: &AdjointRepresentative, z: Complex64) -> Complex64 {
    rep.eval(z)
}

/// Endpoint form `K_{B^2}(gamma_T, z) - K_{B^2}(gamma_0, z)`, valid when the
/// path is an integral curve of the symbol.
pub fn adjoint_endpoint(b: &BlaschkeProduct, gamma0: Complex64, gamma_t: Complex64, z: Complex64) -> Complex64 {
    kernels::restricted_kernel(b, gamma_t, z) - kernels::restricted_kernel(b, gamma0, z)
}

/// Alternative endpoint candidate `P(z) (S(gamma_T, z) - S(gamma_0, z))`,
/// i.e. the endpoint form with the conjugate-slot factors `conj(P(gamma))`
/// dropped.
pub fn adjoint_endpoint_unweighted(b: &BlaschkeProduct, gamma0: Complex64, gamma_t: Complex64, z: Complex64) -> Complex64 {
    let (pz, _) = b.pshift_eval(z);
    pz * (szego(gamma_t, z) - szego(gamma0, z))
}

/// `d/dz` of [`adjoint_endpoint_unweighted`].
pub fn adjoint_endpoint_unweighted_derivative(
    b: &BlaschkeProduct,
    gamma0: Complex64,
    gamma_t: Complex64,
    z: Complex64,
) -> Complex64 {
    let (pz, dpz) = b.pshift_eval(z);
    let (st, s0) = (szego(gamma_t, z), szego(gamma0, z));
    dpz * (st - s0) + pz * (gamma_t.conj() * st * st - gamma0.conj() * s0 * s0)
}

/// `|int f(gamma) (B^2 g)'(gamma) dt - (B^2 g(gamma_T) - B^2 g(gamma_0))|`.
///
/// Vanishes up to quadrature error exactly when `gamma` is an integral
/// curve of `f`.
pub fn verify_adjoint_identity(
    b: &BlaschkeProduct,
    f: &RationalSymbol,
    traj: &Trajectory,
    g: &Polynomial,
    rule: QuadRule,
) -> Result<f64> {
    let dg = g.derivative();
    let lhs = occupation_apply(
        traj,
        |z| {
            let (p, dp) = b.pshift_eval(z);
            Ok(f.eval(z)? * (dp * g.eval(z) + p * dg.eval(z)))
        },
        rule,
    )?;
    let shifted = |z: Complex64| b.pshift_eval(z).0 * g.eval(z);
    let rhs = shifted(traj.last()) - shifted(traj.first());
    Ok((lhs - rhs).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeibnizReport {
    pub j: u32,
    /// `<A_f(B^2 g), K_w^{[j-1]}>` from Taylor coefficients.
    pub pairing: [f64; 2],
    /// `(f (B^2 g)')^{(j-1)}(w)` by Richardson-extrapolated differences.
    pub direct: [f64; 2],
    pub residual: f64,
    /// Cauchy-estimate bound on the coefficients dropped by truncation.
    pub tail_bound: f64,
}

/// Checks `<A_f(B^2 g), K_w^{[j-1]}> = (f (B^2 g)')^{(j-1)}(w)`.
pub fn verify_leibniz_pairing(
    b: &BlaschkeProduct,
    f: &RationalSymbol,
    g: &Polynomial,
    w: Complex64,
    j: u32,
    ex: &CoeffExtractor,
) -> Result<LeibnizReport> {
    if j == 0 {
        return Err(Error::InvalidInput("derivative order j must be positive".into()));
    }
    if !(w.norm() <= 0.9) {
        return Err(Error::InvalidInput(format!("|w| = {} exceeds 0.9", w.norm())));
    }
    ex.check_poles(f.poles())?;
    let dg = g.derivative();
    let image = |z: Complex64| -> Result<Complex64> {
        let (p, dp) = b.pshift_eval(z);
        Ok(f.eval(z)? * (dp * g.eval(z) + p * dg.eval(z)))
    };
    let order = j - 1;

    let coeffs = ex.taylor_coeffs(image)?;
    // K_w^{[k]} has coefficients n!/(n-k)! conj(w)^{n-k}; pair against them.
    let pairing: Complex64 = coeffs
        .iter()
        .enumerate()
        .skip(order as usize)
        .map(|(n, c)| c * falling(n as u32, order) * w.powu(n as u32 - order))
        .sum();

    let direct = if order == 0 {
        image(w)?
    } else {
        richardson_derivative(&image, w, order, 0.05)?
    };

    let r = ex.radius();
    let sup_on_circle = (0..ex.nodes())
        .map(|k| image(Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / ex.nodes() as f64)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let tail_bound = cauchy_tail(sup_on_circle, r, w.norm(), ex.count() as u32, order);

    Ok(LeibnizReport {
        j,
        pairing: [pairing.re, pairing.im],
        direct: [direct.re, direct.im],
        residual: (pairing - direct).norm(),
        tail_bound,
    })
}

fn falling(n: u32, k: u32) -> f64 {
    ((n - k + 1)..=n).map(f64::from).product()
}

fn cauchy_tail(sup: f64, r: f64, w_abs: f64, start: u32, order: u32) -> f64 {
    if w_abs >= r {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    for n in start.max(order)..start.max(order) + 100_000 {
        let term = falling(n, order) * sup / r.powi(n as i32) * w_abs.powi((n - order) as i32);
        total += term;
        if term < 1e-30 * total.max(1e-300) || term == 0.0 {
            break;
        }
    }
    total
}

/// `k`-th derivative at `w` from central differences with two Richardson
/// levels (error `O(h^6)`).
pub fn richardson_derivative<H>(h: &H, w: Complex64, k: u32, step: f64) -> Result<Complex64>
where
    H: Fn(Complex64) -> Result<Complex64>,
{
    let central = |step: f64| -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=k {
            let offset = (k as f64 / 2.0 - i as f64) * step;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += h(w + offset)? * (sign * binomial(k, i));
        }
        Ok(acc / step.powi(k as i32))
    };
    let d1 = central(step)?;
    let d2 = central(step / 2.0)?;
    let d3 = central(step / 4.0)?;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Root;
    use crate::trajectory::{simulate_rk4, Guards};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn origin() -> BlaschkeProduct {
        BlaschkeProduct::new(vec![Root::simple(c(0.0, 0.0))]).unwrap()
    }

    fn inverse() -> RationalSymbol {
        RationalSymbol::from_polys(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[0.0, 1.0])).unwrap()
    }

    /// Closed-form samples of the z' = 1/z flow from 0.3.
    fn inverse_flow(dt: f64, t_end: f64) -> Trajectory {
        let n = (t_end / dt).round() as usize + 1;
        let samples = (0..n).map(|s| c((0.09 + 2.0 * s as f64 * dt).sqrt(), 0.0)).collect();
        Trajectory::new(dt, samples, None).unwrap()
    }

    #[test]
    fn occupation_constant_path() {
        let z0 = c(0.3, -0.2);
        let t = Trajectory::new(0.5, vec![z0; 5], None).unwrap();
        let v = occupation_apply(&t, |z| Ok(1.0 + z), QuadRule::Trapezoid).unwrap();
        assert_abs_diff_eq!((v - 2.0 * (1.0 + z0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn occupation_closed_loop() {
        let n = 401;
        let dt = std::f64::consts::TAU / (n - 1) as f64;
        let samples = (0..n).map(|s| 0.5 * Complex64::from_polar(1.0, s as f64 * dt)).collect();
        let t = Trajectory::new(dt, samples, None).unwrap();
        let v = occupation_apply(&t, Ok, QuadRule::Trapezoid).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn occupation_inverse_flow() {
        // int (0.09 + 2t) dt over [0, 0.2] = 0.058
        let t = inverse_flow(1e-3, 0.2);
        let v = occupation_apply(&t, |z| Ok(z * z), QuadRule::Trapezoid).unwrap();
        assert_abs_diff_eq!(v.re, 0.058, epsilon = 1e-12);
        let s = occupation_apply(&t, |z| Ok(z * z), QuadRule::Simpson).unwrap();
        assert_abs_diff_eq!(s.re, 0.058, epsilon = 1e-14);
    }

    #[test]
    fn adjoint_zero_symbol() {
        let t = inverse_flow(1e-2, 0.2);
        let rep = AdjointRepresentative::new(origin(), t.clone(), vec![c(0.0, 0.0); t.len()], QuadRule::Trapezoid).unwrap();
        assert_eq!(rep.eval(c(0.4, 0.1)), c(0.0, 0.0));
    }

    #[test]
    fn adjoint_constant_path() {
        let z0 = c(0.5, 0.2);
        let hc = c(0.3, -1.1);
        let t = Trajectory::new(0.25, vec![z0; 5], None).unwrap();
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.2, 0.1))]).unwrap();
        let rep = AdjointRepresentative::new(b.clone(), t, vec![hc; 5], QuadRule::Trapezoid).unwrap();
        let z = c(-0.3, 0.4);
        let expected = hc.conj() * kernels::restricted_kernel_dwbar(&b, z0, z);
        assert_abs_diff_eq!((rep.eval(z) - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_matches_endpoint_on_integral_curve() {
        let f = inverse();
        let z = c(0.4, 0.0);
        let err = |dt: f64| {
            let t = inverse_flow(dt, 0.2);
            let rep = AdjointRepresentative::from_symbol(origin(), t, |z| f.eval(z), QuadRule::Trapezoid).unwrap();
            let endpoint = adjoint_endpoint(&origin(), c(0.3, 0.0), c(0.7, 0.0), z);
            (adjoint_apply(&rep, z) - endpoint).norm()
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        assert!(e2 < 1e-5, "{e2}");
        assert!((3.5..4.5).contains(&(e1 / e2)), "{}", e1 / e2);
    }

    #[test]
    fn endpoint_edge_cases() {
        let b = origin();
        assert_eq!(adjoint_endpoint(&b, c(0.3, 0.1), c(0.3, 0.1), c(0.2, 0.0)), c(0.0, 0.0));
        let z = c(0.2, -0.1);
        let v = adjoint_endpoint(&b, c(0.0, 0.0), c(0.5, 0.0), z);
        assert_abs_diff_eq!((v - kernels::restricted_kernel(&b, c(0.5, 0.0), z)).norm(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn unweighted_endpoint_derivative() {
        let b = BlaschkeProduct::new(vec![Root::simple(c(0.2, 0.1))]).unwrap();
        let (g0, gt, z) = (c(0.6, 0.3), c(0.1, 0.8), c(-0.2, 0.3));
        let h = 1e-6;
        let fd = (adjoint_endpoint_unweighted(&b, g0, gt, z + h) - adjoint_endpoint_unweighted(&b, g0, gt, z - h)) / (2.0 * h);
        let exact = adjoint_endpoint_unweighted_derivative(&b, g0, gt, z);
        assert!((fd - exact).norm() / exact.norm() < 1e-8);
    }

    #[test]
    fn representative_lies_in_shifted_space() {
        let a = c(0.2, 0.1);
        let b = BlaschkeProduct::new(vec![Root::simple(a)]).unwrap();
        let f = RationalSymbol::from_polys(Polynomial::from_real(&[1.0]), Polynomial::new(vec![-a, c(1.0, 0.0)])).unwrap();
        let sim = simulate_rk4(&f, c(0.6, 0.3), 0.1, 1e-3, Guards::default()).unwrap();
        let rep = AdjointRepresentative::from_symbol(b, sim.trajectory, |z| Ok(z * z + 0.5), QuadRule::Trapezoid).unwrap();
        assert!(rep.eval(a).norm() < 1e-10);
        assert!(rep.derivative(a).norm() < 1e-10);
    }

    #[test]
    fn representative_is_linear_in_symbol() {
        let t = inverse_flow(1e-2, 0.2);
        let h1: Vec<_> = t.samples().iter().map(|z| z * z).collect();
        let h2: Vec<_> = t.samples().iter().map(|z| 1.0 / (2.0 - z)).collect();
        let (alpha, beta) = (c(0.7, -0.2), c(-1.3, 0.4));
        let combo: Vec<_> = h1.iter().zip(&h2).map(|(a, b)| alpha * a + beta * b).collect();
        let r1 = AdjointRepresentative::new(origin(), t.clone(), h1, QuadRule::Trapezoid).unwrap();
        let r2 = AdjointRepresentative::new(origin(), t.clone(), h2, QuadRule::Trapezoid).unwrap();
        let rc = AdjointRepresentative::new(origin(), t, combo, QuadRule::Trapezoid).unwrap();
        for z in [c(0.1, 0.2), c(-0.5, 0.3), c(0.8, -0.1)] {
            // the adjoint is conjugate-linear in the symbol
            let expected = alpha.conj() * r1.eval(z) + beta.conj() * r2.eval(z);
            assert!((rc.eval(z) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let t = inverse_flow(1e-2, 0.2);
        assert!(AdjointRepresentative::new(origin(), t, vec![c(1.0, 0.0); 3], QuadRule::Trapezoid).is_err());
    }

    #[test]
    fn adjoint_identity_on_integral_curve() {
        let t = inverse_flow(1e-3, 0.2);
        let r = verify_adjoint_identity(&origin(), &inverse(), &t, &Polynomial::from_real(&[1.0]), QuadRule::Trapezoid).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn adjoint_identity_trivial_case() {
        // f = z, gamma = 0: both sides vanish
        let f = RationalSymbol::polynomial(Polynomial::from_real(&[0.0, 1.0]));
        let t = Trajectory::new(0.1, vec![c(0.0, 0.0); 5], None).unwrap();
        let r = verify_adjoint_identity(&origin(), &f, &t, &Polynomial::from_real(&[1.0, 2.0]), QuadRule::Trapezoid).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn adjoint_identity_detects_wrong_curve() {
        // straight segment 0.3 -> 0.7 traversed uniformly is not a 1/z flow line
        let n = 201;
        let dt = 1e-3;
        let samples = (0..n).map(|s| c(0.3 + 0.4 * s as f64 / (n - 1) as f64, 0.0)).collect();
        let t = Trajectory::new(dt, samples, None).unwrap();
        let r = verify_adjoint_identity(&origin(), &inverse(), &t, &Polynomial::from_real(&[0.0, 1.0]), QuadRule::Trapezoid).unwrap();
        // lhs = int 3 gamma dt = 3 * 0.2 * 0.5 = 0.3, rhs = 0.343 - 0.027 = 0.316
        assert_abs_diff_eq!(r, 0.016, epsilon = 1e-9);
    }

    #[test]
    fn leibniz_first_order() {
        let g = Polynomial::from_real(&[1.0, -0.5, 0.25]);
        let rep = verify_leibniz_pairing(&origin(), &inverse(), &g, c(0.5, 0.1), 1, &CoeffExtractor::default()).unwrap();
        assert!(rep.residual < 1e-10, "{rep:?}");
    }

    #[test]
    fn leibniz_second_order_constant_image() {
        // f (B^2 g)' = (1/z)(2z) = 2, so the derivative vanishes
        let rep = verify_leibniz_pairing(&origin(), &inverse(), &Polynomial::from_real(&[1.0]), c(0.5, 0.0), 2, &CoeffExtractor::default()).unwrap();
        assert!(rep.residual < 1e-8, "{rep:?}");
        assert!(rep.pairing[0].abs() < 1e-8);
    }

    #[test]
    fn leibniz_third_order_cubic() {
        let g = Polynomial::new(vec![c(0.4, -0.3), c(-1.2, 0.7), c(0.5, 0.5), c(0.9, -0.1)]);
        let w = c(0.3, 0.2);
        let rep = verify_leibniz_pairing(&origin(), &inverse(), &g, w, 3, &CoeffExtractor::default()).unwrap();
        assert!(rep.residual < 1e-6, "{rep:?}");
        let a = c(0.2, 0.1);
        let f = RationalSymbol::from_polys(Polynomial::from_real(&[1.0]), Polynomial::new(vec![-a, c(1.0, 0.0)])).unwrap();
        let rep = verify_leibniz_pairing(&f.blaschke(), &f, &g, w, 3, &CoeffExtractor::default()).unwrap();
        assert!(rep.residual < 1e-6, "{rep:?}");
        assert!(rep.tail_bound < 1e-6, "{rep:?}");
    }

    #[test]
    fn richardson_on_exponential() {
        let h = |z: Complex64| Ok(z.exp());
        for k in 1..4 {
            let d = richardson_derivative(&h, c(0.2, 0.1), k, 0.05).unwrap();
            assert!((d - c(0.2, 0.1).exp()).norm() < 1e-9, "k = {k}: {d}");
        }
    }
}

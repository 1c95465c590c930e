//! Szegő kernel of the Hardy space and the restricted kernel of `B^2 H^2`.
//!
//! Convention: in `k(w, z)` the first argument is the conjugate slot, so
//! `k(w, .)` is analytic in `z` and `g(w) = <g, k(w, .)>`. Derivatives with
//! respect to `conj(w)` treat `conj(P(w))` as a power series in `conj(w)`
//! with conjugated coefficients, so `d/d conj(w) conj(P(w)) = conj(P'(w))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbols::BlaschkeProduct;

/// Kernel arguments must satisfy `|z| <= KERNEL_RADIUS`.
pub const KERNEL_RADIUS: f64 = 1.0 - 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Validated pair of interior points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub w: Complex64,
    pub z: Complex64,
}

impl KernelPoint {
    pub fn new(w: Complex64, z: Complex64) -> Result<Self> {
        for (name, v) in [("w", w), ("z", z)] {
            if !(v.norm() <= KERNEL_RADIUS) {
                return Err(Error::InvalidInput(format!(
                    "kernel argument {name} = {v} lies outside |z| <= 1 - 1e-9"
                )));
            }
        }
        Ok(Self { w, z })
    }
}

/// `S(w, z) = 1 / (1 - conj(w) z)`.
#[inline]
pub fn szego(w: Complex64, z: Complex64) -> Complex64 {
    ONE / (ONE - w.conj() * z)
}

/// `d^2 S / d conj(w) dz = (1 + conj(w) z) S^3`.
#[inline]
pub fn szego_mixed(w: Complex64, z: Complex64) -> Complex64 {
    let s = szego(w, z);
    (ONE + w.conj() * z) * s * s * s
}

/// `K_w^{[j]}(z) = j! z^j / (1 - conj(w) z)^{j+1}`; represents `g -> g^{(j)}(w)`.
pub fn derivative_kernel(w: Complex64, j: u32, z: Complex64) -> Complex64 {
    let factorial: f64 = (1..=j).map(f64::from).product();
    let s = szego(w, z);
    factorial * z.powu(j) * s.powu(j + 1)
}

/// `K_{B^2}(w, z) = conj(P(w)) P(z) S(w, z)` with `P = B^2`.
pub fn restricted_kernel(b: &BlaschkeProduct, w: Complex64, z: Complex64) -> Complex64 {
    let (pw, _) = b.pshift_eval(w);
    let (pz, _) = b.pshift_eval(z);
    pw.conj() * pz * szego(w, z)
}

/// `d/d conj(w) K_{B^2}(w, z) = [conj(P'(w)) + conj(P(w)) z S] P(z) S`,
/// the representer of `h -> h'(w)` on `B^2 H^2`.
pub fn restricted_kernel_dwbar(b: &BlaschkeProduct, w: Complex64, z: Complex64) -> Complex64 {
    let (pw, dpw) = b.pshift_eval(w);
    let (pz, _) = b.pshift_eval(z);
    dwbar_from_parts(pw, dpw, pz, w, z)
}

#[inline]
pub(crate) fn dwbar_from_parts(pw: Complex64, dpw: Complex64, pz: Complex64, w: Complex64, z: Complex64) -> Complex64 {
    let s = szego(w, z);
    (dpw.conj() + pw.conj() * z * s) * pz * s
}

/// `kappa(w, z) = d^2/d conj(w) dz K_{B^2}(w, z)`.
pub fn restricted_kernel_mixed(b: &BlaschkeProduct, w: Complex64, z: Complex64) -> Complex64 {
    let (pw, dpw) = b.pshift_eval(w);
    let (pz, dpz) = b.pshift_eval(z);
    mixed_from_parts(pw, dpw, pz, dpz, w, z)
}

/// Four-term product rule for `kappa` given precomputed `P`, `P'` values.
#[inline]
pub(crate) fn mixed_from_parts(
    pw: Complex64,
    dpw: Complex64,
    pz: Complex64,
    dpz: Complex64,
    w: Complex64,
    z: Complex64,
) -> Complex64 {
    let wb = w.conj();
    let s = szego(w, z);
    let s2 = s * s;
    let (cpw, cdpw) = (pw.conj(), dpw.conj());
    cdpw * dpz * s + cdpw * pz * wb * s2 + cpw * dpz * z * s2 + cpw * pz * (ONE + wb * z) * s2 * s
}

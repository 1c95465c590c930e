//! Occupation-kernel system identification for holomorphic dynamics
//! `z' = f(z)` on the unit disk, with `f = p / q` a rational symbol whose
//! poles lie inside the disk.
//!
//! The Liouville operator `g -> f g'` is restricted to the model-shifted
//! space `B^2 H^2`, where `B` is the Blaschke product vanishing at the poles
//! of `f`. Trajectory data enter through occupation kernels, and `F = B^2 f`
//! is learned by a Gram-system regression onto a dictionary.

// Comparisons are written as `!(x < bound)` so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod identify;
pub mod json;
pub mod kernels;
pub mod linalg;
pub mod occkernel;
pub mod quadrature;
pub mod spectral;
pub mod symbols;
pub mod trajectory;

pub use error::{Error, Result};
pub use exec::Execution;
pub use identify::{BasisFn, Dictionary, Estimator, GramSystem, IdentificationResult};
pub use quadrature::QuadRule;
pub use symbols::{BlaschkeProduct, Polynomial, RationalSymbol, Root};
pub use trajectory::{Guards, Trajectory};

//! Numerical laboratory for zero sets of exponential sums in a horizontal
//! strip and the pure-point measures attached to them.
//!
//! The forward pipeline takes an absolutely convergent exponential sum `Q`
//! whose spectrum endpoints are attained, locates its zeros `A` inside a strip
//! `|Im z| ≤ H`, and computes the atoms `Σ b_γ δ_γ` of the c-Fourier transform
//! of `μ_A = Σ δ_{a_n}` from the logarithmic derivative of `Q` on two horizontal
//! lines. The inverse pipeline starts from atom data and rebuilds an
//! exponential sum with the prescribed zeros.
//!
//! Modules:
//! - [`wiener`]: exact-spectrum arithmetic (`+`, `×`, `exp`, `log(1+·)`).
//! - [`strip_zeros`]: argument-principle zero finder and the `a_n = ρn + φ(n)` numbering.
//! - [`cfourier`]: bump test functions, their c-Fourier transforms, and pairings.
//! - [`spectral`]: atoms of the zero-counting measure.
//! - [`reconstruct`]: series from atoms, canonical products, round-trip checks.
//! - [`apcheck`]: almost-period and translation-boundedness diagnostics.

// `!(x > 0.0)` guards are written that way on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apcheck;
pub mod cfourier;
pub mod error;
pub mod presets;
pub mod quadrature;
pub mod reconstruct;
pub mod spectral;
pub mod strip_zeros;
pub mod wiener;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Version tag carried by every serialized artifact.
pub const SCHEMA: &str = "qsl/1";

//! Propagators of the Salpeter equation and of its Wick-rotated diffusion
//! counterpart (the Baeumer equation) in one space dimension.
//!
//! Units are natural (hbar = c = 1). Every propagator can be evaluated in
//! several independent ways so that the methods check one another:
//!
//! * closed forms built from `K1` and `H1(1)` ([`salpeter::salpeter_closed`],
//!   [`baeumer::baeumer_closed`]),
//! * contour-rotated integral representations inside and outside the light
//!   cone,
//! * a split perturbative series ([`series`]).
//!
//! [`wavefunc`] evolves a compact initial bump through the singular kernel and
//! [`verify`] bundles the cross-checks into reports.

pub mod baeumer;
pub mod error;
pub mod quadrature;
pub mod salpeter;
pub mod series;
pub mod specfun;
pub mod verify;
pub mod wavefunc;

pub use error::{Error, Result};

/// Complex carrier for every propagator value.
pub type ComplexScalar = num_complex::Complex64;

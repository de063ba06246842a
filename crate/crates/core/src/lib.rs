//! Numerical spectral theory of rank-one perturbations and Anderson-type
//! Hamiltonians.
//!
//! * [`measures`]: finite measures on the line, restriction, essential
//!   support of the absolutely continuous part, equivalence classification.
//! * [`cauchy`]: Cauchy transforms `K` and `K1`, boundary values, atom
//!   detection and ratio limits.
//! * [`rank_one`]: spectral measures of `A + alpha (., phi) phi` by the
//!   Aronszajn–Krein formula and by an independent matrix eigensolve.
//! * [`spectral_shift`]: Krein–Lifshits shift functions, forward and inverse,
//!   and the surgery that trades singular for absolutely continuous spectrum.
//! * [`anderson`]: finite-volume random Schrödinger operators and Monte Carlo
//!   diagnostics.
//! * [`verify`]: seeded property suites over all of the above.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anderson;
pub mod cauchy;
pub mod error;
mod kernels;
pub mod linalg;
pub mod measures;
pub mod rank_one;
pub mod region;
pub mod rng;
pub mod spectral_shift;
pub mod verify;

pub use error::{Error, Result};
pub use measures::Measure;
pub use region::RegionSet;

//! Dual-primal isogeometric tearing and interconnecting (IETI-DP) solver for
//! 2D multi-patch Poisson problems with nested non-matching interfaces.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line driver and timing live in the `ietidp-cli` companion crate.

#![no_std]
// `!(x > 0.0)` checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adaptivity;
pub mod assembly;
pub mod coupling;
pub mod geometry;
pub mod ieti;
pub mod krylov;
pub mod linalg;
pub mod math;
pub mod precond;
pub mod quadrature;
pub mod scenarios;
pub mod splines;

mod error;

pub use error::Error;

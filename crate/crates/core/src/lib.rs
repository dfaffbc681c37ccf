//! Lindblad generators, their spectral decomposition, and unitary
//! pre-rotations that remove the overlap with the slowest relaxation mode.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod mpemba;
pub mod spectral;
pub mod spin;
pub mod superop;

pub use error::{Error, ErrorKind, Result};
pub use linalg::{ComplexMatrix, C64};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Majorization-minimization solvers for undersampled phase retrieval.
//!
//! Two solvers are provided:
//!
//! * [`cprime`] recovers a signal that is sparse in the standard basis by
//!   minimizing `‖√y − |Ax|‖² + ρ‖x‖₁` with SQUAREM-accelerated MM steps.
//! * [`scprime`] jointly recovers many signals, a shared dictionary and
//!   sparse codes by block successive upper-bound minimization.
//!
//! Supporting modules build measurement ensembles ([`measurements`]),
//! provide the shared prox and majorizer bounds ([`prox`]), resolve trivial
//! ambiguities of Fourier measurements ([`ambiguity`]), convert images to
//! patch matrices and score reconstructions ([`imaging`]), and run seeded
//! experiments ([`harness`]).

// `!(a >= b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod cprime;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod linalg;
pub mod measurements;
pub mod prox;
pub mod scprime;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex column vector.
pub type CVector = ndarray::Array1<Complex64>;
/// Complex matrix, columns are signals.
pub type CMatrix = ndarray::Array2<Complex64>;

//! Galerkin-Koornwinder reduction of scalar delay differential equations and
//! optimal control of the reduced systems.
//!
//! The pipeline: integrate the DDE ([`dde`]), project its history segments
//! onto rescaled Koornwinder polynomials ([`basis`]), build the reduced ODE
//! ([`galerkin`]), then synthesize controls either open-loop through the
//! Pontryagin boundary-value problem ([`pmp`]) or in feedback form from a
//! grid solution of the HJB equation ([`hjb`]). [`diagnostics`] measures
//! what the truncation leaves behind.

// Negated comparisons reject NaN along with the out-of-range values, and the
// kernels index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod cases;
pub mod dde;
pub mod diagnostics;
pub mod error;
pub mod galerkin;
pub mod hjb;
pub mod interp;
pub mod linalg;
pub mod par;
pub mod pmp;
pub mod quad;

pub use basis::{HistorySegment, KoornwinderBasis};
pub use dde::{ControlSignal, DdeModel, Nonlinearity, Trajectory};
pub use error::{Error, Result};
pub use galerkin::ReducedSystem;
pub use par::Exec;

//! Compilation of sum-of-squares programs into semidefinite feasibility
//! problems.
//!
//! A program is a set of [`SosConstraint`]s whose targets are affine in the
//! coefficients of [`PolynomialTemplate`]s. Each constraint becomes one PSD
//! Gram block; matching the target coefficients monomial by monomial yields
//! the linear equalities of the [`crate::sdp::SdpProblem`].

mod basis;
mod compile;
mod savings;
mod template;

pub use basis::monomial_basis;
pub use compile::{compile, NormalizationRule, SosConstraint};
pub use savings::count_savings;
pub use template::{AffineTarget, CoeffRef, PolynomialTemplate};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("constraint `{constraint}`: monomial {monomial} cannot be represented by the Gram basis")]
    MonomialOutsideSpan { constraint: String, monomial: String },
    #[error("program has no constraints")]
    EmptyProgram,
    #[error("invalid template: {0}")]
    BadTemplate(String),
}

//! Sparse multivariate polynomials over positional variables `x1..xn`,
//! together with the calculus used throughout the crate: gradients, Lie
//! derivatives, homogenization and top homogeneous components.
//!
//! Monomials are ordered graded-lexicographically and coefficients are
//! double-precision reals pruned at 1e-12 after arithmetic. Everything here
//! is immutable and pure, so values can be shared freely between threads.

mod monomial;
mod parse;
mod polynomial;
mod system;

pub use monomial::Monomial;
pub use parse::{parse, parse_in};
pub use polynomial::{Polynomial, COEFF_PRUNE};
pub use system::{
    discrete_difference, lie_derivative, LinearSystem, SwitchedMode, SwitchedSystem, VectorField,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("variable count mismatch ({left} vs {right})")]
    VarMismatch { left: usize, right: usize },
    #[error("target degree {target} is below the polynomial degree {actual}")]
    DegreeTooLow { target: u32, actual: u32 },
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("polynomial is not homogeneous of positive degree")]
    NotHomogeneous,
    #[error("system needs at least one component")]
    EmptySystem,
    #[error("matrix is not square")]
    NotSquare,
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
}

//! Desk-scale semidefinite feasibility: block PSD variables, linear
//! equalities, optional free scalars. Feasibility is decided through margin
//! maximization by an embedded primal-dual interior-point method with
//! Nesterov-Todd scaling on dense blocks.

pub mod problem;
mod sdpa;
mod solution;
mod solver;

pub use problem::{Equality, FreeTerm, GramTerm, Objective, SdpProblem};
pub use sdpa::{parse_sdpa, write_sdpa};
pub use solution::{point_residuals, Residuals, SdpSolution, SdpStatus};
pub use solver::{solve, SolverSettings};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("total block dimension {total} exceeds the cap {cap}")]
    DimensionCapExceeded { total: usize, cap: usize },
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
}

#[derive(Debug, Error)]
#[error("sdpa parse error at line {line}: {message}")]
pub struct SdpaError {
    pub line: usize,
    pub message: String,
}

/// Smallest eigenvalue of a symmetric matrix. Inputs that are asymmetric
/// beyond 1e-10 (relative to the largest entry) are rejected.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, SolverError> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(SolverError::MalformedProblem(format!(
                    "matrix is asymmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(min_eigenvalue_unchecked(m))
}

pub(crate) fn min_eigenvalue_unchecked(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_eigenvalue_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((min_eigenvalue(&id).unwrap() - 1.0).abs() < 1e-12);

        let ones = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(min_eigenvalue(&ones).unwrap().abs() < 1e-12);

        let diag = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0, 5.0]);
        assert!((min_eigenvalue(&diag).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(min_eigenvalue(&m).is_err());
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::problem::{max_equality_violation, SdpProblem};

/// Verdict of a feasibility solve. The margin is the optimum of the
/// margin-maximization problem: the largest `lambda` such that every Gram
/// block can be kept `lambda`-positive-definite (on its structurally
/// reachable face) while satisfying all equalities and the trace cap.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub enum SdpStatus {
    Feasible { margin: f64 },
    Infeasible { margin: f64 },
    Indeterminate { note: String },
}

impl SdpStatus {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SdpStatus::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, SdpStatus::Infeasible { .. })
    }
}

/// Residuals of a candidate point, recomputed from the problem data.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Residuals {
    pub max_eq_violation: f64,
    pub min_eigenvalue: f64,
}

/// Outcome of a solve: verdict plus the final point and its residuals.
#[derive(Clone, PartialEq, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub block_values: Vec<DMatrix<f64>>,
    pub free_values: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn to_json(&self) -> String {
        let dto = SolutionDto {
            status: self.status.clone(),
            blocks: self
                .block_values
                .iter()
                .map(|m| m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect())
                .collect(),
            free_values: self.free_values.clone(),
            residuals: self.residuals,
            iterations: self.iterations,
        };
        serde_json::to_string_pretty(&dto).expect("solution serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct SolutionDto {
    status: SdpStatus,
    /// Row-major entries per block.
    blocks: Vec<Vec<f64>>,
    free_values: Vec<f64>,
    residuals: Residuals,
    iterations: usize,
}

/// Recompute residuals of a point against the problem it came from.
pub fn point_residuals(
    problem: &SdpProblem,
    blocks: &[DMatrix<f64>],
    free: &[f64],
) -> Residuals {
    let max_eq_violation = max_equality_violation(problem, blocks, free);
    let min_eigenvalue = blocks
        .iter()
        .filter(|m| m.nrows() > 0)
        .map(|m| super::min_eigenvalue_unchecked(m))
        .fold(f64::INFINITY, f64::min);
    Residuals {
        max_eq_violation,
        min_eigenvalue: if min_eigenvalue.is_finite() {
            min_eigenvalue
        } else {
            0.0
        },
    }
}

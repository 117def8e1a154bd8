use serde::{Deserialize, Serialize};

/// One coefficient of a symmetric constraint matrix: the entry `(row, col)`
/// (and its mirror) of block `block` carries `coeff`. Entries are stored
/// upper-triangular (`row <= col`); the inner product with a Gram block `Q`
/// contributes `coeff * Q[row][col]` once for diagonal entries and twice for
/// off-diagonal ones.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct GramTerm {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: f64,
}

/// One coefficient on a free scalar variable.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct FreeTerm {
    pub var: usize,
    pub coeff: f64,
}

/// A linear equality `sum <A_b, Q_b> + sum c_k u_k = rhs` over the Gram
/// blocks and the free scalars. The right-hand side lives in the problem's
/// `rhs` vector at the same index.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct Equality {
    pub gram: Vec<GramTerm>,
    pub free: Vec<FreeTerm>,
}

/// An optional linear objective over the same variables.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct Objective {
    pub gram: Vec<GramTerm>,
    pub free: Vec<FreeTerm>,
}

/// A block-diagonal semidefinite feasibility problem: find positive
/// semidefinite blocks `Q_b` and free scalars `u` satisfying all equalities.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SdpProblem {
    /// Dimensions of the symmetric PSD blocks.
    pub blocks: Vec<usize>,
    /// Human-readable block labels, parallel to `blocks`.
    pub block_labels: Vec<String>,
    /// Number of free scalar variables.
    pub n_free: usize,
    pub equalities: Vec<Equality>,
    pub rhs: Vec<f64>,
    pub objective: Option<Objective>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, n_free: usize) -> Self {
        let block_labels = (0..blocks.len()).map(|i| format!("block{i}")).collect();
        Self {
            blocks,
            block_labels,
            n_free,
            equalities: Vec::new(),
            rhs: Vec::new(),
            objective: None,
        }
    }

    pub fn n_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn push_equality(&mut self, eq: Equality, rhs: f64) {
        self.equalities.push(eq);
        self.rhs.push(rhs);
    }

    /// Structural sanity: every referenced block, entry and free variable
    /// exists and entries are upper-triangular.
    pub fn validate(&self) -> Result<(), String> {
        if self.equalities.len() != self.rhs.len() {
            return Err("equality and rhs counts differ".into());
        }
        if self.block_labels.len() != self.blocks.len() {
            return Err("label and block counts differ".into());
        }
        let check_gram = |g: &GramTerm| -> Result<(), String> {
            let dim = *self
                .blocks
                .get(g.block)
                .ok_or_else(|| format!("block {} out of range", g.block))?;
            if g.row > g.col || g.col >= dim {
                return Err(format!(
                    "entry ({},{}) invalid for block {} of dimension {}",
                    g.row, g.col, g.block, dim
                ));
            }
            Ok(())
        };
        let check_free = |t: &FreeTerm| -> Result<(), String> {
            if t.var >= self.n_free {
                return Err(format!("free variable {} out of range", t.var));
            }
            Ok(())
        };
        for eq in &self.equalities {
            for g in &eq.gram {
                check_gram(g)?;
            }
            for t in &eq.free {
                check_free(t)?;
            }
        }
        if let Some(obj) = &self.objective {
            for g in &obj.gram {
                check_gram(g)?;
            }
            for t in &obj.free {
                check_free(t)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Evaluate `<A_i, Q> + c_i . u` for one equality against concrete values.
pub fn equality_value(
    eq: &Equality,
    blocks: &[nalgebra::DMatrix<f64>],
    free: &[f64],
) -> f64 {
    let mut acc = 0.0;
    for g in &eq.gram {
        let q = &blocks[g.block];
        let v = q[(g.row, g.col)];
        acc += if g.row == g.col {
            g.coeff * v
        } else {
            2.0 * g.coeff * v
        };
    }
    for t in &eq.free {
        acc += t.coeff * free[t.var];
    }
    acc
}

/// Largest absolute equality violation of a candidate point.
pub fn max_equality_violation(
    problem: &SdpProblem,
    blocks: &[nalgebra::DMatrix<f64>],
    free: &[f64],
) -> f64 {
    problem
        .equalities
        .iter()
        .zip(&problem.rhs)
        .map(|(eq, &rhs)| (equality_value(eq, blocks, free) - rhs).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn equality_evaluation_counts_off_diagonals_twice() {
        let mut p = SdpProblem::new(vec![2], 1);
        p.push_equality(
            Equality {
                gram: vec![
                    GramTerm { block: 0, row: 0, col: 0, coeff: 1.0 },
                    GramTerm { block: 0, row: 0, col: 1, coeff: 1.0 },
                ],
                free: vec![FreeTerm { var: 0, coeff: 3.0 }],
            },
            0.0,
        );
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        let v = equality_value(&p.equalities[0], &[q], &[10.0]);
        assert_eq!(v, 1.0 + 2.0 * 2.0 + 30.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validate_catches_bad_references() {
        let mut p = SdpProblem::new(vec![2], 0);
        p.push_equality(
            Equality {
                gram: vec![GramTerm { block: 1, row: 0, col: 0, coeff: 1.0 }],
                free: vec![],
            },
            0.0,
        );
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let mut p = SdpProblem::new(vec![3, 1], 2);
        p.push_equality(
            Equality {
                gram: vec![GramTerm { block: 0, row: 1, col: 2, coeff: -0.5 }],
                free: vec![FreeTerm { var: 1, coeff: 1.0 }],
            },
            2.25,
        );
        let q = SdpProblem::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
    }
}

use std::cmp::Ordering;
use std::fmt;

/// A power product of the ambient variables, stored as one exponent per
/// variable. The ambient variable count is fixed at construction and all
/// monomials combined in arithmetic must share it.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        assert!(!exps.is_empty(), "monomial needs at least one variable");
        Self { exps }
    }

    /// The constant monomial 1.
    pub fn unit(n_vars: usize) -> Self {
        Self::new(vec![0; n_vars])
    }

    /// The single variable `x_{i+1}` (zero-based index).
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable index out of range");
        let mut exps = vec![0; n_vars];
        exps[i] = 1;
        Self::new(exps)
    }

    pub fn n_vars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn is_unit(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_vars(), other.n_vars(), "variable count mismatch");
        Self::new(
            self.exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_vars(), "point dimension mismatch");
        self.exps
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// Same monomial viewed in a larger ambient space (new variables get
    /// exponent zero).
    pub fn extended(&self, n_vars: usize) -> Self {
        assert!(n_vars >= self.n_vars());
        let mut exps = self.exps.clone();
        exps.resize(n_vars, 0);
        Self::new(exps)
    }

    /// Drop the last variable, which must have exponent zero.
    pub fn dropped_last(&self) -> Self {
        assert!(self.n_vars() > 1);
        assert_eq!(*self.exps.last().unwrap(), 0);
        Self::new(self.exps[..self.exps.len() - 1].to_vec())
    }
}

/// Graded lexicographic order: lower total degree first; within a degree,
/// lexicographically larger exponent vectors first (so `x1` precedes `x2`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let unit = Monomial::unit(2);
        let x1 = Monomial::var(2, 0);
        let x2 = Monomial::var(2, 1);
        let x1x2 = x1.mul(&x2);
        assert!(unit < x1);
        assert!(x1 < x2);
        assert!(x2 < x1x2);
        // within degree 2: x1^2 before x1*x2 before x2^2
        let x1sq = x1.mul(&x1);
        let x2sq = x2.mul(&x2);
        assert!(x1sq < x1x2);
        assert!(x1x2 < x2sq);
    }

    #[test]
    fn display_forms() {
        let m = Monomial::new(vec![4, 2]);
        assert_eq!(m.to_string(), "x1^4*x2^2");
        assert_eq!(Monomial::unit(3).to_string(), "1");
        assert_eq!(Monomial::new(vec![0, 1, 0]).to_string(), "x2");
    }

    #[test]
    fn eval_and_extend() {
        let m = Monomial::new(vec![2, 1]);
        assert_eq!(m.eval(&[3.0, 2.0]), 18.0);
        assert_eq!(m.extended(3).exponents(), &[2, 1, 0]);
    }
}

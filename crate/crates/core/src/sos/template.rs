use crate::poly::{Monomial, Polynomial};

use super::basis::monomial_basis;
use super::CompileError;

/// A polynomial whose coefficients over a fixed monomial basis are decision
/// variables, optionally with some coefficients pinned to fixed values.
#[derive(Clone, PartialEq, Debug)]
pub struct PolynomialTemplate {
    n_vars: usize,
    degree: u32,
    basis: Vec<Monomial>,
    pinned: Polynomial,
}

impl PolynomialTemplate {
    pub fn new(
        n_vars: usize,
        degree: u32,
        basis: Vec<Monomial>,
        pinned: Polynomial,
    ) -> Result<Self, CompileError> {
        for m in &basis {
            if m.n_vars() != n_vars || m.degree() > degree {
                return Err(CompileError::BadTemplate(format!(
                    "basis monomial {m} outside the declared shape"
                )));
            }
        }
        let mut sorted = basis.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != basis.len() {
            return Err(CompileError::BadTemplate(
                "basis monomials must be distinct".into(),
            ));
        }
        if pinned.n_vars() != n_vars {
            return Err(CompileError::BadTemplate(
                "pinned part has a different variable count".into(),
            ));
        }
        if pinned.terms().any(|(m, _)| basis.contains(m)) {
            return Err(CompileError::BadTemplate(
                "pinned monomials must be disjoint from the free basis".into(),
            ));
        }
        Ok(Self {
            n_vars,
            degree,
            basis,
            pinned,
        })
    }

    /// All monomials of degree 1..=degree, plus the constant monomial when
    /// `include_constant` is set.
    pub fn full(n_vars: usize, degree: u32, include_constant: bool) -> Self {
        let basis = monomial_basis(n_vars, degree, false)
            .into_iter()
            .filter(|m| include_constant || !m.is_unit())
            .collect();
        Self::new(n_vars, degree, basis, Polynomial::zero(n_vars)).unwrap()
    }

    /// All monomials of exactly the given degree.
    pub fn homogeneous(n_vars: usize, degree: u32) -> Self {
        let basis = monomial_basis(n_vars, degree, true);
        Self::new(n_vars, degree, basis, Polynomial::zero(n_vars)).unwrap()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn pinned(&self) -> &Polynomial {
        &self.pinned
    }

    pub fn has_constant(&self) -> bool {
        self.basis.iter().any(Monomial::is_unit)
    }

    /// The polynomial obtained by substituting concrete coefficient values.
    pub fn instantiate(&self, coeffs: &[f64]) -> Polynomial {
        assert_eq!(coeffs.len(), self.basis.len(), "coefficient count mismatch");
        let free = Polynomial::from_terms(
            self.n_vars,
            self.basis
                .iter()
                .cloned()
                .zip(coeffs.iter().copied())
                .map(|(m, c)| (m, c)),
        );
        &free + &self.pinned
    }
}

/// Reference to one decision coefficient of one template.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CoeffRef {
    pub template: usize,
    pub index: usize,
}

/// A polynomial-valued expression that is affine in template coefficients:
/// a fixed polynomial plus `sum_j u_j * w_j` with polynomial weights.
#[derive(Clone, PartialEq, Debug)]
pub struct AffineTarget {
    n_vars: usize,
    fixed: Polynomial,
    linear: Vec<(CoeffRef, Polynomial)>,
}

impl AffineTarget {
    pub fn fixed(p: Polynomial) -> Self {
        Self {
            n_vars: p.n_vars(),
            fixed: p,
            linear: Vec::new(),
        }
    }

    /// The template itself as an affine expression, with each basis
    /// monomial mapped through `weight`.
    pub fn from_template<F>(
        template_index: usize,
        template: &PolynomialTemplate,
        mut weight: F,
    ) -> Self
    where
        F: FnMut(&Polynomial) -> Polynomial,
    {
        let fixed = weight(template.pinned());
        let n_vars = fixed.n_vars();
        let linear = template
            .basis()
            .iter()
            .enumerate()
            .map(|(index, m)| {
                let basis_poly = Polynomial::monomial(template.n_vars(), m.clone(), 1.0);
                (
                    CoeffRef {
                        template: template_index,
                        index,
                    },
                    weight(&basis_poly),
                )
            })
            .collect();
        Self {
            n_vars,
            fixed,
            linear,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn fixed_part(&self) -> &Polynomial {
        &self.fixed
    }

    pub fn linear_part(&self) -> &[(CoeffRef, Polynomial)] {
        &self.linear
    }

    pub fn add_fixed(&self, p: &Polynomial) -> Self {
        Self {
            n_vars: self.n_vars,
            fixed: &self.fixed + p,
            linear: self.linear.clone(),
        }
    }

    /// Largest degree the target can attain over coefficient choices.
    pub fn degree_bound(&self) -> u32 {
        self.linear
            .iter()
            .map(|(_, w)| w.degree())
            .chain([self.fixed.degree()])
            .max()
            .unwrap_or(0)
    }

    /// True when the fixed part and every weight are homogeneous of one
    /// shared degree.
    pub fn is_homogeneous(&self) -> bool {
        let polys = self
            .linear
            .iter()
            .map(|(_, w)| w)
            .chain([&self.fixed])
            .filter(|p| !p.is_zero());
        let mut deg = None;
        for p in polys {
            if !p.is_homogeneous() {
                return false;
            }
            match deg {
                None => deg = Some(p.degree()),
                Some(d) if d == p.degree() => {}
                _ => return false,
            }
        }
        true
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.fixed.is_zero() && self.linear.iter().all(|(_, w)| w.is_zero())
    }

    /// Substitute concrete coefficient values for the whole program.
    pub fn instantiate(&self, coeffs: &dyn Fn(CoeffRef) -> f64) -> Polynomial {
        let mut acc = self.fixed.clone();
        for (r, w) in &self.linear {
            acc = &acc + &w.scale(coeffs(*r));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    #[test]
    fn full_template_shapes() {
        let t = PolynomialTemplate::full(2, 2, false);
        assert_eq!(t.len(), 5); // x1, x2, x1^2, x1*x2, x2^2
        assert!(!t.has_constant());
        let t = PolynomialTemplate::full(2, 2, true);
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn instantiate_matches_basis_order() {
        let t = PolynomialTemplate::homogeneous(2, 2);
        // basis is x1^2, x1*x2, x2^2
        let v = t.instantiate(&[1.0, -2.0, 3.0]);
        assert_eq!(v, parse("x1^2 - 2*x1*x2 + 3*x2^2").unwrap());
    }

    #[test]
    fn affine_target_from_template() {
        let t = PolynomialTemplate::homogeneous(1, 2);
        let target = AffineTarget::from_template(0, &t, |p| p.scale(2.0));
        assert_eq!(target.linear_part().len(), 1);
        assert_eq!(target.degree_bound(), 2);
        assert!(target.is_homogeneous());
        let inst = target.instantiate(&|_| 1.5);
        assert_eq!(inst, parse("3*x1^2").unwrap());
    }

    #[test]
    fn rejects_overlapping_pinned() {
        let basis = vec![Monomial::var(1, 0)];
        let pinned = parse("2*x1").unwrap();
        assert!(PolynomialTemplate::new(1, 1, basis, pinned).is_err());
    }
}

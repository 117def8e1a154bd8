use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::monomial::Monomial;
use super::PolyError;

/// Coefficients with magnitude below this are dropped after every
/// arithmetic operation, so stored terms are never exactly zero.
pub const COEFF_PRUNE: f64 = 1e-12;

/// A sparse multivariate polynomial with real coefficients over positional
/// variables `x1..xn`. Values are immutable after construction; all
/// operations are pure functions.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        assert!(n_vars >= 1, "variable count must be positive");
        Self {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        Self::from_terms(n_vars, [(Monomial::unit(n_vars), c)])
    }

    /// The variable `x_{i+1}` as a polynomial.
    pub fn var(n_vars: usize, i: usize) -> Self {
        Self::from_terms(n_vars, [(Monomial::var(n_vars, i), 1.0)])
    }

    pub fn monomial(n_vars: usize, m: Monomial, c: f64) -> Self {
        assert_eq!(m.n_vars(), n_vars, "variable count mismatch");
        Self::from_terms(n_vars, [(m, c)])
    }

    pub fn from_terms<I>(n_vars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        assert!(n_vars >= 1, "variable count must be positive");
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.n_vars(), n_vars, "variable count mismatch");
            *map.entry(m).or_insert(0.0) += c;
        }
        map.retain(|_, c| c.abs() >= COEFF_PRUNE);
        Self { n_vars, terms: map }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Maximum total degree over stored terms; the zero polynomial has
    /// degree 0 by convention.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// True when every stored term has the same total degree (the zero
    /// polynomial counts as homogeneous).
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(x)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.n_vars, self.terms.iter().map(|(m, c)| (m.clone(), c * s)))
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = Polynomial::constant(self.n_vars, 1.0);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.n_vars, "variable index out of range");
        Self::from_terms(
            self.n_vars,
            self.terms.iter().filter_map(|(m, &c)| {
                let e = m.exponents()[i];
                if e == 0 {
                    return None;
                }
                let mut exps = m.exponents().to_vec();
                exps[i] -= 1;
                Some((Monomial::new(exps), c * e as f64))
            }),
        )
    }

    /// The gradient vector (one partial per variable).
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.n_vars).map(|i| self.partial(i)).collect()
    }

    /// `y^target * p(x/y)` with the homogenization variable appended as the
    /// last variable. Fails when `target` is below the degree of `p`.
    pub fn homogenize(&self, target: u32) -> Result<Self, PolyError> {
        if target < self.degree() {
            return Err(PolyError::DegreeTooLow {
                target,
                actual: self.degree(),
            });
        }
        let n = self.n_vars + 1;
        Ok(Self::from_terms(
            n,
            self.terms.iter().map(|(m, &c)| {
                let mut exps = m.exponents().to_vec();
                exps.push(target - m.degree());
                (Monomial::new(exps), c)
            }),
        ))
    }

    /// Substitute 1 for the last variable and drop it.
    pub fn substitute_last_one(&self) -> Self {
        assert!(self.n_vars > 1, "cannot drop the only variable");
        let n = self.n_vars - 1;
        Self::from_terms(
            n,
            self.terms.iter().map(|(m, &c)| {
                let exps = m.exponents()[..n].to_vec();
                (Monomial::new(exps), c)
            }),
        )
    }

    /// The sum of all terms of maximal total degree.
    pub fn top_homogeneous_component(&self) -> Result<Self, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let d = self.degree();
        Ok(Self::from_terms(
            self.n_vars,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, &c)| (m.clone(), c)),
        ))
    }

    /// `p - (1/d) * sum_i x_i * dp/dx_i`, which vanishes identically for a
    /// homogeneous `p` of degree `d >= 1`.
    pub fn euler_residual(&self) -> Result<Self, PolyError> {
        if !self.is_homogeneous() || self.is_zero() || self.degree() == 0 {
            return Err(PolyError::NotHomogeneous);
        }
        let d = self.degree() as f64;
        let mut acc = self.clone();
        for i in 0..self.n_vars {
            let xi = Polynomial::var(self.n_vars, i);
            acc = &acc - &(&xi * &self.partial(i)).scale(1.0 / d);
        }
        Ok(acc)
    }

    /// Same polynomial viewed in a larger ambient space.
    pub fn extended(&self, n_vars: usize) -> Self {
        assert!(n_vars >= self.n_vars);
        Self::from_terms(
            n_vars,
            self.terms.iter().map(|(m, &c)| (m.extended(n_vars), c)),
        )
    }

    /// Compose with a linear map: returns `p(Ax)` where `rows[i]` holds the
    /// coefficients of the i-th image coordinate.
    pub fn compose_linear(&self, rows: &[Vec<f64>]) -> Result<Self, PolyError> {
        if rows.len() != self.n_vars || rows.iter().any(|r| r.len() != self.n_vars) {
            return Err(PolyError::VarMismatch {
                left: self.n_vars,
                right: rows.len(),
            });
        }
        let images: Vec<Polynomial> = rows
            .iter()
            .map(|r| {
                Self::from_terms(
                    self.n_vars,
                    r.iter()
                        .enumerate()
                        .map(|(j, &a)| (Monomial::var(self.n_vars, j), a)),
                )
            })
            .collect();
        let mut acc = Polynomial::zero(self.n_vars);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(self.n_vars, c);
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = &term * &images[i].powi(e);
                }
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// `p(x1 - 1, ..., xn - 1)`: substitute each variable by itself minus
    /// one.
    pub fn shift_all(&self) -> Self {
        let n = self.n_vars();
        let shifted_vars: Vec<Polynomial> = (0..n)
            .map(|i| &Polynomial::var(n, i) - &Polynomial::constant(n, 1.0))
            .collect();
        let mut acc = Polynomial::zero(n);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(n, c);
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = &term * &shifted_vars[i].powi(e);
                }
            }
            acc = &acc + &term;
        }
        acc
    }

    /// `(x1^2 + ... + xn^2)^e`, the standard positive-definite shift.
    pub fn sum_of_squares_power(n_vars: usize, e: u32) -> Self {
        let mut s = Polynomial::zero(n_vars);
        for i in 0..n_vars {
            let xi = Polynomial::var(n_vars, i);
            s = &s + &(&xi * &xi);
        }
        s.powi(e)
    }

    /// Largest relative coefficient deviation between two polynomials,
    /// `max_m |a_m - b_m| / max(1, |a|_inf, |b|_inf)`.
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.n_vars, other.n_vars, "variable count mismatch");
        let scale = 1.0_f64.max(self.max_abs_coeff()).max(other.max_abs_coeff());
        let mut worst = 0.0_f64;
        for (m, c) in &self.terms {
            worst = worst.max((c - other.coeff(m)).abs());
        }
        for (m, c) in &other.terms {
            worst = worst.max((c - self.coeff(m)).abs());
        }
        worst / scale
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars, "variable count mismatch");
        Polynomial::from_terms(
            self.n_vars,
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|(m, &c)| (m.clone(), c)),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars, "variable count mismatch");
        Polynomial::from_terms(
            self.n_vars,
            self.terms
                .iter()
                .map(|(m, &c)| (m.clone(), c))
                .chain(rhs.terms.iter().map(|(m, &c)| (m.clone(), -c))),
        )
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars, "variable count mismatch");
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                *map.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        map.retain(|_, c| c.abs() >= COEFF_PRUNE);
        Polynomial {
            n_vars: self.n_vars,
            terms: map,
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // print highest degree first, ties in graded-lex order
        let mut terms: Vec<(&Monomial, f64)> = self.terms().collect();
        terms.sort_by(|(ma, _), (mb, _)| mb.degree().cmp(&ma.degree()).then_with(|| ma.cmp(mb)));
        for (idx, (m, c)) in terms.iter().enumerate() {
            let mag = c.abs();
            if idx == 0 {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else if *c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_unit() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        crate::poly::parse(s).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let lhs = &p("x1 + x2") * &p("x1 - x2");
        assert_eq!(lhs, p("x1^2 - x2^2"));
    }

    #[test]
    fn multiplicative_identity() {
        let q = p("3*x1^2*x2 - 0.5*x2^3 + 1");
        assert_eq!(&q * &Polynomial::constant(2, 1.0), q);
    }

    #[test]
    fn binomial_square() {
        let q = p("x1^2 + x2^2");
        assert_eq!(q.powi(2), p("x1^4 + 2*x1^2*x2^2 + x2^4"));
    }

    #[test]
    fn product_degree_adds() {
        let a = p("x1^3 + x2");
        let b = p("x1^2*x2^2 - 2");
        assert_eq!((&a * &b).degree(), a.degree() + b.degree());
    }

    #[test]
    fn gradient_examples() {
        let q = p("x1^2 + x2^2");
        let g = q.gradient();
        assert_eq!(g[0], crate::poly::parse_in("2*x1", 2).unwrap());
        assert_eq!(g[1], p("2*x2"));

        let c = Polynomial::constant(3, 5.0);
        assert!(c.gradient().iter().all(Polynomial::is_zero));

        let motzkin = p("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1");
        let g = motzkin.gradient();
        assert_eq!(g[0], p("4*x1^3*x2^2 + 2*x1*x2^4 - 6*x1*x2^2"));
        assert_eq!(g[1], p("2*x1^4*x2 + 4*x1^2*x2^3 - 6*x1^2*x2"));
    }

    #[test]
    fn homogenize_examples() {
        let q = p("x1^2 + 1");
        let h = q.homogenize(2).unwrap();
        assert_eq!(h, crate::poly::parse_in("x1^2 + x2^2", 2).unwrap());

        let motzkin = p("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1");
        let h = motzkin.homogenize(6).unwrap();
        let expect =
            crate::poly::parse_in("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2*x3^2 + x3^6", 3).unwrap();
        assert_eq!(h, expect);
        assert_eq!(h.substitute_last_one(), motzkin);

        // already homogeneous: the new variable is absent
        let hom = p("x1^2*x2 + x2^3");
        let h = hom.homogenize(3).unwrap();
        assert!(h.terms().all(|(m, _)| m.exponents()[2] == 0));

        assert!(matches!(
            p("x1^3").homogenize(2),
            Err(PolyError::DegreeTooLow { .. })
        ));
    }

    #[test]
    fn top_homogeneous_component_examples() {
        assert_eq!(
            p("x1^4 + x1^2 + 1").top_homogeneous_component().unwrap(),
            p("x1^4")
        );
        let motzkin = p("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1");
        assert_eq!(
            motzkin.top_homogeneous_component().unwrap(),
            p("x1^4*x2^2 + x1^2*x2^4")
        );
        let hom = p("x1^3*x2 - x2^4");
        assert_eq!(hom.top_homogeneous_component().unwrap(), hom);
        assert!(Polynomial::zero(2).top_homogeneous_component().is_err());
    }

    #[test]
    fn euler_residual_examples() {
        assert!(p("x1^2 + x2^2").euler_residual().unwrap().is_zero());
        assert!(p("x1^3*x2").euler_residual().unwrap().is_zero());
        assert!(p("x1^2 + x2").euler_residual().is_err());
    }

    #[test]
    fn compose_linear_quarter_turn() {
        // x1^4 under (x1, x2) -> (x2, -x1)
        let q = crate::poly::parse_in("x1^4", 2).unwrap();
        let rows = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        assert_eq!(q.compose_linear(&rows).unwrap(), p("x2^4"));
    }

    #[test]
    fn zero_degree_convention() {
        assert_eq!(Polynomial::zero(2).degree(), 0);
        assert!((&p("x1") - &p("x1")).is_zero());
    }
}

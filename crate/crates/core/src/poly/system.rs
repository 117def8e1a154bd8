use nalgebra::DMatrix;

use super::polynomial::Polynomial;
use super::PolyError;

/// A polynomial vector field: one component per state variable.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorField {
    n_vars: usize,
    components: Vec<Polynomial>,
}

impl VectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let n_vars = components.len();
        if n_vars == 0 {
            return Err(PolyError::EmptySystem);
        }
        for c in &components {
            if c.n_vars() != n_vars {
                return Err(PolyError::VarMismatch {
                    left: n_vars,
                    right: c.n_vars(),
                });
            }
        }
        Ok(Self { n_vars, components })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap()
    }

    /// True when every component is homogeneous and all nonzero components
    /// share one degree.
    pub fn is_homogeneous(&self) -> bool {
        if !self.components.iter().all(Polynomial::is_homogeneous) {
            return false;
        }
        let mut degs = self
            .components
            .iter()
            .filter(|c| !c.is_zero())
            .map(Polynomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// True when the origin is an equilibrium (no component has a constant
    /// term).
    pub fn fixes_origin(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.coeff(&super::Monomial::unit(self.n_vars)) == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

/// Derivative of `v` along the flow of `f`: `sum_i dv/dx_i * f_i`.
///
/// For homogeneous `v` of degree `m` and homogeneous `f` of degree `d` the
/// result is homogeneous of degree `m + d - 1`.
pub fn lie_derivative(v: &Polynomial, f: &VectorField) -> Result<Polynomial, PolyError> {
    if v.n_vars() != f.n_vars() {
        return Err(PolyError::VarMismatch {
            left: v.n_vars(),
            right: f.n_vars(),
        });
    }
    let mut acc = Polynomial::zero(v.n_vars());
    for (i, fi) in f.components().iter().enumerate() {
        acc = &acc + &(&v.partial(i) * fi);
    }
    Ok(acc)
}

/// A linear system given by a square matrix, usable in continuous time
/// (`dx/dt = Ax`) or discrete time (`x+ = Ax`).
#[derive(Clone, PartialEq, Debug)]
pub struct LinearSystem {
    rows: Vec<Vec<f64>>,
}

impl LinearSystem {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, PolyError> {
        let n = rows.len();
        if n == 0 {
            return Err(PolyError::EmptySystem);
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(PolyError::NotSquare);
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        let mut rows = vec![vec![0.0; n]; n];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.rows[i][j])
    }

    /// The degree-1 homogeneous vector field with components `(Ax)_i`.
    pub fn to_vector_field(&self) -> VectorField {
        let n = self.dim();
        let components = self
            .rows
            .iter()
            .map(|r| {
                Polynomial::from_terms(
                    n,
                    r.iter()
                        .enumerate()
                        .map(|(j, &a)| (super::Monomial::var(n, j), a)),
                )
            })
            .collect();
        VectorField::new(components).unwrap()
    }
}

/// `v(x) - v(Ax)`, the one-step decrease of `v` along the discrete-time
/// system `x+ = Ax`.
pub fn discrete_difference(v: &Polynomial, a: &LinearSystem) -> Result<Polynomial, PolyError> {
    if v.n_vars() != a.dim() {
        return Err(PolyError::VarMismatch {
            left: v.n_vars(),
            right: a.dim(),
        });
    }
    let composed = v.compose_linear(a.rows())?;
    Ok(v - &composed)
}

/// One mode of a switched system.
#[derive(Clone, PartialEq, Debug)]
pub enum SwitchedMode {
    Linear(LinearSystem),
    Polynomial(VectorField),
}

impl SwitchedMode {
    pub fn n_vars(&self) -> usize {
        match self {
            SwitchedMode::Linear(a) => a.dim(),
            SwitchedMode::Polynomial(f) => f.n_vars(),
        }
    }

    pub fn as_vector_field(&self) -> VectorField {
        match self {
            SwitchedMode::Linear(a) => a.to_vector_field(),
            SwitchedMode::Polynomial(f) => f.clone(),
        }
    }
}

/// A finite family of modes under arbitrary switching.
#[derive(Clone, PartialEq, Debug)]
pub struct SwitchedSystem {
    n_vars: usize,
    modes: Vec<SwitchedMode>,
}

impl SwitchedSystem {
    pub fn new(modes: Vec<SwitchedMode>) -> Result<Self, PolyError> {
        let first = modes.first().ok_or(PolyError::EmptySystem)?;
        let n_vars = first.n_vars();
        for m in &modes {
            if m.n_vars() != n_vars {
                return Err(PolyError::VarMismatch {
                    left: n_vars,
                    right: m.n_vars(),
                });
            }
        }
        Ok(Self { n_vars, modes })
    }

    pub fn from_matrices(mats: Vec<LinearSystem>) -> Result<Self, PolyError> {
        Self::new(mats.into_iter().map(SwitchedMode::Linear).collect())
    }

    pub fn from_fields(fields: Vec<VectorField>) -> Result<Self, PolyError> {
        Self::new(fields.into_iter().map(SwitchedMode::Polynomial).collect())
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn modes(&self) -> &[SwitchedMode] {
        &self.modes
    }

    pub fn all_linear(&self) -> bool {
        self.modes
            .iter()
            .all(|m| matches!(m, SwitchedMode::Linear(_)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse, parse_in};

    #[test]
    fn lie_derivative_scalar_decay() {
        // V = x^2, f = (-x)  =>  Vdot = -2x^2
        let v = parse("x1^2").unwrap();
        let f = VectorField::new(vec![parse("-x1").unwrap()]).unwrap();
        assert_eq!(lie_derivative(&v, &f).unwrap(), parse("-2*x1^2").unwrap());
    }

    #[test]
    fn lie_derivative_degree_bookkeeping() {
        // homogeneous deg-4 v along homogeneous deg-3 f gives deg 6
        let v = parse("x1^4 + x2^4").unwrap();
        let f = VectorField::new(vec![
            parse_in("-x1^3", 2).unwrap(),
            parse_in("-x2^3", 2).unwrap(),
        ])
        .unwrap();
        let vdot = lie_derivative(&v, &f).unwrap();
        assert!(vdot.is_homogeneous());
        assert_eq!(vdot.degree(), 6);
    }

    #[test]
    fn discrete_difference_examples() {
        let v = parse("x1^2 + x2^2").unwrap();
        let half = LinearSystem::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(
            discrete_difference(&v, &half).unwrap(),
            parse("0.75*x1^2 + 0.75*x2^2").unwrap()
        );

        let any = parse("x1^3 - 2*x1*x2 + 5").unwrap();
        let id = LinearSystem::identity(2);
        assert!(discrete_difference(&any, &id).unwrap().is_zero());

        let quarter_turn = LinearSystem::new(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(
            discrete_difference(&parse_in("x1^4", 2).unwrap(), &quarter_turn).unwrap(),
            parse("x1^4 - x2^4").unwrap()
        );
    }

    #[test]
    fn homogeneity_detection() {
        let f = VectorField::new(vec![
            parse("x1^3 + x1*x2^2").unwrap(),
            parse("-x2^3").unwrap(),
        ])
        .unwrap();
        assert!(f.is_homogeneous());
        let g = VectorField::new(vec![
            parse_in("x1^2 + x1", 2).unwrap(),
            parse_in("x2", 2).unwrap(),
        ])
        .unwrap();
        assert!(!g.is_homogeneous());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let v = parse("x1^2").unwrap();
        let f = VectorField::new(vec![
            parse_in("x1", 2).unwrap(),
            parse_in("x2", 2).unwrap(),
        ])
        .unwrap();
        assert!(lie_derivative(&v, &f).is_err());
        assert!(LinearSystem::new(vec![vec![1.0, 0.0]]).is_err());
    }
}

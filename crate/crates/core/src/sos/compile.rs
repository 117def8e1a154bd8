use std::collections::BTreeMap;

use crate::poly::{Monomial, Polynomial};
use crate::sdp::problem::{Equality, FreeTerm, GramTerm, SdpProblem};

use super::basis::monomial_basis;
use super::template::{AffineTarget, CoeffRef, PolynomialTemplate};
use super::CompileError;

/// One sum-of-squares requirement: the target expression must equal
/// `z' Q z` for some positive semidefinite `Q` over the Gram basis `z`.
#[derive(Clone, PartialEq, Debug)]
pub struct SosConstraint {
    pub label: String,
    pub target: AffineTarget,
    pub gram_basis: Vec<Monomial>,
}

impl SosConstraint {
    /// Derive the Gram basis from the target shape: monomials of degree at
    /// most half the degree bound, or exactly half when the target is
    /// homogeneous of even degree. Structurally zero targets get an empty
    /// basis (trivially feasible).
    pub fn new(label: impl Into<String>, target: AffineTarget) -> Self {
        let gram_basis = if target.is_structurally_zero() {
            Vec::new()
        } else {
            let degree = target.degree_bound();
            let homogeneous = target.is_homogeneous() && degree % 2 == 0;
            monomial_basis(target.n_vars(), degree / 2, homogeneous)
        };
        Self {
            label: label.into(),
            target,
            gram_basis,
        }
    }

    pub fn with_basis(
        label: impl Into<String>,
        target: AffineTarget,
        gram_basis: Vec<Monomial>,
    ) -> Self {
        Self {
            label: label.into(),
            target,
            gram_basis,
        }
    }

    /// Exponent `e` of the positive-definiteness shift
    /// `eps * (x1^2+...+xn^2)^e` for this constraint, if one applies.
    ///
    /// Homogeneous targets of degree `2e` take the only homogeneous choice.
    /// Inhomogeneous targets take `e = 1`: a lower bound by `eps |x|^2`
    /// certifies positive definiteness and radial unboundedness without
    /// dictating the growth rate at infinity, which the target's top
    /// component may not dominate in every direction.
    pub fn shift_exponent(&self) -> Option<u32> {
        let half = self.gram_basis.iter().map(Monomial::degree).max()?;
        if half == 0 {
            return None;
        }
        if self.target.is_homogeneous() {
            Some(half)
        } else {
            Some(1)
        }
    }
}

/// How the trivial all-zero solution is excluded (and scales pinned down)
/// when compiling a program.
#[derive(Clone, PartialEq, Debug)]
pub enum NormalizationRule {
    /// No extra equalities; plain feasibility.
    None,
    /// Pin one template coefficient to 1.
    UnitLeading(CoeffRef),
    /// Subtract `eps * (x1^2 + ... + xn^2)^(d/2)` from every constraint
    /// target, so feasibility certifies strict positive definiteness.
    EpsilonPd { eps: f64 },
    /// Fix the trace of the first Gram block to 1.
    TraceOne,
}

/// Translate a sum-of-squares program into a block-diagonal semidefinite
/// feasibility problem: one PSD block per constraint and one linear equality
/// per distinct monomial of each constraint.
pub fn compile(
    constraints: &[SosConstraint],
    templates: &[PolynomialTemplate],
    normalization: &NormalizationRule,
) -> Result<SdpProblem, CompileError> {
    if constraints.is_empty() {
        return Err(CompileError::EmptyProgram);
    }

    // global layout of template coefficients
    let mut offsets = Vec::with_capacity(templates.len());
    let mut n_free = 0usize;
    for t in templates {
        offsets.push(n_free);
        n_free += t.len();
    }
    let var_id = |r: CoeffRef| -> Result<usize, CompileError> {
        let t = templates
            .get(r.template)
            .ok_or_else(|| CompileError::BadTemplate(format!("template {} missing", r.template)))?;
        if r.index >= t.len() {
            return Err(CompileError::BadTemplate(format!(
                "coefficient {} out of range for template {}",
                r.index, r.template
            )));
        }
        Ok(offsets[r.template] + r.index)
    };

    let mut problem = SdpProblem::new(
        constraints.iter().map(|c| c.gram_basis.len()).collect(),
        n_free,
    );
    problem.block_labels = constraints.iter().map(|c| c.label.clone()).collect();

    for (b, constraint) in constraints.iter().enumerate() {
        let target = match (normalization, constraint.shift_exponent()) {
            (NormalizationRule::EpsilonPd { eps }, Some(e)) => {
                let shift =
                    Polynomial::sum_of_squares_power(constraint.target.n_vars(), e).scale(-eps);
                constraint.target.add_fixed(&shift)
            }
            _ => constraint.target.clone(),
        };

        // pair map: monomial -> Gram entries whose product equals it
        let z = &constraint.gram_basis;
        let mut rows: BTreeMap<Monomial, Equality> = BTreeMap::new();
        for i in 0..z.len() {
            for j in i..z.len() {
                let m = z[i].mul(&z[j]);
                rows.entry(m).or_default().gram.push(GramTerm {
                    block: b,
                    row: i,
                    col: j,
                    coeff: 1.0,
                });
            }
        }
        // fold in the target support
        for (m, _) in target.fixed_part().terms() {
            rows.entry(m.clone()).or_default();
        }
        for (_, w) in target.linear_part() {
            for (m, _) in w.terms() {
                rows.entry(m.clone()).or_default();
            }
        }

        for (m, mut eq) in rows {
            let rhs = target.fixed_part().coeff(&m);
            for (r, w) in target.linear_part() {
                let c = w.coeff(&m);
                if c != 0.0 {
                    eq.free.push(FreeTerm {
                        var: var_id(*r)?,
                        coeff: -c,
                    });
                }
            }
            if eq.gram.is_empty() && eq.free.is_empty() {
                if rhs != 0.0 {
                    return Err(CompileError::MonomialOutsideSpan {
                        constraint: constraint.label.clone(),
                        monomial: m.to_string(),
                    });
                }
                continue;
            }
            problem.push_equality(eq, rhs);
        }
    }

    match normalization {
        NormalizationRule::UnitLeading(r) => {
            let eq = Equality {
                gram: Vec::new(),
                free: vec![FreeTerm {
                    var: var_id(*r)?,
                    coeff: 1.0,
                }],
            };
            problem.push_equality(eq, 1.0);
        }
        NormalizationRule::TraceOne => {
            let dim = problem.blocks[0];
            let eq = Equality {
                gram: (0..dim)
                    .map(|i| GramTerm {
                        block: 0,
                        row: i,
                        col: i,
                        coeff: 1.0,
                    })
                    .collect(),
                free: Vec::new(),
            };
            problem.push_equality(eq, 1.0);
        }
        NormalizationRule::None | NormalizationRule::EpsilonPd { .. } => {}
    }

    debug_assert!(problem.validate().is_ok());
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;
    use crate::sos::basis::monomial_basis;

    fn fixed_constraint(p: &str, homogeneous_hint: Option<u32>) -> SosConstraint {
        let poly = parse(p).unwrap();
        match homogeneous_hint {
            Some(half) => SosConstraint::with_basis(
                "t",
                AffineTarget::fixed(poly.clone()),
                monomial_basis(poly.n_vars(), half, true),
            ),
            None => SosConstraint::new("t", AffineTarget::fixed(poly)),
        }
    }

    #[test]
    fn perfect_square_compiles_to_three_equalities() {
        let c = fixed_constraint("x1^2 + 2*x1*x2 + x2^2", Some(1));
        let p = compile(&[c], &[], &NormalizationRule::None).unwrap();
        assert_eq!(p.blocks, vec![2]);
        assert_eq!(p.n_equalities(), 3);
        assert_eq!(p.n_free, 0);
    }

    #[test]
    fn motzkin_full_basis_counts() {
        let motzkin = parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1").unwrap();
        let c = SosConstraint::with_basis(
            "motzkin",
            AffineTarget::fixed(motzkin),
            monomial_basis(2, 3, false),
        );
        let p = compile(&[c], &[], &NormalizationRule::None).unwrap();
        assert_eq!(p.blocks, vec![10]);
        // distinct monomials of degree <= 6 in 2 vars
        assert_eq!(p.n_equalities(), 28);
    }

    #[test]
    fn degenerate_zero_target_is_empty_block() {
        let c = SosConstraint::new("zero", AffineTarget::fixed(Polynomial::zero(2)));
        let p = compile(&[c], &[], &NormalizationRule::None).unwrap();
        assert_eq!(p.blocks, vec![0]);
        assert_eq!(p.n_equalities(), 0);
    }

    #[test]
    fn outside_span_reports_monomial() {
        // odd-degree monomial with an exact-degree basis cannot be reached
        let c = SosConstraint::with_basis(
            "bad",
            AffineTarget::fixed(parse("x1^3 + x1^2").unwrap()),
            monomial_basis(1, 1, true),
        );
        let err = compile(&[c], &[], &NormalizationRule::None).unwrap_err();
        match err {
            CompileError::MonomialOutsideSpan { monomial, .. } => {
                assert_eq!(monomial, "x1^3");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_program_rejected() {
        assert!(matches!(
            compile(&[], &[], &NormalizationRule::None),
            Err(CompileError::EmptyProgram)
        ));
    }

    #[test]
    fn template_equalities_carry_free_terms() {
        // V sos for a homogeneous quadratic template in 1 var
        let t = PolynomialTemplate::homogeneous(1, 2);
        let target = AffineTarget::from_template(0, &t, |p| p.clone());
        let c = SosConstraint::new("v", target);
        let p = compile(&[c], &[t], &NormalizationRule::None).unwrap();
        assert_eq!(p.blocks, vec![1]);
        assert_eq!(p.n_free, 1);
        assert_eq!(p.n_equalities(), 1);
        assert_eq!(p.equalities[0].free.len(), 1);
        assert_eq!(p.equalities[0].free[0].coeff, -1.0);
    }

    #[test]
    fn compilation_is_deterministic() {
        let motzkin = parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1").unwrap();
        let build = || {
            let c = SosConstraint::new("m", AffineTarget::fixed(motzkin.clone()));
            compile(&[c], &[], &NormalizationRule::None).unwrap()
        };
        let a = build();
        let b = build();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn epsilon_shift_lands_in_fixed_rhs() {
        let t = PolynomialTemplate::homogeneous(2, 2);
        let target = AffineTarget::from_template(0, &t, |p| p.clone());
        let c = SosConstraint::new("v", target);
        let p = compile(&[c], &[t], &NormalizationRule::EpsilonPd { eps: 1e-4 }).unwrap();
        // rhs of the x1^2 equality picks up -eps from the shift
        let idx = p
            .equalities
            .iter()
            .position(|eq| {
                eq.gram
                    .iter()
                    .any(|g| g.row == 0 && g.col == 0 && g.block == 0)
            })
            .unwrap();
        assert_eq!(p.rhs[idx], -1e-4);
    }
}

use nalgebra::DMatrix;

use crate::certify;
use crate::poly::{discrete_difference, lie_derivative, Polynomial, SwitchedMode, SwitchedSystem, VectorField};
use crate::sdp::{solve, SdpStatus, SolverSettings};
use crate::sos::{compile, AffineTarget, NormalizationRule, PolynomialTemplate, SosConstraint};

use super::certificate::{CertSystem, GramCertificate, LyapunovCertificate, SearchMode};
use super::SynthError;

/// Continuous-time derivative conditions or discrete-time difference
/// conditions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

/// Outcome of one Lyapunov search at a fixed degree.
#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(Box<LyapunovCertificate>),
    Infeasible { margin: f64 },
    Indeterminate { note: String },
}

impl SearchOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, SearchOutcome::Infeasible { .. })
    }

    pub fn certificate(self) -> Option<LyapunovCertificate> {
        match self {
            SearchOutcome::Found(c) => Some(*c),
            _ => None,
        }
    }
}

/// Options shared by the search entry points.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Positive-definiteness shift weight.
    pub eps: f64,
    pub solver: SolverSettings,
    /// Use a homogeneous candidate basis when the system is homogeneous.
    pub homogeneous_template: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            solver: SolverSettings::default(),
            homogeneous_template: true,
        }
    }
}

/// Search for a polynomial `v` of the given even degree making the chosen
/// condition on `v` and the decrease condition of every mode sums of
/// squares, each shifted by `eps * (x1^2+...+xn^2)^(d/2)` so feasibility
/// certifies strict positive definiteness.
pub fn find_lyapunov(
    f: &VectorField,
    degree: u32,
    mode: SearchMode,
    options: &SearchOptions,
) -> Result<SearchOutcome, SynthError> {
    if !f.fixes_origin() {
        return Err(SynthError::NotEquilibrium);
    }
    let system = SwitchedSystem::from_fields(vec![f.clone()]).expect("one mode");
    search(&system, degree, mode, TimeDomain::Continuous, options)
}

/// Search for one candidate certifying every mode of a switched system,
/// with derivative conditions in continuous time or difference conditions
/// (linear modes only) in discrete time.
pub fn find_common_lyapunov(
    system: &SwitchedSystem,
    degree: u32,
    time: TimeDomain,
    options: &SearchOptions,
) -> Result<SearchOutcome, SynthError> {
    if time == TimeDomain::Discrete && !system.all_linear() {
        return Err(SynthError::DiscreteNeedsLinear);
    }
    for m in system.modes() {
        if !m.as_vector_field().fixes_origin() {
            return Err(SynthError::NotEquilibrium);
        }
    }
    search(system, degree, SearchMode::VSos, time, options)
}

fn search(
    system: &SwitchedSystem,
    degree: u32,
    mode: SearchMode,
    time: TimeDomain,
    options: &SearchOptions,
) -> Result<SearchOutcome, SynthError> {
    if degree < 2 || degree % 2 == 1 {
        return Err(SynthError::BadDegree(degree));
    }
    let n = system.n_vars();
    let homogeneous_system = time == TimeDomain::Continuous
        && system
            .modes()
            .iter()
            .all(|m| m.as_vector_field().is_homogeneous());
    let template = if homogeneous_system && options.homogeneous_template {
        PolynomialTemplate::homogeneous(n, degree)
    } else {
        // no constant term, so v(0) = 0
        PolynomialTemplate::full(n, degree, false)
    };

    let mut constraints = Vec::new();
    match mode {
        SearchMode::VSos => {
            let target = AffineTarget::from_template(0, &template, |p| p.clone());
            constraints.push(SosConstraint::new("v-sos", target));
        }
        SearchMode::ThcSos => {
            let target = AffineTarget::from_template(0, &template, |p| {
                if !p.is_zero() && p.is_homogeneous() && p.degree() == degree {
                    p.clone()
                } else {
                    Polynomial::zero(n)
                }
            });
            constraints.push(SosConstraint::new("thc-sos", target));
        }
    }
    for (i, m) in system.modes().iter().enumerate() {
        let target = match (time, m) {
            (TimeDomain::Discrete, SwitchedMode::Linear(a)) => {
                AffineTarget::from_template(0, &template, |p| {
                    discrete_difference(p, a).expect("dimensions checked")
                })
            }
            (TimeDomain::Discrete, SwitchedMode::Polynomial(_)) => {
                return Err(SynthError::DiscreteNeedsLinear)
            }
            (TimeDomain::Continuous, m) => {
                let field = m.as_vector_field();
                AffineTarget::from_template(0, &template, |p| {
                    -&lie_derivative(p, &field).expect("dimensions checked")
                })
            }
        };
        constraints.push(SosConstraint::new(format!("decrease-{i}"), target));
    }

    let shifts: Vec<Option<(f64, u32)>> = constraints
        .iter()
        .map(|c| c.shift_exponent().map(|e| (options.eps, e)))
        .collect();
    let labels: Vec<String> = constraints.iter().map(|c| c.label.clone()).collect();
    let bases: Vec<_> = constraints.iter().map(|c| c.gram_basis.clone()).collect();

    let problem = compile(
        &constraints,
        std::slice::from_ref(&template),
        &NormalizationRule::EpsilonPd { eps: options.eps },
    )?;
    let solution = solve(&problem, &options.solver)?;

    let cert_system = match time {
        TimeDomain::Continuous => CertSystem::ContinuousModes(
            system.modes().iter().map(|m| m.as_vector_field()).collect(),
        ),
        TimeDomain::Discrete => CertSystem::DiscreteModes(
            system
                .modes()
                .iter()
                .map(|m| match m {
                    SwitchedMode::Linear(a) => a.clone(),
                    SwitchedMode::Polynomial(_) => unreachable!("checked above"),
                })
                .collect(),
        ),
    };

    // A boundary-feasible program (the candidate exists but every valid
    // Gram for some condition is singular) leaves the margin pinned near
    // zero. Fix the candidate from the solver's point, polish each Gram
    // onto its exact target, and let the certifier judge the result.
    let build = |v_raw: Polynomial, qs: &[DMatrix<f64>], polish: bool| -> Option<LyapunovCertificate> {
        let s = v_raw.max_abs_coeff().max(1.0);
        let v = v_raw.scale(1.0 / s);
        let coeff_of = |r: crate::sos::CoeffRef| -> f64 {
            debug_assert_eq!(r.template, 0);
            // recover the normalized coefficient from v directly
            v.coeff(&template.basis()[r.index])
        };
        let mut grams = Vec::with_capacity(labels.len());
        for (i, ((label, basis), shift)) in
            labels.iter().zip(&bases).zip(&shifts).enumerate()
        {
            let shift = shift.map(|(eps, e)| (eps / s, e));
            let raw = constraints[i].target.instantiate(&coeff_of);
            let target = match shift {
                Some((eps, e)) => {
                    &raw - &Polynomial::sum_of_squares_power(v.n_vars(), e).scale(eps)
                }
                None => raw,
            };
            let q0 = &qs[i] / s;
            let (matrix, margin, basis) = if polish {
                let (m, margin) = super::check::polish_gram(&target, basis, &q0, &options.solver)?;
                let (m, b) = compact_gram(m, basis);
                (m, margin, b)
            } else {
                let (m, b) = compact_gram(q0, basis);
                let margin = crate::sdp::min_eigenvalue(&m).unwrap_or(0.0);
                (m, margin, b)
            };
            grams.push(GramCertificate {
                label: label.clone(),
                basis,
                matrix,
                margin,
                shift,
            });
        }
        Some(LyapunovCertificate {
            v,
            mode,
            eps: options.eps / s,
            grams,
            system: cert_system.clone(),
        })
    };

    let finish = |cert: Option<LyapunovCertificate>,
                  fallback: SearchOutcome|
     -> Result<SearchOutcome, SynthError> {
        match cert {
            None => Ok(fallback),
            Some(cert) => {
                let report = certify::verify_lyapunov(&cert, &cert.system)?;
                if report.verdict.is_verified() {
                    Ok(SearchOutcome::Found(Box::new(cert)))
                } else {
                    Ok(match fallback {
                        SearchOutcome::Indeterminate { note } => SearchOutcome::Indeterminate {
                            note: format!(
                                "{note}; a candidate was recovered but verification rejected \
                                 it: {}",
                                report.verdict.reasons().join("; ")
                            ),
                        },
                        other => other,
                    })
                }
            }
        }
    };

    match solution.status {
        SdpStatus::Infeasible { margin } => Ok(SearchOutcome::Infeasible { margin }),
        SdpStatus::Indeterminate { note } => {
            let v_raw = template.instantiate(&solution.free_values);
            if v_raw.is_zero() {
                return Ok(SearchOutcome::Indeterminate { note });
            }
            let cert = build(v_raw, &solution.block_values, true);
            finish(cert, SearchOutcome::Indeterminate { note })
        }
        SdpStatus::Feasible { .. } => {
            let v_raw = template.instantiate(&solution.free_values);
            let direct = build(v_raw.clone(), &solution.block_values, false);
            match finish(direct, SearchOutcome::Indeterminate { note: String::new() })? {
                SearchOutcome::Found(c) => Ok(SearchOutcome::Found(c)),
                _ => {
                    // strict solution with loose residuals: polish it
                    let cert = build(v_raw, &solution.block_values, true);
                    finish(
                        cert,
                        SearchOutcome::Indeterminate {
                            note: "solver reported feasible but no certificate survived \
                                   verification"
                                .into(),
                        },
                    )
                }
            }
        }
    }
}

/// Run [`find_lyapunov`] over even degrees `2, 4, ..., degree_max`.
pub fn sweep_lyapunov(
    f: &VectorField,
    degree_max: u32,
    mode: SearchMode,
    options: &SearchOptions,
) -> Result<Vec<(u32, SearchOutcome)>, SynthError> {
    let mut out = Vec::new();
    let mut d = 2;
    while d <= degree_max {
        out.push((d, find_lyapunov(f, d, mode, options)?));
        d += 2;
    }
    Ok(out)
}

/// Search for a candidate subject only to one mode's decrease condition
/// (plus the shift normalization), with no sum-of-squares requirement on
/// the candidate itself.
pub fn find_decrease_only(
    mode: &SwitchedMode,
    degree: u32,
    time: TimeDomain,
    options: &SearchOptions,
) -> Result<DecreaseOutcome, SynthError> {
    if degree < 2 || degree % 2 == 1 {
        return Err(SynthError::BadDegree(degree));
    }
    if time == TimeDomain::Discrete && !matches!(mode, SwitchedMode::Linear(_)) {
        return Err(SynthError::DiscreteNeedsLinear);
    }
    let n = mode.n_vars();
    let template = PolynomialTemplate::full(n, degree, false);
    let target = match (time, mode) {
        (TimeDomain::Discrete, SwitchedMode::Linear(a)) => {
            AffineTarget::from_template(0, &template, |p| {
                discrete_difference(p, a).expect("dimensions checked")
            })
        }
        (TimeDomain::Continuous, m) => {
            let field = m.as_vector_field();
            AffineTarget::from_template(0, &template, |p| {
                -&lie_derivative(p, &field).expect("dimensions checked")
            })
        }
        _ => unreachable!("rejected above"),
    };
    let constraint = SosConstraint::new("decrease", target);
    let problem = compile(
        &[constraint],
        std::slice::from_ref(&template),
        &NormalizationRule::EpsilonPd { eps: options.eps },
    )?;
    let solution = solve(&problem, &options.solver)?;
    Ok(match solution.status {
        SdpStatus::Feasible { .. } => {
            let v = template.instantiate(&solution.free_values);
            let s = v.max_abs_coeff().max(1.0);
            DecreaseOutcome::Found { v: v.scale(1.0 / s) }
        }
        SdpStatus::Infeasible { margin } => DecreaseOutcome::Infeasible { margin },
        SdpStatus::Indeterminate { note } => DecreaseOutcome::Indeterminate { note },
    })
}

/// Outcome of a decrease-only search.
#[derive(Clone, Debug)]
pub enum DecreaseOutcome {
    Found { v: Polynomial },
    Infeasible { margin: f64 },
    Indeterminate { note: String },
}

/// Drop basis rows whose matrix row is identically zero (structurally
/// eliminated directions); they carry no weight in the decomposition.
fn compact_gram(
    matrix: DMatrix<f64>,
    basis: &[crate::poly::Monomial],
) -> (DMatrix<f64>, Vec<crate::poly::Monomial>) {
    let keep: Vec<usize> = (0..matrix.nrows())
        .filter(|&i| (0..matrix.ncols()).any(|j| matrix[(i, j)] != 0.0))
        .collect();
    if keep.len() == matrix.nrows() {
        return (matrix, basis.to_vec());
    }
    let mut out = DMatrix::zeros(keep.len(), keep.len());
    for (ri, &r) in keep.iter().enumerate() {
        for (ci, &c) in keep.iter().enumerate() {
            out[(ri, ci)] = matrix[(r, c)];
        }
    }
    let kept_basis = keep.iter().map(|&i| basis[i].clone()).collect();
    (out, kept_basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    #[test]
    fn scalar_decay_admits_quadratic() {
        let f = VectorField::new(vec![parse("-x1").unwrap()]).unwrap();
        let out = find_lyapunov(&f, 2, SearchMode::VSos, &SearchOptions::default()).unwrap();
        let cert = out.certificate().expect("x^2 certifies -x");
        // homogeneous template in one variable: v = c * x^2, normalized
        assert_eq!(cert.v, parse("x1^2").unwrap());
    }

    #[test]
    fn equilibrium_precondition_enforced() {
        let f = VectorField::new(vec![parse("-x1 + 1").unwrap()]).unwrap();
        assert!(matches!(
            find_lyapunov(&f, 2, SearchMode::VSos, &SearchOptions::default()),
            Err(SynthError::NotEquilibrium)
        ));
    }

    #[test]
    fn odd_degree_rejected() {
        let f = VectorField::new(vec![parse("-x1").unwrap()]).unwrap();
        assert!(matches!(
            find_lyapunov(&f, 3, SearchMode::VSos, &SearchOptions::default()),
            Err(SynthError::BadDegree(3))
        ));
    }

    #[test]
    fn negative_identity_switched_mode() {
        let a = crate::poly::LinearSystem::new(vec![vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let sys = SwitchedSystem::from_matrices(vec![a]).unwrap();
        let out = find_common_lyapunov(&sys, 2, TimeDomain::Continuous, &SearchOptions::default())
            .unwrap();
        let cert = out.certificate().expect("-I is stable");
        // the sum of squares of the variables, up to scale
        let expected = parse("x1^2 + x2^2").unwrap();
        assert!(cert.v.coeff_distance(&expected) < 1e-5, "v = {}", cert.v);
    }
}

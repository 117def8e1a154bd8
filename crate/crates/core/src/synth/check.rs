use nalgebra::DMatrix;

use crate::poly::{Monomial, Polynomial};
use crate::sdp::{min_eigenvalue_unchecked, solve, SdpStatus, SolverSettings};
use crate::sos::{compile, monomial_basis, AffineTarget, NormalizationRule, SosConstraint};

use super::certificate::GramCertificate;
use super::SynthError;

/// Outcome of a sum-of-squares membership test.
#[derive(Clone, PartialEq, Debug)]
pub enum SosCheck {
    Feasible(GramCertificate),
    Infeasible { margin: f64 },
    Indeterminate { note: String },
}

impl SosCheck {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SosCheck::Feasible(_))
    }

    pub fn certificate(self) -> Option<GramCertificate> {
        match self {
            SosCheck::Feasible(g) => Some(g),
            _ => None,
        }
    }
}

/// Decide whether a fixed polynomial is a sum of squares.
///
/// Polynomials of odd degree are structurally not sos. Boundary members of
/// the cone (rank-deficient Gram matrices: perfect squares, products with
/// real zeros) are recovered by polishing the solver's point onto the
/// feasible face; the resulting matrix is checked independently, so a
/// Feasible answer never rests on solver internals.
pub fn check_sos(
    p: &Polynomial,
    homogeneous: bool,
    settings: &SolverSettings,
) -> Result<SosCheck, SynthError> {
    if p.is_zero() {
        return Ok(SosCheck::Feasible(GramCertificate {
            label: "sos".into(),
            basis: Vec::new(),
            matrix: DMatrix::zeros(0, 0),
            margin: 0.0,
            shift: None,
        }));
    }
    if p.degree() % 2 == 1 {
        return Ok(SosCheck::Infeasible {
            margin: f64::NEG_INFINITY,
        });
    }
    if homogeneous && !p.is_homogeneous() {
        return Err(SynthError::NotHomogeneous(
            "homogeneous Gram basis requested for an inhomogeneous polynomial".into(),
        ));
    }

    let basis = monomial_basis(p.n_vars(), p.degree() / 2, homogeneous);
    let constraint = SosConstraint::with_basis("sos", AffineTarget::fixed(p.clone()), basis);
    let gram_basis = constraint.gram_basis.clone();
    let problem = compile(&[constraint], &[], &NormalizationRule::None)?;
    let solution = solve(&problem, settings)?;

    match solution.status {
        SdpStatus::Infeasible { margin } => Ok(SosCheck::Infeasible { margin }),
        SdpStatus::Feasible { .. } | SdpStatus::Indeterminate { .. } => {
            let q = &solution.block_values[0];
            match polish_gram(p, &gram_basis, q, settings) {
                Some((matrix, margin)) => Ok(SosCheck::Feasible(GramCertificate {
                    label: "sos".into(),
                    basis: gram_basis,
                    matrix,
                    margin,
                    shift: None,
                })),
                None => match solution.status {
                    SdpStatus::Indeterminate { note } => Ok(SosCheck::Indeterminate { note }),
                    _ => Ok(SosCheck::Indeterminate {
                        note: "solver reported feasible but no valid Gram matrix survived \
                               polishing"
                            .into(),
                    }),
                },
            }
        }
    }
}

/// Polish a near-feasible Gram matrix onto the set of exact positive
/// semidefinite representations of `p`: alternate an exact projection onto
/// the equality set (its rows touch disjoint entries, so one sweep is
/// exact) with a least-squares Newton correction on the current eigenvalue
/// face, which restores the equalities without leaving the cone's
/// neighborhood. Returns the matrix and its margin (smallest kept
/// eigenvalue) once the final clipped matrix reconstructs `p` within
/// certificate tolerance.
pub(crate) fn polish_gram(
    p: &Polynomial,
    basis: &[Monomial],
    q0: &DMatrix<f64>,
    settings: &SolverSettings,
) -> Option<(DMatrix<f64>, f64)> {
    let n = basis.len();
    if n == 0 {
        return p.is_zero().then(|| (DMatrix::zeros(0, 0), 0.0));
    }
    let scale = p.max_abs_coeff().max(1.0);
    let mut q = q0.clone();

    // pair bookkeeping: monomial -> Gram entries (i <= j) with that product
    let mut rows: std::collections::BTreeMap<Monomial, Vec<(usize, usize)>> = Default::default();
    for i in 0..n {
        for j in i..n {
            rows.entry(basis[i].mul(&basis[j])).or_default().push((i, j));
        }
    }
    for (m, _) in p.terms() {
        if !rows.contains_key(m) {
            // coefficient outside the basis span: not representable
            return None;
        }
    }
    let mons: Vec<&Monomial> = rows.keys().collect();

    let affine_project = |q: &mut DMatrix<f64>| {
        for (m, pairs) in &rows {
            let mut val = 0.0;
            let mut norm = 0.0;
            for &(i, j) in pairs {
                let w = if i == j { 1.0 } else { 2.0 };
                val += w * q[(i, j)];
                norm += w;
            }
            let step = (p.coeff(m) - val) / norm;
            for &(i, j) in pairs {
                q[(i, j)] += step;
                if i != j {
                    q[(j, i)] += step;
                }
            }
        }
    };

    let finish = |q: &DMatrix<f64>| -> Option<(DMatrix<f64>, f64)> {
        let eig = q.clone().symmetric_eigen();
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let q_final =
            &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let q_final = (&q_final + &q_final.transpose()) * 0.5;
        let mut worst = 0.0_f64;
        for (m, pairs) in &rows {
            let mut val = 0.0;
            for &(i, j) in pairs {
                let w = if i == j { 1.0 } else { 2.0 };
                val += w * q_final[(i, j)];
            }
            worst = worst.max((p.coeff(m) - val).abs());
        }
        if worst > 1e-7 * scale {
            return None;
        }
        let lam_max = eig.eigenvalues.amax();
        let face_margin = eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&v| v > lam_max * 1e-12)
            .fold(f64::INFINITY, f64::min);
        Some((q_final, face_margin.max(0.0)))
    };

    let clip_psd = |m: &DMatrix<f64>| -> DMatrix<f64> {
        let eig = m.clone().symmetric_eigen();
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let out = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        (&out + &out.transpose()) * 0.5
    };

    // Full Newton step committed to the face of eigenvalues above
    // `tau * lam_max`: solve the equalities exactly over that face in the
    // least-squares sense. Returns the lifted matrix when the equalities
    // are actually attainable there.
    let ls_on_face = |eig: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>,
                      tau: f64|
     -> Option<DMatrix<f64>> {
        let lam_max = eig.eigenvalues.amax().max(1e-300);
        let keep: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i] > tau * lam_max)
            .collect();
        let r = keep.len();
        if r == 0 || r * (r + 1) / 2 > 2500 {
            return None;
        }
        let mut b = DMatrix::zeros(n, r);
        for (c, &i) in keep.iter().enumerate() {
            b.set_column(c, &eig.eigenvectors.column(i));
        }
        let y0 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            r,
            keep.iter().map(|&i| eig.eigenvalues[i]),
        ));
        let mut design = DMatrix::zeros(mons.len(), r * (r + 1) / 2);
        let mut resid = nalgebra::DVector::zeros(mons.len());
        for (row, m) in mons.iter().enumerate() {
            let mut g = DMatrix::<f64>::zeros(r, r);
            for &(i, j) in &rows[*m] {
                let bi = b.row(i);
                let bj = b.row(j);
                for k in 0..r {
                    for l in 0..r {
                        g[(k, l)] += bi[k] * bj[l];
                        if i != j {
                            g[(k, l)] += bj[k] * bi[l];
                        }
                    }
                }
            }
            let mut col = 0;
            for k in 0..r {
                for l in k..r {
                    let w = if k == l { 1.0 } else { 2.0 };
                    design[(row, col)] = w * g[(k, l)];
                    col += 1;
                }
            }
            let mut val = 0.0;
            for k in 0..r {
                val += g[(k, k)] * y0[(k, k)];
            }
            resid[row] = p.coeff(m) - val;
        }
        let resid_norm = resid.amax();
        let svd = design.clone().svd(true, true);
        let s_max = svd.singular_values.amax().max(1e-300);
        let delta_vec = svd.solve(&resid, 1e-8 * s_max).ok()?;
        // the equalities must actually be attainable on this face
        let achieved = (&design * &delta_vec - resid).amax();
        if achieved > 1e-9 * scale + 1e-6 * resid_norm {
            return None;
        }
        if delta_vec.norm() > 1e3 * (y0.norm() + 1.0) {
            return None;
        }
        let mut y = y0;
        let mut col = 0;
        for k in 0..r {
            for l in k..r {
                y[(k, l)] += delta_vec[col];
                if k != l {
                    y[(l, k)] += delta_vec[col];
                }
                col += 1;
            }
        }
        let out = &b * y * b.transpose();
        Some((&out + &out.transpose()) * 0.5)
    };

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for round in 0..40 {
        affine_project(&mut q);
        let eig = q.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if std::env::var_os("SOSLYAP_POLISH_TRACE").is_some() {
            eprintln!("polish round {round}: min_eig {min_eig:.3e} trace {:.3e}", q.trace());
        }
        if min_eig >= -settings.psd_tol * q.trace().abs().max(1.0) {
            if let Some(out) = finish(&q) {
                return Some(out);
            }
        }
        if best.as_ref().map_or(true, |(m, _)| min_eig > *m) {
            best = Some((min_eig, q.clone()));
        }

        // try to commit to a face, coarse to fine; accept the first
        // candidate that survives the final validation
        for tau in [3e-2, 1e-3, 1e-5, 1e-7] {
            let Some(cand) = ls_on_face(&eig, tau) else {
                if std::env::var_os("SOSLYAP_POLISH_TRACE").is_some() {
                    eprintln!("  tau {tau:.0e}: no candidate");
                }
                continue;
            };
            let mut cand = cand;
            affine_project(&mut cand);
            let cand_min = min_eigenvalue_unchecked(&cand);
            if std::env::var_os("SOSLYAP_POLISH_TRACE").is_some() {
                eprintln!("  tau {tau:.0e}: candidate min_eig {cand_min:.3e}");
            }
            if cand_min >= -settings.psd_tol * cand.trace().abs().max(1.0) {
                if let Some(out) = finish(&cand) {
                    return Some(out);
                }
            }
        }

        // otherwise take a plain alternating-projection step
        q = clip_psd(&q);
    }
    // fall back to the best iterate seen
    if let Some((_, qb)) = best {
        q = qb;
        affine_project(&mut q);
        if let Some(out) = finish(&q) {
            return Some(out);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn perfect_square_has_rank_one_gram() {
        let p = parse("x1^2 + 2*x1*x2 + x2^2").unwrap();
        let out = check_sos(&p, true, &settings()).unwrap();
        let cert = out.certificate().expect("perfect square is sos");
        // basis {x1, x2}: the unique Gram is [[1,1],[1,1]]
        assert!((cert.matrix[(0, 0)] - 1.0).abs() < 1e-7);
        assert!((cert.matrix[(0, 1)] - 1.0).abs() < 1e-7);
        assert!((cert.matrix[(1, 1)] - 1.0).abs() < 1e-7);
        assert!((cert.margin - 2.0).abs() < 1e-6, "margin {}", cert.margin);
    }

    #[test]
    fn motzkin_is_not_sos() {
        let p = parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1").unwrap();
        match check_sos(&p, false, &settings()).unwrap() {
            SosCheck::Infeasible { margin } => assert!(margin < -1e-3),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn odd_degree_is_structurally_not_sos() {
        let p = parse("x1^3 + x1").unwrap();
        assert!(matches!(
            check_sos(&p, false, &settings()).unwrap(),
            SosCheck::Infeasible { .. }
        ));
    }

    #[test]
    fn zero_polynomial_is_trivially_sos() {
        let out = check_sos(&Polynomial::zero(2), false, &settings()).unwrap();
        assert!(out.is_feasible());
    }

    #[test]
    fn negative_constant_is_not_sos() {
        let p = parse("x1^2 - 1").unwrap();
        assert!(matches!(
            check_sos(&p, false, &settings()).unwrap(),
            SosCheck::Infeasible { .. }
        ));
    }
}

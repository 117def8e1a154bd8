use nalgebra::DMatrix;

use crate::certify::sample;
use crate::poly::{lie_derivative, Polynomial, VectorField};
use crate::sdp::SolverSettings;

use super::certificate::{CertSystem, GramCertificate, PowerCertificate};
use super::check::{check_sos, SosCheck};
use super::SynthError;

/// `v^2`: a sum of squares by construction, with `-d(v^2)/dt = -2 v vdot`.
pub fn square_lyapunov(v: &Polynomial) -> Polynomial {
    v.powi(2)
}

/// The gradient flow `dx/dt = -grad v`, whose derivative condition
/// `-vdot = |grad v|^2` is a sum of squares by construction.
pub fn gradient_system(v: &Polynomial) -> Result<VectorField, SynthError> {
    if v.degree() == 0 {
        return Err(SynthError::ConstantCandidate);
    }
    let components = v.gradient().iter().map(|g| -g).collect();
    Ok(VectorField::new(components).expect("gradient has one entry per variable"))
}

/// Result of a power-certificate sweep.
#[derive(Clone, Debug)]
pub enum PowerOutcome {
    Found(Box<PowerCertificate>),
    /// No admissible exponent up to `k_max`; one note per attempted `k`.
    Exhausted { attempts: Vec<(u32, String)> },
}

impl PowerOutcome {
    pub fn certificate(self) -> Option<PowerCertificate> {
        match self {
            PowerOutcome::Found(c) => Some(*c),
            PowerOutcome::Exhausted { .. } => None,
        }
    }
}

/// For a homogeneous candidate `v` and homogeneous field `f`, sweep
/// `k = 0, 1, ...` until `(-2 v vdot) v^(2k)` is a sum of squares, and
/// return `w = v^(2k+2)` together with Gram certificates for `w` (an even
/// power, hence a perfect square) and for `-wdot`.
///
/// Positive definiteness of `v` and `-vdot` is screened by deterministic
/// sphere sampling; the returned Gram data carries the actual evidence.
pub fn power_certificate(
    v: &Polynomial,
    f: &VectorField,
    k_max: u32,
    settings: &SolverSettings,
) -> Result<PowerOutcome, SynthError> {
    if !v.is_homogeneous() || v.is_zero() {
        return Err(SynthError::NotHomogeneous("candidate must be a nonzero form".into()));
    }
    if !f.is_homogeneous() {
        return Err(SynthError::NotHomogeneous("vector field must be homogeneous".into()));
    }
    let v = normalized(v);
    screen_positive(&v, "candidate")?;
    let vdot = lie_derivative(&v, f)?;
    screen_positive(&(-&vdot), "negated derivative")?;

    let mut attempts = Vec::new();
    match sweep_k(&v, &vdot, k_max, true, settings, &mut attempts)? {
        Some((k, gram)) => {
            let w = v.powi(2 * k + 2);
            let cert = PowerCertificate {
                k,
                base: v.clone(),
                w,
                planar: false,
                gram_w: even_power_gram(&v, k),
                gram_wdot: vec![scale_wdot_gram(gram, k)],
                system: CertSystem::continuous(f.clone()),
            };
            Ok(PowerOutcome::Found(Box::new(cert)))
        }
        None => Ok(PowerOutcome::Exhausted { attempts }),
    }
}

/// Planar variant for possibly inhomogeneous candidates in two variables:
/// shift to `v + 1`, homogenize `(-2 (v+1) vdot) (v+1)^(2k)` into three
/// variables, and test that form. The certificate returns
/// `w = (v+1)^(2k+2)`; setting the extra variable to one recovers the
/// derivative identity, which is re-verified symbolically.
pub fn planar_power_certificate(
    v: &Polynomial,
    f: &VectorField,
    k_max: u32,
    settings: &SolverSettings,
) -> Result<PowerOutcome, SynthError> {
    if v.n_vars() != 2 || f.n_vars() != 2 {
        return Err(SynthError::NotPlanar);
    }
    let v = normalized(v);
    let thc = v
        .top_homogeneous_component()
        .map_err(|_| SynthError::ConstantCandidate)?;
    // a bivariate form is positive definite exactly when its eps-shifted
    // version is a sum of squares
    let eps = 1e-4 * thc.max_abs_coeff().max(1.0);
    if thc.degree() % 2 == 1 {
        return Err(SynthError::ThcHasZeros);
    }
    let shifted = &thc - &Polynomial::sum_of_squares_power(2, thc.degree() / 2).scale(eps);
    match check_sos(&shifted, true, settings)? {
        SosCheck::Feasible(_) => {}
        _ => return Err(SynthError::ThcHasZeros),
    }
    screen_positive(&v, "candidate")?;
    let vdot = lie_derivative(&v, f)?;
    screen_positive(&(-&vdot), "negated derivative")?;
    if vdot.degree() % 2 == 1 {
        return Err(SynthError::NotPositiveDefinite(
            "derivative has odd degree, so its negation cannot be positive definite".into(),
        ));
    }

    let v_tilde = &v + &Polynomial::constant(2, 1.0);
    let neg2vvdot = &v_tilde.scale(-2.0) * &vdot;
    let mut attempts = Vec::new();
    let mut product = neg2vvdot.clone();
    for k in 0..=k_max {
        if k > 0 {
            product = &product * &v_tilde.powi(2);
        }
        let form = product
            .homogenize(product.degree())
            .expect("own degree is always admissible");
        match run_check(&form, settings, k, &mut attempts)? {
            Some(gram) => {
                let w = v_tilde.powi(2 * k + 2);
                // the certified form restricts back to the planar identity
                let restricted = form.substitute_last_one();
                debug_assert!(restricted.coeff_distance(&product) < 1e-12);
                let wdot_gram = dehomogenized_gram(scale_wdot_gram(gram, k));
                let cert = PowerCertificate {
                    k,
                    base: v.clone(),
                    w,
                    planar: true,
                    gram_w: even_power_gram(&v_tilde, k),
                    gram_wdot: vec![wdot_gram],
                    system: CertSystem::continuous(f.clone()),
                };
                return Ok(PowerOutcome::Found(Box::new(cert)));
            }
            None => continue,
        }
    }
    Ok(PowerOutcome::Exhausted { attempts })
}

/// Common power certificate for several homogeneous modes sharing one
/// candidate: find each mode's minimal exponent, take the maximum, and
/// certify every mode at that exponent.
pub fn common_power_certificate(
    v: &Polynomial,
    modes: &[VectorField],
    k_max: u32,
    settings: &SolverSettings,
) -> Result<PowerOutcome, SynthError> {
    if modes.is_empty() {
        return Err(SynthError::EmptySystem);
    }
    if !v.is_homogeneous() || v.is_zero() {
        return Err(SynthError::NotHomogeneous("candidate must be a nonzero form".into()));
    }
    let v = normalized(v);
    screen_positive(&v, "candidate")?;
    let mut attempts = Vec::new();
    let mut k_common = 0;
    let mut vdots = Vec::new();
    for (i, f) in modes.iter().enumerate() {
        if !f.is_homogeneous() {
            return Err(SynthError::NotHomogeneous(format!(
                "mode {i} is not homogeneous"
            )));
        }
        let vdot = lie_derivative(&v, f)?;
        screen_positive(&(-&vdot), &format!("negated derivative of mode {i}"))?;
        match sweep_k(&v, &vdot, k_max, true, settings, &mut attempts)? {
            Some((k, _)) => k_common = k_common.max(k),
            None => return Ok(PowerOutcome::Exhausted { attempts }),
        }
        vdots.push(vdot);
    }

    // every mode is certifiable at the common exponent: the gap from its
    // minimal exponent is absorbed by even powers of v
    let mut gram_wdot = Vec::new();
    for (i, vdot) in vdots.iter().enumerate() {
        let target = &(&v.scale(-2.0) * vdot) * &v.powi(2 * k_common);
        match check_sos(&target, true, settings)? {
            SosCheck::Feasible(g) => gram_wdot.push(GramCertificate {
                label: format!("neg-wdot-{i}"),
                ..scale_wdot_gram(g, k_common)
            }),
            other => {
                attempts.push((k_common, format!("mode {i} failed at the common exponent: {other:?}")));
                return Ok(PowerOutcome::Exhausted { attempts });
            }
        }
    }
    let cert = PowerCertificate {
        k: k_common,
        base: v.clone(),
        w: v.powi(2 * k_common + 2),
        planar: false,
        gram_w: even_power_gram(&v, k_common),
        gram_wdot,
        system: CertSystem::ContinuousModes(modes.to_vec()),
    };
    Ok(PowerOutcome::Found(Box::new(cert)))
}

fn normalized(v: &Polynomial) -> Polynomial {
    let s = v.max_abs_coeff();
    if s > 0.0 {
        v.scale(1.0 / s)
    } else {
        v.clone()
    }
}

/// Necessary-condition screen: the polynomial must be positive on a
/// deterministic sample of the unit sphere and a surrounding box.
fn screen_positive(p: &Polynomial, what: &str) -> Result<(), SynthError> {
    let pts = sample::sphere_points(p.n_vars(), 200)
        .into_iter()
        .chain(sample::box_points(p.n_vars(), 200, 3.0));
    for x in pts {
        if p.eval(&x) <= 0.0 {
            return Err(SynthError::NotPositiveDefinite(format!(
                "{what} is not positive at a sampled point"
            )));
        }
    }
    Ok(())
}

/// Sweep `k = 0..=k_max` testing `(-2 v vdot) v^(2k)` for a sum-of-squares
/// decomposition. Indeterminate and infeasible attempts are recorded, never
/// conflated.
fn sweep_k(
    v: &Polynomial,
    vdot: &Polynomial,
    k_max: u32,
    homogeneous: bool,
    settings: &SolverSettings,
    attempts: &mut Vec<(u32, String)>,
) -> Result<Option<(u32, GramCertificate)>, SynthError> {
    let base = &v.scale(-2.0) * vdot;
    let mut product = base.clone();
    for k in 0..=k_max {
        if k > 0 {
            product = &product * &v.powi(2);
        }
        if let Some(gram) = run_check_flag(&product, homogeneous, settings, k, attempts)? {
            return Ok(Some((k, gram)));
        }
    }
    Ok(None)
}

fn run_check(
    p: &Polynomial,
    settings: &SolverSettings,
    k: u32,
    attempts: &mut Vec<(u32, String)>,
) -> Result<Option<GramCertificate>, SynthError> {
    run_check_flag(p, true, settings, k, attempts)
}

fn run_check_flag(
    p: &Polynomial,
    homogeneous: bool,
    settings: &SolverSettings,
    k: u32,
    attempts: &mut Vec<(u32, String)>,
) -> Result<Option<GramCertificate>, SynthError> {
    match check_sos(p, homogeneous, settings) {
        Ok(SosCheck::Feasible(g)) => Ok(Some(g)),
        Ok(SosCheck::Infeasible { margin }) => {
            attempts.push((k, format!("not a sum of squares (margin {margin:.3e})")));
            Ok(None)
        }
        Ok(SosCheck::Indeterminate { note }) => {
            attempts.push((k, format!("inconclusive: {note}")));
            Ok(None)
        }
        Err(SynthError::Solver(crate::sdp::SolverError::DimensionCapExceeded { total, cap })) => {
            attempts.push((
                k,
                format!("skipped: Gram dimension {total} exceeds the solver cap {cap}"),
            ));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Rank-one Gram certificate for `base^(2k+2) = (base^(k+1))^2`.
fn even_power_gram(base: &Polynomial, k: u32) -> GramCertificate {
    let half = base.powi(k + 1);
    let basis: Vec<_> = half.terms().map(|(m, _)| m.clone()).collect();
    let coeffs: Vec<f64> = half.terms().map(|(_, c)| c).collect();
    let n = basis.len();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            matrix[(i, j)] = coeffs[i] * coeffs[j];
        }
    }
    let margin = coeffs.iter().map(|c| c * c).sum();
    GramCertificate {
        label: "w-even-power".into(),
        basis,
        matrix,
        margin,
        shift: None,
    }
}

/// `-wdot = (k+1) * (-2 v vdot) v^(2k)`: rescale the sweep certificate.
fn scale_wdot_gram(gram: GramCertificate, k: u32) -> GramCertificate {
    let mut g = gram.scale((k + 1) as f64);
    g.label = "neg-wdot".into();
    g
}

/// Map a Gram certificate over a homogeneous trivariate basis back to the
/// plane by dropping the homogenization variable. Within one homogeneous
/// degree the remaining exponents determine the dropped one, so the mapped
/// basis stays collision-free.
fn dehomogenized_gram(gram: GramCertificate) -> GramCertificate {
    let basis = gram
        .basis
        .iter()
        .map(|m| {
            let exps = m.exponents();
            crate::poly::Monomial::new(exps[..exps.len() - 1].to_vec())
        })
        .collect();
    GramCertificate {
        label: gram.label,
        basis,
        matrix: gram.matrix,
        margin: gram.margin,
        shift: gram.shift,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn square_is_trivially_sos() {
        let v = parse("x1^2 + x2^2 + 1").unwrap();
        let w = square_lyapunov(&v);
        assert_eq!(w, v.powi(2));
        assert!(check_sos(&w, false, &settings()).unwrap().is_feasible());
    }

    #[test]
    fn gradient_system_of_square() {
        let v = parse("x1^2").unwrap();
        let f = gradient_system(&v).unwrap();
        assert_eq!(f.components()[0], parse("-2*x1").unwrap());
        assert!(gradient_system(&Polynomial::constant(2, 3.0)).is_err());
    }

    #[test]
    fn linear_decay_needs_no_power() {
        // v = x1^2 + x2^2, f = -x: -2 v vdot = 4 v^2 is already sos
        let v = parse("x1^2 + x2^2").unwrap();
        let f = VectorField::new(vec![
            crate::poly::parse_in("-x1", 2).unwrap(),
            crate::poly::parse_in("-x2", 2).unwrap(),
        ])
        .unwrap();
        let out = power_certificate(&v, &f, 2, &settings()).unwrap();
        let cert = out.certificate().expect("k = 0 suffices");
        assert_eq!(cert.k, 0);
        assert_eq!(cert.w, v.powi(2));
    }

    #[test]
    fn planar_trivial_case() {
        let v = parse("x1^2 + x2^2").unwrap();
        let f = VectorField::new(vec![
            crate::poly::parse_in("-x1", 2).unwrap(),
            crate::poly::parse_in("-x2", 2).unwrap(),
        ])
        .unwrap();
        let out = planar_power_certificate(&v, &f, 2, &settings()).unwrap();
        let cert = out.certificate().expect("k = 0 suffices");
        assert_eq!(cert.k, 0);
        let vt = &v + &Polynomial::constant(2, 1.0);
        assert_eq!(cert.w, vt.powi(2));
    }

    #[test]
    fn planar_rejects_thc_with_zeros() {
        // top component x1^2 * (x1^2 + x2^2) vanishes on the x2 axis
        let v = parse("x1^4 + x1^2*x2^2 + x1^2").unwrap();
        let f = VectorField::new(vec![
            crate::poly::parse_in("-x1", 2).unwrap(),
            crate::poly::parse_in("-x2", 2).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            planar_power_certificate(&v, &f, 1, &settings()),
            Err(SynthError::ThcHasZeros)
        ));
    }

    #[test]
    fn single_mode_common_reduces_to_plain() {
        let v = parse("x1^2 + x2^2").unwrap();
        let f = VectorField::new(vec![
            crate::poly::parse_in("-x1", 2).unwrap(),
            crate::poly::parse_in("-x2", 2).unwrap(),
        ])
        .unwrap();
        let plain = power_certificate(&v, &f, 2, &settings())
            .unwrap()
            .certificate()
            .unwrap();
        let common = common_power_certificate(&v, &[f], 2, &settings())
            .unwrap()
            .certificate()
            .unwrap();
        assert_eq!(plain.k, common.k);
        assert_eq!(plain.w, common.w);
    }
}

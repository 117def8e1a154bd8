use serde::Serialize;

use crate::poly::{discrete_difference, lie_derivative, Polynomial};
use crate::sdp::{min_eigenvalue_unchecked, parse_sdpa, write_sdpa, SdpProblem};
use crate::synth::{
    CertSystem, GramCertificate, LyapunovCertificate, PowerCertificate, SearchMode,
};

use super::{sample, CertifyError};

/// Reconstruction error above this rejects a certificate.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Gram eigenvalues below `-PSD_TOL * trace` reject a certificate.
pub const PSD_TOL: f64 = 1e-8;
/// Sampled certificate values below this reject a certificate.
pub const SAMPLE_TOL: f64 = -1e-9;
/// Sample budget, split between the unit sphere and the box `[-3, 3]^n`.
pub const N_SAMPLES: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintReport {
    pub label: String,
    /// Largest coefficient deviation between the reconstructed Gram
    /// polynomial and the independently recomputed target, relative to the
    /// larger of one and the coefficient scale.
    pub reconstruction_error: f64,
    pub gram_min_eigenvalue: f64,
    pub gram_trace: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolicCheck {
    pub identity: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub enum Verdict {
    Verified,
    Rejected(Vec<String>),
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn reasons(&self) -> Vec<String> {
        match self {
            Verdict::Verified => Vec::new(),
            Verdict::Rejected(r) => r.clone(),
        }
    }
}

/// Outcome of the solver-independent re-verification of a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub constraints: Vec<ConstraintReport>,
    pub symbolic: Vec<SymbolicCheck>,
    /// Smallest sampled value of the certified candidate (the candidate
    /// itself, its top homogeneous component, or the power `w`).
    pub sampled_min_candidate: f64,
    /// Smallest sampled value over all decrease conditions.
    pub sampled_min_decrease: f64,
    pub n_samples: usize,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

struct Checker {
    reports: Vec<ConstraintReport>,
    symbolic: Vec<SymbolicCheck>,
    reasons: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Self {
            reports: Vec::new(),
            symbolic: Vec::new(),
            reasons: Vec::new(),
        }
    }

    /// Reconstruct `z' Q z`, compare against the recomputed target (minus
    /// the recorded shift), and check the Gram spectrum.
    fn gram(&mut self, gram: &GramCertificate, raw_target: &Polynomial) {
        let n = raw_target.n_vars();
        let target = raw_target - &gram.shift_polynomial(n);
        let rebuilt = gram.reconstruct(n);
        let err = rebuilt.coeff_distance(&target);
        let trace = gram.matrix.trace();
        let min_eig = min_eigenvalue_unchecked(&gram.matrix);
        let min_eig = if min_eig.is_finite() { min_eig } else { 0.0 };
        if err > RECONSTRUCTION_TOL {
            self.reasons.push(format!(
                "`{}`: reconstruction error {err:.3e} exceeds {RECONSTRUCTION_TOL:.0e}",
                gram.label
            ));
        }
        if min_eig < -PSD_TOL * trace.max(0.0) {
            self.reasons.push(format!(
                "`{}`: Gram matrix has eigenvalue {min_eig:.3e}",
                gram.label
            ));
        }
        self.reports.push(ConstraintReport {
            label: gram.label.clone(),
            reconstruction_error: err,
            gram_min_eigenvalue: min_eig,
            gram_trace: trace,
        });
    }

    fn identity(&mut self, name: &str, holds: bool) {
        if !holds {
            self.reasons.push(format!("symbolic identity `{name}` fails"));
        }
        self.symbolic.push(SymbolicCheck {
            identity: name.into(),
            holds,
        });
    }

    fn finish(self, min_candidate: f64, min_decrease: f64) -> VerificationReport {
        let mut reasons = self.reasons;
        if min_candidate < SAMPLE_TOL {
            reasons.push(format!(
                "candidate dips to {min_candidate:.3e} on the sample set"
            ));
        }
        if min_decrease < SAMPLE_TOL {
            reasons.push(format!(
                "a decrease condition dips to {min_decrease:.3e} on the sample set"
            ));
        }
        VerificationReport {
            constraints: self.reports,
            symbolic: self.symbolic,
            sampled_min_candidate: min_candidate,
            sampled_min_decrease: min_decrease,
            n_samples: N_SAMPLES,
            verdict: if reasons.is_empty() {
                Verdict::Verified
            } else {
                Verdict::Rejected(reasons)
            },
        }
    }
}

fn sample_points(n: usize) -> Vec<Vec<f64>> {
    let mut pts = sample::sphere_points(n, N_SAMPLES / 2);
    pts.extend(sample::box_points(n, N_SAMPLES - N_SAMPLES / 2, 3.0));
    pts
}

fn sampled_min(p: &Polynomial, pts: &[Vec<f64>]) -> f64 {
    pts.iter().map(|x| p.eval(x)).fold(f64::INFINITY, f64::min)
}

/// Recompute the decrease polynomials of a system from scratch.
fn decrease_polys(v: &Polynomial, system: &CertSystem) -> Result<Vec<Polynomial>, CertifyError> {
    match system {
        CertSystem::ContinuousModes(fields) => fields
            .iter()
            .map(|f| {
                lie_derivative(v, f)
                    .map(|vd| -&vd)
                    .map_err(|_| CertifyError::DimensionMismatch)
            })
            .collect(),
        CertSystem::DiscreteModes(mats) => mats
            .iter()
            .map(|a| discrete_difference(v, a).map_err(|_| CertifyError::DimensionMismatch))
            .collect(),
    }
}

/// Re-verify a Lyapunov certificate against the given system: Gram
/// reconstructions, eigenvalue margins, and deterministic sampling of the
/// certified quantities. Never consults the solver.
pub fn verify_lyapunov(
    cert: &LyapunovCertificate,
    system: &CertSystem,
) -> Result<VerificationReport, CertifyError> {
    let n = cert.v.n_vars();
    if system.n_vars() != n {
        return Err(CertifyError::DimensionMismatch);
    }
    let decreases = decrease_polys(&cert.v, system)?;
    if cert.grams.len() != decreases.len() + 1 {
        return Err(CertifyError::MissingGram(format!(
            "expected {} Gram blocks, certificate has {}",
            decreases.len() + 1,
            cert.grams.len()
        )));
    }

    let mut checker = Checker::new();
    let candidate = match cert.mode {
        SearchMode::VSos => cert.v.clone(),
        SearchMode::ThcSos => cert
            .v
            .top_homogeneous_component()
            .map_err(|_| CertifyError::MissingGram("certificate with zero candidate".into()))?,
    };
    if cert.mode == SearchMode::ThcSos {
        let has_constant = cert.v.coeff(&crate::poly::Monomial::unit(n)) != 0.0;
        checker.identity("candidate has no constant term", !has_constant);
    }
    checker.gram(&cert.grams[0], &candidate);
    for (gram, dec) in cert.grams[1..].iter().zip(&decreases) {
        checker.gram(gram, dec);
    }

    let pts = sample_points(n);
    let min_candidate = sampled_min(&candidate, &pts);
    let min_decrease = decreases
        .iter()
        .map(|d| sampled_min(d, &pts))
        .fold(f64::INFINITY, f64::min);
    Ok(checker.finish(min_candidate, min_decrease))
}

/// Re-verify a power certificate: the exact power identities, the Gram
/// data for `w` and every `-wdot`, and sampling.
pub fn verify_power(
    cert: &PowerCertificate,
    system: &CertSystem,
) -> Result<VerificationReport, CertifyError> {
    let n = cert.base.n_vars();
    if system.n_vars() != n {
        return Err(CertifyError::DimensionMismatch);
    }
    if cert.gram_wdot.len() != system.n_modes() {
        return Err(CertifyError::MissingGram(format!(
            "expected {} decrease Gram blocks, certificate has {}",
            system.n_modes(),
            cert.gram_wdot.len()
        )));
    }
    let fields = match system {
        CertSystem::ContinuousModes(fs) => fs,
        CertSystem::DiscreteModes(_) => {
            return Err(CertifyError::MissingGram(
                "power certificates are continuous-time".into(),
            ))
        }
    };

    let mut checker = Checker::new();
    let base = cert.effective_base();
    let w_expected = base.powi(2 * cert.k + 2);
    checker.identity(
        "w equals base^(2k+2)",
        cert.w.coeff_distance(&w_expected) <= 1e-10,
    );

    let mut neg_wdots = Vec::new();
    for (i, f) in fields.iter().enumerate() {
        let wdot = lie_derivative(&cert.w, f).map_err(|_| CertifyError::DimensionMismatch)?;
        let neg_wdot = -&wdot;
        // -wdot = (2k+2) base^(2k+1) (-base-dot)
        let base_dot = lie_derivative(&base, f).map_err(|_| CertifyError::DimensionMismatch)?;
        let expected = (&base.powi(2 * cert.k + 1) * &(-&base_dot)).scale((2 * cert.k + 2) as f64);
        checker.identity(
            &format!("-wdot_{i} equals (2k+2) base^(2k+1) (-base-dot)"),
            neg_wdot.coeff_distance(&expected) <= 1e-10,
        );
        neg_wdots.push(neg_wdot);
    }

    checker.gram(&cert.gram_w, &cert.w);
    for (gram, neg_wdot) in cert.gram_wdot.iter().zip(&neg_wdots) {
        checker.gram(gram, neg_wdot);
    }

    let pts = sample_points(n);
    let min_candidate = sampled_min(&cert.w, &pts);
    let min_decrease = neg_wdots
        .iter()
        .map(|d| sampled_min(d, &pts))
        .fold(f64::INFINITY, f64::min);
    Ok(checker.finish(min_candidate, min_decrease))
}

/// Verify either kind of certificate.
pub fn verify_certificate(
    cert: &crate::synth::Certificate,
    system: &CertSystem,
) -> Result<VerificationReport, CertifyError> {
    match cert {
        crate::synth::Certificate::Lyapunov(c) => verify_lyapunov(c, system),
        crate::synth::Certificate::Power(c) => verify_power(c, system),
    }
}

/// Export to the SDPA text format, parse the text back, and compare field
/// by field.
pub fn verify_sdpa_roundtrip(problem: &SdpProblem) -> Result<bool, CertifyError> {
    let text = write_sdpa(problem);
    let parsed = parse_sdpa(&text)?;
    Ok(parsed == *problem)
}

//! Lyapunov certificate synthesis: sum-of-squares membership checks,
//! degree-swept candidate searches for single and switched systems, and the
//! power constructions `w = v^(2k+2)` that trade degree for certifiable
//! derivative conditions.

mod certificate;
mod check;
mod lyapunov;
mod power;

pub use certificate::{
    CertSystem, Certificate, GramCertificate, LyapunovCertificate, PowerCertificate, SearchMode,
};
pub use check::{check_sos, SosCheck};
pub use lyapunov::{
    find_common_lyapunov, find_decrease_only, find_lyapunov, sweep_lyapunov, DecreaseOutcome,
    SearchOptions, SearchOutcome, TimeDomain,
};
pub use power::{
    common_power_certificate, gradient_system, planar_power_certificate, power_certificate,
    square_lyapunov, PowerOutcome,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("vector field does not fix the origin")]
    NotEquilibrium,
    #[error("candidate degree {0} must be even and at least 2")]
    BadDegree(u32),
    #[error("discrete-time analysis needs linear modes")]
    DiscreteNeedsLinear,
    #[error("not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("planar construction needs exactly two variables")]
    NotPlanar,
    #[error("top homogeneous component could not be certified zero-free")]
    ThcHasZeros,
    #[error("positive definiteness screen failed: {0}")]
    NotPositiveDefinite(String),
    #[error("candidate is constant")]
    ConstantCandidate,
    #[error("switched system has no modes")]
    EmptySystem,
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
    #[error(transparent)]
    Compile(#[from] crate::sos::CompileError),
    #[error(transparent)]
    Solver(#[from] crate::sdp::SolverError),
    #[error(transparent)]
    Certify(#[from] crate::certify::CertifyError),
}

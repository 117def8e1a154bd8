//! Solver-independent re-verification: Gram reconstruction against targets
//! recomputed from the polynomial calculus, eigenvalue margins, exact power
//! identities, and sampling-based sanity checks on deterministic point
//! sets. Verification tolerances sit one order below the solver's.

pub mod sample;
mod verify;

pub use verify::{
    verify_certificate, verify_lyapunov, verify_power, verify_sdpa_roundtrip, ConstraintReport,
    SymbolicCheck, VerificationReport, Verdict, N_SAMPLES, PSD_TOL, RECONSTRUCTION_TOL,
    SAMPLE_TOL,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("certificate and system dimensions disagree")]
    DimensionMismatch,
    #[error("missing Gram block: {0}")]
    MissingGram(String),
    #[error(transparent)]
    Sdpa(#[from] crate::sdp::SdpaError),
}

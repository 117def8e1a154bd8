//! Search, construction and independent verification of sum-of-squares
//! Lyapunov certificates for polynomial and switched linear vector fields,
//! on top of an embedded small-scale semidefinite feasibility solver.
//!
//! The crate is organized bottom-up:
//!
//! * [`poly`] — sparse multivariate polynomials and their calculus;
//! * [`sos`] — translation of sum-of-squares programs into block-diagonal
//!   semidefinite feasibility problems via Gram matrices;
//! * [`sdp`] — the embedded primal-dual interior-point feasibility solver
//!   and the SDPA sparse exchange format;
//! * [`synth`] — Lyapunov searches, degree sweeps and power-certificate
//!   constructions;
//! * [`certify`] — solver-independent re-verification of certificates;
//! * [`corpus`] — bundled example systems with expected verdicts.

pub mod certify;
pub mod corpus;
pub mod poly;
pub mod sdp;
pub mod sos;
pub mod synth;

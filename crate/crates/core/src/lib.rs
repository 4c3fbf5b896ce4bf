//! Spectral characterization of constant-sign intervals for derivatives of
//! the Green's function of u^(n) + M u with two-point boundary conditions.
//!
//! The pipeline: boundary-condition index algebra ([`spaces`]), fundamental
//! systems of the constant-coefficient equation ([`basis`]), numerical
//! Green's functions with built-in property verification ([`green`]),
//! first-eigenvalue location on characteristic determinants ([`spectral`]),
//! the theorem-driven sign predictions with grid verification ([`sign`]),
//! and the cone envelopes plus nonlinear fixed-point demonstrator used for
//! existence results ([`cone`]).

pub mod basis;
pub mod cone;
pub mod error;
pub mod green;
pub mod linalg;
pub mod quad;
pub mod sign;
pub mod spaces;
pub mod spectral;

pub use basis::{build_system, Domain, FundamentalSystem};
pub use cone::{
    apply_l, build_envelope, cone_membership, picard_solve, ConeEnvelope, GridFunction,
    MembershipReport, NonlinearProblem, Nonlinearity, PicardOutcome,
};
pub use error::{Error, Result};
pub use green::{build_green, verify_green, GreenFunction, Side, VerificationReport};
pub use sign::{
    necessary_interval, nonexistence_check, predict_interval, proposition_intervals, sweep,
    verify_sign, MInterval, PredictionCase, SignKind, SignPrediction, SignReport, SolverSettings,
    SweepOutcome, Verdict,
};
pub use spaces::{
    aux_spaces, enumerate_spaces, AuxSpaces, DerivativeIndexData, SignCase, SpaceDescriptor,
    TwoPointSpace,
};
pub use spectral::{
    char_det, eigenfunction, first_eigenvalue, EigenOutcome, EigenQuery, EigenResult,
    Eigenfunction, ScanDirection,
};

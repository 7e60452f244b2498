//! RMSProp with a time-varying step-size input `u`, an explicit ISS-Lyapunov
//! function `V` for it, and numerical verification of the inequalities that
//! make `V` decrease.
//!
//! The iteration is
//!
//! ```text
//! s+ = (1 - beta) s + beta g^2
//! x+ = x - (eta0 + u) g / (eps + sqrt(s+))
//! ```
//!
//! with `g = grad f(x)`, and
//! `V(x, s) = gamma(f(x) - f*) + 2 sum_i h(s_i)`.

pub mod certificate;
pub mod engine;
pub mod error;
pub mod lyapunov;
pub mod objectives;
pub mod roots;
pub mod types;

pub use certificate::{
    make_constants, verify_suite, Certificate, CertificateConstants, InequalityStats, SamplerConfig, Tolerance,
    VerificationReport, DEFAULT_Q, INEQUALITIES,
};
pub use engine::{run, run_with, step, RunError, Schedule, TraceRecord, TraceWriter, DIVERGENCE_GUARD};
pub use error::{Error, Result};
pub use lyapunov::{make_spec, LyapunovSpec, Transition};
pub use objectives::{catalog, Objective, ObjectiveDescriptor, ObjectiveKind};
pub use types::{inf_norm, joint_inf_norm, validate_params, AlgoParams, ParamViolation, State, StepInput};

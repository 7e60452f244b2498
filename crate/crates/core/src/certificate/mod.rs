//! Explicit constants and inequalities of the decrease argument for `V`, and
//! their numerical verification.
//!
//! Each `check_*` method returns the signed margin `RHS - LHS` of one
//! inequality, where the LHS is always the exact `Delta V` of a
//! [`Transition`](crate::lyapunov::Transition).

mod bounds;
mod constants;
mod iss;
mod suite;

pub use bounds::{LTerms, PTerms};
pub use constants::{make_constants, CertificateConstants, DEFAULT_Q};
pub use iss::{IssCheck, PsiFamily, Region, VThresholds};
pub use suite::{
    verify_suite, CaseDigest, InequalityStats, SamplerConfig, Tolerance, VerificationReport, INEQUALITIES,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lyapunov::{make_spec, LyapunovSpec};
use crate::objectives::Objective;
use crate::types::AlgoParams;

/// A Lyapunov spec together with the derived constants for one objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub spec: LyapunovSpec,
    pub consts: CertificateConstants,
}

impl Certificate {
    pub fn new(p: &AlgoParams, obj: &Objective, q: f64) -> Result<Self> {
        let spec = make_spec(p, obj.smoothness(), obj.dim())?;
        let consts = make_constants(&spec, obj, q)?;
        Ok(Self { spec, consts })
    }

    #[inline]
    fn eta(&self, u: f64) -> f64 {
        self.spec.params.eta0 + u
    }
}

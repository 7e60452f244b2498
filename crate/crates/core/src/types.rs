//! Shared value types: algorithm parameters, optimizer state, step inputs and
//! the infinity norms used throughout the certificate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries of `s` in `[-NEGATIVE_CLAMP, 0)` are rounding noise and are
/// clamped to zero on construction.
pub const NEGATIVE_CLAMP: f64 = 1e-15;

/// The tuple `(beta, epsilon, eta0, eta1)` that drives the iteration and every
/// certificate constant.
///
/// `eta1` does not enter the iteration itself; it is the slack parameter of the
/// Lyapunov construction and must satisfy `eta0 + eta1 < 2 epsilon / L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub beta: f64,
    pub epsilon: f64,
    pub eta0: f64,
    pub eta1: f64,
}

impl AlgoParams {
    pub fn new(beta: f64, epsilon: f64, eta0: f64, eta1: f64) -> Self {
        Self {
            beta,
            epsilon,
            eta0,
            eta1,
        }
    }

    /// Parameters with `eta1` splitting the remaining slack `2 epsilon / L - eta0`
    /// evenly.
    pub fn with_default_eta1(beta: f64, epsilon: f64, eta0: f64, smoothness: f64) -> Self {
        let eta1 = (2.0 * epsilon / smoothness - eta0) / 2.0;
        Self::new(beta, epsilon, eta0, eta1)
    }

    /// The effective step size `eta(u) = eta0 + u`.
    #[inline]
    pub fn step_size(&self, u: StepInput) -> f64 {
        self.eta0 + u.value()
    }
}

/// The first condition that makes a parameter tuple inadmissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamViolation {
    Beta,
    Epsilon,
    Eta0,
    Eta1,
    Smoothness,
    StepSum,
}

impl ParamViolation {
    pub fn name(&self) -> &'static str {
        match self {
            ParamViolation::Beta => "beta",
            ParamViolation::Epsilon => "epsilon",
            ParamViolation::Eta0 => "eta0",
            ParamViolation::Eta1 => "eta1",
            ParamViolation::Smoothness => "L",
            ParamViolation::StepSum => "eta0+eta1",
        }
    }
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self {
            ParamViolation::Beta => "beta must lie in (0, 1)",
            ParamViolation::Epsilon => "epsilon must be positive",
            ParamViolation::Eta0 => "eta0 must be positive",
            ParamViolation::Eta1 => "eta1 must be positive",
            ParamViolation::Smoothness => "L must be positive",
            ParamViolation::StepSum => "eta0 + eta1 must be below 2 epsilon / L",
        };
        write!(f, "{} ({})", self.name(), what)
    }
}

/// Checks the parameter invariants and the compatibility condition
/// `eta0 + eta1 < 2 epsilon / L`, reporting the first violation.
pub fn validate_params(p: &AlgoParams, smoothness: f64) -> std::result::Result<(), ParamViolation> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !(p.beta.is_finite() && p.beta > 0.0 && p.beta < 1.0) {
        return Err(ParamViolation::Beta);
    }
    if !positive(p.epsilon) {
        return Err(ParamViolation::Epsilon);
    }
    if !positive(p.eta0) {
        return Err(ParamViolation::Eta0);
    }
    if !positive(p.eta1) {
        return Err(ParamViolation::Eta1);
    }
    if !positive(smoothness) {
        return Err(ParamViolation::Smoothness);
    }
    if !(p.eta0 + p.eta1 < 2.0 * p.epsilon / smoothness) {
        return Err(ParamViolation::StepSum);
    }
    Ok(())
}

/// A nonnegative, finite step-size perturbation `u`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StepInput(f64);

impl StepInput {
    pub const ZERO: StepInput = StepInput(0.0);

    pub fn new(u: f64) -> Result<Self> {
        if u.is_finite() && u >= 0.0 {
            Ok(StepInput(u))
        } else {
            Err(Error::InvalidInput(u))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StepInput {
    type Error = Error;

    fn try_from(u: f64) -> Result<Self> {
        StepInput::new(u)
    }
}

impl From<StepInput> for f64 {
    fn from(u: StepInput) -> f64 {
        u.0
    }
}

/// The iterate pair `(x, s)`. `s` is the exponential moving average of squared
/// gradients and is componentwise nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct State {
    x: Vec<f64>,
    s: Vec<f64>,
}

impl State {
    pub fn new(x: Vec<f64>, mut s: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyVector);
        }
        if x.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: s.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x"));
        }
        for (index, v) in s.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite("s"));
            }
            if *v < 0.0 {
                if *v >= -NEGATIVE_CLAMP {
                    *v = 0.0;
                } else {
                    return Err(Error::NegativeMoment { index, value: *v });
                }
            }
        }
        Ok(Self { x, s })
    }

    /// The state `(x, 0)`.
    pub fn at_rest(x: Vec<f64>) -> Result<Self> {
        let s = vec![0.0; x.len()];
        Self::new(x, s)
    }

    /// Builds a state from trusted parts produced by the iteration. Only the
    /// cheap invariants are asserted in debug builds.
    pub(crate) fn from_parts(x: Vec<f64>, s: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), s.len());
        debug_assert!(s.iter().all(|v| *v >= 0.0 || v.is_nan()));
        Self { x, s }
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.s)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.s.iter()).all(|v| v.is_finite())
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            x: Vec<f64>,
            s: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        State::new(raw.x, raw.s).map_err(serde::de::Error::custom)
    }
}

/// `max_i |v_i|`.
pub fn inf_norm(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(max_abs(v))
}

/// `max(||a||_inf, ||b||_inf)`, the infinity norm of the stacked vector.
/// One of the two parts may be empty.
pub fn joint_inf_norm(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(max_abs(a).max(max_abs(b)))
}

#[inline]
pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[inline]
pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow for far-field samples
    let scale = max_abs(v);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

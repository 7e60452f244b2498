//! The Lyapunov function
//!
//! ```text
//! V(x, s) = gamma(f(x) - f*) + 2 sum_i h(s_i)
//! gamma(w) = gamma0 w + (2/3) gamma1 w^(3/2)
//! h(w)     = sqrt(w) - epsilon ln(1 + sqrt(w) / epsilon)
//! ```
//!
//! and its exact one-step difference along the iteration.

use serde::{Deserialize, Serialize};

use crate::engine::advance;
use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::types::{validate_params, AlgoParams, State, StepInput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpec {
    pub gamma0: f64,
    pub gamma1: f64,
    /// The three lower bounds whose maximum is `gamma0`.
    pub gamma0_candidates: [f64; 3],
    pub params: AlgoParams,
    pub smoothness: f64,
    pub dim: usize,
}

/// Builds `gamma1 = 12 beta^(3/2) sqrt(L) / (eta0 epsilon)` and
/// `gamma0 = max{3 beta / eta0, beta epsilon / (eta0 (epsilon - (eta0 + eta1) L / 2)),
/// gamma1 eta0 sqrt(L d) / sqrt(beta) + 12 beta L sqrt(d) / epsilon}`.
pub fn make_spec(p: &AlgoParams, smoothness: f64, dim: usize) -> Result<LyapunovSpec> {
    validate_params(p, smoothness).map_err(Error::Precondition)?;
    if dim == 0 {
        return Err(Error::EmptyVector);
    }
    let AlgoParams {
        beta,
        epsilon,
        eta0,
        eta1,
    } = *p;
    let l = smoothness;
    let d = dim as f64;
    let gamma1 = 12.0 * beta.powf(1.5) * l.sqrt() / (eta0 * epsilon);
    let candidates = [
        3.0 * beta / eta0,
        beta * epsilon / (eta0 * (epsilon - (eta0 + eta1) * l / 2.0)),
        gamma1 * eta0 * (l * d).sqrt() / beta.sqrt() + 12.0 * beta * l * d.sqrt() / epsilon,
    ];
    let gamma0 = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LyapunovSpec {
        gamma0,
        gamma1,
        gamma0_candidates: candidates,
        params: *p,
        smoothness,
        dim,
    })
}

fn nonneg(w: f64) -> Result<f64> {
    if w >= 0.0 {
        Ok(w)
    } else {
        Err(Error::NegativeArgument(w))
    }
}

impl LyapunovSpec {
    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn h(&self, w: f64) -> Result<f64> {
        Ok(self.h_unchecked(nonneg(w)?))
    }

    /// `h'(w) = 1 / (2 (sqrt(w) + epsilon))`.
    pub fn h_prime(&self, w: f64) -> Result<f64> {
        Ok(0.5 / (nonneg(w)?.sqrt() + self.epsilon()))
    }

    pub fn gamma(&self, w: f64) -> Result<f64> {
        Ok(self.gamma_unchecked(nonneg(w)?))
    }

    /// `gamma'(w) = gamma0 + gamma1 sqrt(w)`.
    pub fn gamma_prime(&self, w: f64) -> Result<f64> {
        Ok(self.gamma_prime_unchecked(nonneg(w)?))
    }

    pub(crate) fn h_unchecked(&self, w: f64) -> f64 {
        let eps = self.epsilon();
        let r = w.sqrt();
        let z = r / eps;
        if z < 1e-3 {
            // r - eps ln(1 + z) = eps (z - ln(1 + z))
            eps * log1p_remainder(z)
        } else {
            r - eps * z.ln_1p()
        }
    }

    pub(crate) fn gamma_unchecked(&self, w: f64) -> f64 {
        self.gamma0 * w + (2.0 / 3.0) * self.gamma1 * w * w.sqrt()
    }

    pub(crate) fn gamma_prime_unchecked(&self, w: f64) -> f64 {
        self.gamma0 + self.gamma1 * w.sqrt()
    }

    /// `(gamma(b) - gamma(a)) / (b - a)`, continuous across `a = b` where it
    /// equals `gamma'(a)`.
    pub fn gamma_divided_difference(&self, a: f64, b: f64) -> f64 {
        let (ra, rb) = (a.sqrt(), b.sqrt());
        let denom = ra + rb;
        if denom == 0.0 {
            return self.gamma0;
        }
        // (b^1.5 - a^1.5) / (b - a) = (a + sqrt(ab) + b) / (sqrt(a) + sqrt(b))
        self.gamma0 + (2.0 / 3.0) * self.gamma1 * (a + ra * rb + b) / denom
    }

    /// `h(a) - h(b)` given `a - b` computed separately, accurate when the two
    /// arguments are close.
    pub(crate) fn h_difference(&self, a: f64, b: f64, a_minus_b: f64) -> f64 {
        let eps = self.epsilon();
        let (ra, rb) = (a.sqrt(), b.sqrt());
        if ra + rb == 0.0 {
            return 0.0;
        }
        let dr = a_minus_b / (ra + rb);
        let r = dr / (eps + rb);
        // h(a) - h(b) = dr - eps ln(1 + r) = r sqrt(b) + eps (r - ln(1 + r))
        r * rb + eps * log1p_remainder(r)
    }

    /// `V(x, s)`.
    pub fn value(&self, obj: &Objective, st: &State) -> Result<f64> {
        self.check(obj, st)?;
        let gap = obj.gap(st.x())?.max(0.0);
        Ok(self.gamma_unchecked(gap) + 2.0 * st.s().iter().map(|w| self.h_unchecked(*w)).sum::<f64>())
    }

    /// `V(step(st, u)) - V(st)`, evaluated directly.
    pub fn delta_v(&self, obj: &Objective, st: &State, u: StepInput) -> Result<f64> {
        Ok(Transition::new(self, obj, st, u)?.delta_v)
    }

    fn check(&self, obj: &Objective, st: &State) -> Result<()> {
        if obj.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: obj.dim(),
            });
        }
        if st.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: st.dim(),
            });
        }
        Ok(())
    }
}

/// `z - ln(1 + z)` for `z > -1`, with a series near zero where the direct
/// form cancels.
fn log1p_remainder(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let mut term = z * z;
        let mut sum = 0.0;
        for k in 2..=9 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term / k as f64;
            term *= z;
        }
        sum
    } else {
        z - z.ln_1p()
    }
}

/// Everything about one step `(x, s) -> (x+, s+)` needed to evaluate `Delta V`
/// and the bounds on it.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: State,
    pub next: State,
    pub u: StepInput,
    pub eta: f64,
    pub grad: Vec<f64>,
    /// `f(x) - f*`
    pub gap: f64,
    /// `f(x+) - f*`
    pub gap_next: f64,
    /// `f(x+) - f(x)`, from the step rather than the difference of gaps.
    pub gap_change: f64,
    /// `gamma(f0(x+)) - gamma(f0(x))`
    pub gamma_change: f64,
    /// `2 sum_i (h(s+_i) - h(s_i))`
    pub h_change: f64,
    pub delta_v: f64,
}

impl Transition {
    pub fn new(spec: &LyapunovSpec, obj: &Objective, st: &State, u: StepInput) -> Result<Self> {
        spec.check(obj, st)?;
        validate_params(&spec.params, obj.smoothness()).map_err(Error::Precondition)?;
        let grad = obj.grad(st.x())?;
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        let next = advance(&spec.params, st, &grad, u);
        let gap = obj.gap(st.x())?.max(0.0);
        let gap_next = obj.gap(next.x())?.max(0.0);
        let gap_change = obj.gap_change(st.x(), next.x())?;
        let gamma_change = gap_change * spec.gamma_divided_difference(gap, gap_next);
        let beta = spec.params.beta;
        let h_change = 2.0
            * st
                .s()
                .iter()
                .zip(next.s())
                .zip(&grad)
                .map(|((s, sn), g)| spec.h_difference(*sn, *s, beta * (g * g - s)))
                .sum::<f64>();
        Ok(Self {
            eta: spec.params.step_size(u),
            state: st.clone(),
            next,
            u,
            grad,
            gap,
            gap_next,
            gap_change,
            gamma_change,
            h_change,
            delta_v: gamma_change + h_change,
        })
    }
}

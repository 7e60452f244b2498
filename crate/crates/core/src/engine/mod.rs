//! The RMSProp iteration with a bounded step-size perturbation:
//!
//! ```text
//! s+_i = (1 - beta) s_i + beta g_i^2
//! x+_i = x_i - (eta0 + u) g_i / (epsilon + sqrt(s+_i))
//! ```

mod schedule;
mod trace;

pub use schedule::Schedule;
pub use trace::{fmt_f64, write_trace_csv, TraceRecord, TraceWriter, MAX_STATE_COLUMNS_DIM};

use thiserror::Error;

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::types::{max_abs, validate_params, AlgoParams, State, StepInput};

/// Trajectories are aborted once `||(x - x*, s)||_inf` exceeds this.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Setup(#[from] Error),
    #[error("divergence guard tripped at step {t} (resid_inf = {resid_inf:e})")]
    Diverged { t: u64, resid_inf: f64, last: Box<TraceRecord> },
    #[error("non-finite state at step {t}")]
    NonFinite { t: u64, last: Box<TraceRecord> },
}

impl RunError {
    /// The last record that passed all checks, if the run got that far.
    pub fn last_record(&self) -> Option<&TraceRecord> {
        match self {
            RunError::Setup(_) => None,
            RunError::Diverged { last, .. } | RunError::NonFinite { last, .. } => Some(last),
        }
    }
}

/// One iteration from `st` with input `u`.
pub fn step(p: &AlgoParams, obj: &Objective, st: &State, u: StepInput) -> Result<State> {
    validate_params(p, obj.smoothness()).map_err(Error::Precondition)?;
    if st.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            actual: st.dim(),
        });
    }
    let g = obj.grad(st.x())?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(advance(p, st, &g, u))
}

/// The iteration map given the gradient `g` at `st.x()`.
pub(crate) fn advance(p: &AlgoParams, st: &State, g: &[f64], u: StepInput) -> State {
    let eta = p.step_size(u);
    let mut x = st.x().to_vec();
    let mut s = st.s().to_vec();
    for i in 0..x.len() {
        s[i] = (1.0 - p.beta) * s[i] + p.beta * g[i] * g[i];
        x[i] -= eta * g[i] / (p.epsilon + s[i].sqrt());
    }
    State::from_parts(x, s)
}

fn record(obj: &Objective, t: u64, x: Vec<f64>, s: Vec<f64>, g: &[f64], u: StepInput) -> Result<TraceRecord> {
    let f_gap = obj.gap(&x)?;
    let y_inf = x.iter().zip(obj.x_star()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let resid_inf = y_inf.max(max_abs(&s));
    Ok(TraceRecord {
        t,
        x,
        s,
        u: u.value(),
        f_gap,
        grad_inf: max_abs(g),
        resid_inf,
    })
}

/// Runs `steps` iterations, handing each of the `steps + 1` records (starting
/// with `t = 0`) to `sink`. Returns the final record.
pub fn run_with<F: FnMut(&TraceRecord)>(
    p: &AlgoParams,
    obj: &Objective,
    init: &State,
    sched: &Schedule,
    steps: u64,
    mut sink: F,
) -> std::result::Result<TraceRecord, RunError> {
    validate_params(p, obj.smoothness()).map_err(Error::Precondition)?;
    sched.validate()?;
    if init.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            actual: init.dim(),
        }
        .into());
    }
    let mut st = init.clone();
    let mut g = obj.grad(st.x())?;
    let mut u = sched.value(0);
    let mut last = record(obj, 0, st.x().to_vec(), st.s().to_vec(), &g, u)?;
    sink(&last);
    for t in 1..=steps {
        let next = advance(p, &st, &g, u);
        if !next.is_finite() {
            return Err(RunError::NonFinite { t, last: Box::new(last) });
        }
        g = obj.grad(next.x())?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(RunError::NonFinite { t, last: Box::new(last) });
        }
        u = sched.value(t);
        let rec = record(obj, t, next.x().to_vec(), next.s().to_vec(), &g, u)?;
        if !(rec.resid_inf <= DIVERGENCE_GUARD) {
            return Err(RunError::Diverged {
                t,
                resid_inf: rec.resid_inf,
                last: Box::new(last),
            });
        }
        sink(&rec);
        st = next;
        last = rec;
    }
    Ok(last)
}

/// Runs `steps` iterations and collects all `steps + 1` records.
pub fn run(
    p: &AlgoParams,
    obj: &Objective,
    init: &State,
    sched: &Schedule,
    steps: u64,
) -> std::result::Result<Vec<TraceRecord>, RunError> {
    let mut out = Vec::with_capacity(steps.saturating_add(1).min(1 << 20) as usize);
    run_with(p, obj, init, sched, steps, |r| out.push(r.clone()))?;
    Ok(out)
}

//! Randomized and trajectory-based verification of every inequality.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Certificate, CertificateConstants, Region};
use crate::engine::{run_with, Schedule};
use crate::error::{Error, Result};
use crate::lyapunov::{LyapunovSpec, Transition};
use crate::objectives::Objective;
use crate::types::{euclidean_norm, max_abs, validate_params, AlgoParams, State, StepInput};

/// Names of the checked inequalities, in report order.
pub const INEQUALITIES: [&str; 11] = [
    "mean_value_identity",
    "xi_sandwich",
    "kappa_identity",
    "intermediate_bound",
    "refined_bound",
    "region_s1_bound",
    "region_s2_bound",
    "iss_decrease",
    "zero_input_strict_decrease",
    "h_sum_sandwich",
    "rho2_defining_max",
];

const MEAN_VALUE: usize = 0;
const XI_SANDWICH: usize = 1;
const KAPPA: usize = 2;
const INTERMEDIATE: usize = 3;
const REFINED: usize = 4;
const REGION_S1: usize = 5;
const REGION_S2: usize = 6;
const ISS: usize = 7;
const STRICT_DECREASE: usize = 8;
const H_SUM: usize = 9;
const RHO2_MAX: usize = 10;

/// Relative accuracy required of the two algebraic identities.
const IDENTITY_REL: f64 = 1e-10;

/// An inequality passes at a sample when `margin >= -max(rel |LHS|, abs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-9, abs: 1e-12 }
    }
}

impl Tolerance {
    pub fn allowance(&self, lhs: f64) -> f64 {
        (self.rel * lhs.abs()).max(self.abs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Number of random states.
    pub n: usize,
    /// `x - x*` is drawn from `[-x_range, x_range]^d` at the largest scale.
    pub x_range: f64,
    /// `s` is drawn from `[0, s_range]^d` at the largest scale.
    pub s_range: f64,
    pub u_max: f64,
    /// When set, sample `i` uses `u_levels[i % len]` instead of random inputs.
    pub u_levels: Option<Vec<f64>>,
    pub seed: u64,
    /// Number of trajectories whose every transition is also checked.
    pub trajectories: usize,
    pub trajectory_steps: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            x_range: 10.0,
            s_range: 10.0,
            u_max: 5.0,
            u_levels: None,
            seed: 0,
            trajectories: 4,
            trajectory_steps: 200,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSampler("n must be at least 1".into()));
        }
        for (name, v) in [("x_range", self.x_range), ("s_range", self.s_range)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSampler(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.u_max.is_finite() && self.u_max >= 0.0) {
            return Err(Error::InvalidSampler(format!("u_max must be finite and >= 0, got {}", self.u_max)));
        }
        if let Some(levels) = &self.u_levels {
            if levels.is_empty() {
                return Err(Error::InvalidSampler("u_levels must not be empty".into()));
            }
            if let Some(v) = levels.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidSampler(format!("u level {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// The sample at which an inequality was tightest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDigest {
    /// Random samples are numbered `0..n`, trajectory transitions follow.
    pub sample: u64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub u: f64,
    #[serde(with = "extended_f64")]
    pub lhs: f64,
    #[serde(with = "extended_f64")]
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityStats {
    pub name: String,
    pub checked: u64,
    pub passed: u64,
    /// Smallest `RHS - LHS` seen.
    #[serde(with = "extended_f64")]
    pub worst_margin: f64,
    /// Smallest margin divided by its allowance (or the raw margin when the
    /// allowance is zero); the sample with this value is `worst_case`.
    #[serde(with = "extended_f64")]
    pub worst_normalized: f64,
    pub worst_case: Option<CaseDigest>,
}

impl InequalityStats {
    fn empty(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checked: 0,
            passed: 0,
            worst_margin: f64::INFINITY,
            worst_normalized: f64::INFINITY,
            worst_case: None,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.checked
    }

    fn sort_key(&self) -> (f64, u64) {
        let idx = self.worst_case.as_ref().map_or(u64::MAX, |c| c.sample);
        let v = if self.worst_normalized.is_nan() { f64::NEG_INFINITY } else { self.worst_normalized };
        (v, idx)
    }

    /// Associative and commutative: counts add, the worst case is the one with
    /// the smaller normalized margin, ties going to the lower sample index.
    pub fn merge(mut self, other: Self) -> Self {
        self.checked += other.checked;
        self.passed += other.passed;
        self.worst_margin = nan_min(self.worst_margin, other.worst_margin);
        let (a, b) = (self.sort_key(), other.sort_key());
        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
            self.worst_normalized = other.worst_normalized;
            self.worst_case = other.worst_case;
        }
        self
    }
}

/// Finite values as JSON numbers, the rest as the strings `"inf"`, `"-inf"`, `"nan"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            ser.serialize_f64(*v)
        } else if v.is_nan() {
            ser.serialize_str("nan")
        } else if *v > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// One evaluated inequality at one sample.
struct Outcome {
    margin: f64,
    allowance: f64,
    passed: bool,
    lhs: f64,
    rhs: f64,
}

impl Outcome {
    fn bound(lhs: f64, rhs: f64, tol: &Tolerance) -> Self {
        let margin = rhs - lhs;
        let allowance = tol.allowance(lhs);
        Self {
            margin,
            allowance,
            passed: margin >= -allowance,
            lhs,
            rhs,
        }
    }

    fn normalized(&self) -> f64 {
        if self.allowance > 0.0 {
            self.margin / self.allowance
        } else {
            self.margin
        }
    }
}

#[derive(Clone)]
struct Accumulator(Vec<InequalityStats>);

impl Accumulator {
    fn new() -> Self {
        Self(INEQUALITIES.iter().map(|n| InequalityStats::empty(n)).collect())
    }

    fn record(&mut self, which: usize, sample: u64, st: &State, u: f64, o: Outcome) {
        let stats = &mut self.0[which];
        stats.checked += 1;
        stats.passed += o.passed as u64;
        stats.worst_margin = nan_min(stats.worst_margin, o.margin);
        let norm = o.normalized();
        let key = if norm.is_nan() { f64::NEG_INFINITY } else { norm };
        let current = stats.sort_key();
        if key < current.0 || (key == current.0 && sample < current.1) {
            stats.worst_normalized = norm;
            stats.worst_case = Some(CaseDigest {
                sample,
                x: st.x().to_vec(),
                s: st.s().to_vec(),
                u,
                lhs: o.lhs,
                rhs: o.rhs,
            });
        }
    }

    fn merge(self, other: Self) -> Self {
        Self(self.0.into_iter().zip(other.0).map(|(a, b)| a.merge(b)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub objective: String,
    pub params: AlgoParams,
    pub q: f64,
    pub seed: u64,
    pub tolerance: Tolerance,
    pub sampler: SamplerConfig,
    /// Random states checked.
    pub samples: u64,
    /// Trajectory transitions checked.
    pub trajectory_samples: u64,
    pub spec: LyapunovSpec,
    pub constants: CertificateConstants,
    pub inequalities: Vec<InequalityStats>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.inequalities.iter().all(InequalityStats::all_passed)
    }

    pub fn get(&self, name: &str) -> Option<&InequalityStats> {
        self.inequalities.iter().find(|s| s.name == name)
    }

    /// Fixed-width text table, one row per inequality.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "objective {}  samples {} + {} trajectory  seed {}",
            self.objective, self.samples, self.trajectory_samples, self.seed
        );
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>9} {:>14} {:>14}  status",
            "inequality", "checked", "passed", "worst_margin", "normalized"
        );
        for s in &self.inequalities {
            let _ = writeln!(
                out,
                "{:<28} {:>9} {:>9} {:>14.6e} {:>14.6e}  {}",
                s.name,
                s.checked,
                s.passed,
                s.worst_margin,
                s.worst_normalized,
                if s.all_passed() { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

/// Checks every inequality on `sampler.n` random states and on every
/// transition of `sampler.trajectories` trajectories driven by random bounded
/// inputs. Refuses to run when the parameter preconditions fail.
pub fn verify_suite(
    p: &AlgoParams,
    obj: &Objective,
    q: f64,
    sampler: &SamplerConfig,
    tol: Tolerance,
) -> Result<VerificationReport> {
    validate_params(p, obj.smoothness()).map_err(Error::Precondition)?;
    sampler.validate()?;
    let cert = Certificate::new(p, obj, q)?;

    let random = (0..sampler.n)
        .into_par_iter()
        .map(|i| -> Result<Accumulator> {
            let mut rng = sample_rng(sampler.seed, i as u64);
            let (st, boundary) = draw_state(&mut rng, obj, &cert, sampler, i);
            let u = draw_input(&mut rng, sampler, i);
            let mut acc = Accumulator::new();
            check_all(&cert, obj, &st, u, boundary, &mut rng, i as u64, &tol, &mut acc)?;
            Ok(acc)
        })
        .try_reduce(Accumulator::new, |a, b| Ok(a.merge(b)))?;

    let mut transitions: Vec<(u64, State, f64)> = Vec::new();
    for k in 0..sampler.trajectories {
        let mut rng = sample_rng(sampler.seed, (sampler.n + k) as u64);
        let (init, _) = draw_state(&mut rng, obj, &cert, sampler, 0);
        let sched = Schedule::RandomBounded {
            u_max: sampler.u_max,
            seed: sampler.seed.wrapping_add(k as u64),
        };
        let base = sampler.n as u64 + k as u64 * sampler.trajectory_steps;
        let mut states = Vec::new();
        // a guard trip ends the trajectory; the transitions before it are still checked
        let _ = run_with(p, obj, &init, &sched, sampler.trajectory_steps, |rec| {
            if rec.t < sampler.trajectory_steps {
                states.push((base + rec.t, State::from_parts(rec.x.clone(), rec.s.clone()), rec.u));
            }
        });
        transitions.extend(states);
    }
    let trajectory_samples = transitions.len() as u64;
    let along = transitions
        .par_iter()
        .map(|(idx, st, u)| -> Result<Accumulator> {
            let mut rng = sample_rng(sampler.seed, *idx);
            let mut acc = Accumulator::new();
            check_all(&cert, obj, st, *u, false, &mut rng, *idx, &tol, &mut acc)?;
            Ok(acc)
        })
        .try_reduce(Accumulator::new, |a, b| Ok(a.merge(b)))?;

    Ok(VerificationReport {
        objective: obj.descriptor().label(),
        params: *p,
        q,
        seed: sampler.seed,
        tolerance: tol,
        sampler: sampler.clone(),
        samples: sampler.n as u64,
        trajectory_samples,
        spec: cert.spec,
        constants: cert.consts,
        inequalities: random.merge(along).0,
    })
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Four regimes in rotation: uniform, log-uniform with zeroed coordinates,
/// near-equilibrium, and the boundary between the two regions. The flag marks
/// boundary states.
fn draw_state(rng: &mut ChaCha8Rng, obj: &Objective, cert: &Certificate, cfg: &SamplerConfig, i: usize) -> (State, bool) {
    let d = obj.dim();
    let (rx, rs) = (cfg.x_range, cfg.s_range);
    let (y, s, boundary): (Vec<f64>, Vec<f64>, bool) = match i % 4 {
        0 => (
            (0..d).map(|_| rng.random_range(-rx..=rx)).collect(),
            (0..d).map(|_| rng.random_range(0.0..=rs)).collect(),
            false,
        ),
        1 => {
            let mut log_coord = |r: f64, signed: bool| {
                if rng.random_bool(0.2) {
                    return 0.0;
                }
                let v = r * 10f64.powf(rng.random_range(-12.0..=0.0));
                if signed && rng.random_bool(0.5) {
                    -v
                } else {
                    v
                }
            };
            let y = (0..d).map(|_| log_coord(rx, true)).collect();
            let s = (0..d).map(|_| log_coord(rs, false)).collect();
            (y, s, false)
        }
        2 => {
            let scale = 10f64.powf(rng.random_range(-8.0..=0.0));
            (
                (0..d).map(|_| scale * rng.random_range(-1.0..=1.0)).collect(),
                (0..d).map(|_| scale * rng.random_range(0.0..=1.0)).collect(),
                false,
            )
        }
        _ => {
            let scale = 10f64.powf(rng.random_range(-3.0..=0.0));
            let y: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-rx..=rx) / 5.0).collect();
            let edge = (obj.smoothness() * euclidean_norm(&y)).powf(2.0 + 2.0 * cert.consts.q);
            let mut s: Vec<f64> = (0..d).map(|_| edge * rng.random_range(0.0..=1.0)).collect();
            s[rng.random_range(0..d)] = edge;
            (y, s, true)
        }
    };
    let x = y.iter().zip(obj.x_star()).map(|(a, b)| a + b).collect();
    (State::from_parts(x, s), boundary)
}

fn draw_input(rng: &mut ChaCha8Rng, cfg: &SamplerConfig, i: usize) -> f64 {
    match &cfg.u_levels {
        Some(levels) => levels[i % levels.len()],
        None if i.is_multiple_of(3) || cfg.u_max == 0.0 => 0.0,
        None => rng.random_range(0.0..=cfg.u_max),
    }
}

#[allow(clippy::too_many_arguments)]
fn check_all(
    cert: &Certificate,
    obj: &Objective,
    st: &State,
    u: f64,
    boundary: bool,
    rng: &mut ChaCha8Rng,
    idx: u64,
    tol: &Tolerance,
    acc: &mut Accumulator,
) -> Result<()> {
    let tr = Transition::new(&cert.spec, obj, st, StepInput::new(u)?)?;
    let dv = tr.delta_v;

    let xi = cert.solve_xi(&tr)?;
    let resid = cert.xi_residual(&tr, xi);
    acc.record(MEAN_VALUE, idx, st, u, identity(resid, 1.0));

    let (lower, upper) = cert.bound_xi(max_abs(&tr.grad), u);
    let (lo_margin, hi_margin) = (xi - lower, upper - xi);
    let allowance = tol.allowance(xi);
    let tight = if lo_margin <= hi_margin { lower } else { upper };
    let margin = lo_margin.min(hi_margin);
    acc.record(
        XI_SANDWICH,
        idx,
        st,
        u,
        Outcome {
            margin,
            allowance,
            passed: margin >= -allowance,
            lhs: xi,
            rhs: tight,
        },
    );

    let mut worst_kappa: Option<Outcome> = None;
    for i in 0..cert.spec.dim {
        let k = cert.kappa(&tr, xi, i);
        let kr = cert.kappa_rearranged(&tr, xi, i);
        let o = identity((k - kr).abs(), kappa_scale(cert, &tr, xi, i));
        let o = Outcome { lhs: k, rhs: kr, ..o };
        if worst_kappa.as_ref().is_none_or(|w| o.normalized() < w.normalized()) {
            worst_kappa = Some(o);
        }
    }
    if let Some(o) = worst_kappa {
        acc.record(KAPPA, idx, st, u, o);
    }

    acc.record(INTERMEDIATE, idx, st, u, Outcome::bound(dv, cert.intermediate_rhs(&tr, xi), tol));

    let s_inf = max_abs(st.s());
    let g_inf = max_abs(&tr.grad);
    acc.record(REFINED, idx, st, u, Outcome::bound(dv, cert.refined_rhs(s_inf, g_inf, u), tol));

    let y_inf = st
        .x()
        .iter()
        .zip(obj.x_star())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let region = cert.region(obj, st.x(), st.s());
    for (r, which) in [(Region::S1, REGION_S1), (Region::S2, REGION_S2)] {
        if r == region || boundary {
            acc.record(which, idx, st, u, Outcome::bound(dv, cert.region_rhs(r, s_inf, y_inf, u), tol));
        }
    }

    let iss = cert.check_iss_decrease(obj, &tr);
    acc.record(ISS, idx, st, u, Outcome::bound(dv, dv + iss.global_margin, tol));

    let at_equilibrium = s_inf == 0.0 && y_inf == 0.0;
    if u == 0.0 && !at_equilibrium {
        acc.record(
            STRICT_DECREASE,
            idx,
            st,
            u,
            Outcome {
                margin: -dv,
                allowance: 0.0,
                passed: dv < 0.0,
                lhs: dv,
                rhs: 0.0,
            },
        );
    }

    let spec = &cert.spec;
    let h_max = spec.h_unchecked(s_inf);
    let h_sum = 2.0 * st.s().iter().map(|v| spec.h_unchecked(*v)).sum::<f64>();
    let upper_h = 2.0 * spec.dim as f64 * h_max;
    let (m_lo, m_hi) = (h_sum - h_max, upper_h - h_sum);
    let allowance = tol.allowance(h_sum);
    acc.record(
        H_SUM,
        idx,
        st,
        u,
        Outcome {
            margin: m_lo.min(m_hi),
            allowance,
            passed: m_lo.min(m_hi) >= -allowance,
            lhs: h_sum,
            rhs: if m_lo <= m_hi { h_max } else { upper_h },
        },
    );

    let s_m = if rng.random_bool(0.5) {
        rng.random_range(0.0..=cert.rho2_argmin(g_inf) * 4.0 + 1e-300)
    } else {
        10f64.powf(rng.random_range(-12.0..=6.0))
    };
    let rho2 = cert.rho2(g_inf);
    let value = cert.rho2_objective(s_m, g_inf);
    let margin = value - rho2;
    let allowance = IDENTITY_REL * rho2.max(1.0);
    acc.record(
        RHO2_MAX,
        idx,
        st,
        u,
        Outcome {
            margin,
            allowance,
            passed: margin >= -allowance,
            lhs: rho2,
            rhs: value,
        },
    );
    Ok(())
}

/// `err <= 1e-10 scale`, reported as margin `1e-10 scale - err` with no extra allowance.
fn identity(err: f64, scale: f64) -> Outcome {
    let margin = IDENTITY_REL * scale - err;
    Outcome {
        margin,
        allowance: 0.0,
        passed: margin >= 0.0,
        lhs: err,
        rhs: IDENTITY_REL * scale,
    }
}

/// Sum of the magnitudes of the three terms of `kappa_i`; the scale against
/// which the two evaluation orders are compared.
fn kappa_scale(cert: &Certificate, tr: &Transition, xi: f64, i: usize) -> f64 {
    let eps = cert.spec.params.epsilon;
    let gp = cert.spec.gamma_prime_unchecked(xi);
    let a = eps + tr.state.s()[i].sqrt();
    let b = eps + tr.next.s()[i].sqrt();
    tr.eta * gp * a * b + tr.eta * tr.eta * gp * cert.spec.smoothness / 2.0 * a + cert.spec.params.beta * b * b
}

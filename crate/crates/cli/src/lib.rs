//! Experiment harness: trajectories, certificate verification and constant-input sweeps.

pub mod config;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use rmsprop_iss::engine::fmt_f64;
use rmsprop_iss::{
    make_spec, run_with, verify_suite, Certificate, Error, ParamViolation, RunError, Schedule, State, TraceRecord,
    TraceWriter, VerificationReport,
};
use serde::{Deserialize, Serialize};

pub use config::{Command, ExperimentConfig, InitSpec, Overrides, ParamsConfig, SweepConfig};

/// Why a command did not succeed; each kind has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Precondition(ParamViolation),
    Diverged(String),
    Verification(Vec<String>),
    Io(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Diverged(_) => 4,
            Failure::Verification(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Precondition(v) => write!(f, "parameter precondition violated: {v}"),
            Failure::Diverged(m) => write!(f, "divergence: {m}"),
            Failure::Verification(names) => write!(f, "verification failed: {}", names.join(", ")),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(v) => Failure::Precondition(v),
            Error::Io(m) => Failure::Io(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Step at which the trajectory was aborted.
    pub t: u64,
    pub reason: String,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    /// The last record written; at `t = steps` unless the run diverged.
    pub final_record: TraceRecord,
    pub final_resid_inf: f64,
    pub max_resid_inf: f64,
    pub v_final: f64,
    /// First `t` with `f_gap <= gap_tol`.
    pub steps_to_tolerance: Option<u64>,
    pub u_max: f64,
    /// `alpha_V^-1(chi_V(u_max))`; absent when it exceeds the floating-point range.
    pub iss_bound: Option<f64>,
    pub diverged: Option<Divergence>,
}

/// Writes `trace.csv` and `summary.json` into `cfg.out`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunSummary, Failure> {
    let obj = cfg.objective()?;
    let p = cfg.algo_params(&obj)?;
    let init = cfg.init.build(&obj)?;
    let cert = Certificate::new(&p, &obj, cfg.q)?;
    let spec = make_spec(&p, obj.smoothness(), obj.dim())?;
    fs::create_dir_all(&cfg.out)?;

    let preamble = cfg.to_pretty_json();
    let file = BufWriter::new(File::create(cfg.out.join("trace.csv"))?);
    let mut writer = TraceWriter::new(file, obj.dim(), Some(&preamble))?;
    let mut write_error = None;
    let mut max_resid = 0.0_f64;
    let mut steps_to_tol = None;
    let outcome = run_with(&p, &obj, &init, &cfg.schedule, cfg.steps, |rec| {
        if write_error.is_none() {
            write_error = writer.write(rec).err();
        }
        max_resid = max_resid.max(rec.resid_inf);
        if steps_to_tol.is_none() && rec.f_gap <= cfg.gap_tol {
            steps_to_tol = Some(rec.t);
        }
    });
    let mut file = writer.finish()?;
    file.flush()?;
    if let Some(e) = write_error {
        return Err(e.into());
    }

    let (last, diverged) = match outcome {
        Ok(last) => (last, None),
        Err(RunError::Setup(e)) => return Err(e.into()),
        Err(e) => {
            let last = e.last_record().cloned().expect("guard trips carry the last record");
            let t = match &e {
                RunError::Diverged { t, .. } | RunError::NonFinite { t, .. } => *t,
                RunError::Setup(_) => unreachable!(),
            };
            (last, Some(Divergence { t, reason: e.to_string() }))
        }
    };
    let final_state = State::new(last.x.clone(), last.s.clone())?;
    let u_max = cfg.schedule.u_max();
    let bound = cert.alpha_inverse(cert.chi_v(u_max));
    let summary = RunSummary {
        config: cfg.clone(),
        final_resid_inf: last.resid_inf,
        max_resid_inf: max_resid,
        v_final: spec.value(&obj, &final_state)?,
        steps_to_tolerance: steps_to_tol,
        u_max,
        iss_bound: bound.is_finite().then_some(bound),
        diverged: diverged.clone(),
        final_record: last,
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    match diverged {
        Some(d) => Err(Failure::Diverged(format!("{} at t = {}", d.reason, d.t))),
        None => Ok(summary),
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: ExperimentConfig,
    pub report: VerificationReport,
}

/// Runs the verification suite and writes `report.json`. The report is
/// returned whether or not every inequality passed; see [`check_report`].
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerificationReport, Failure> {
    let obj = cfg.objective()?;
    let p = cfg.algo_params(&obj)?;
    let report = verify_suite(&p, &obj, cfg.q, &cfg.sampler, cfg.tolerance)?;
    fs::create_dir_all(&cfg.out)?;
    write_json(
        &cfg.out.join("report.json"),
        &ReportFile {
            config: cfg.clone(),
            report: report.clone(),
        },
    )?;
    Ok(report)
}

/// [`Failure::Verification`] naming the failed inequalities, if any.
pub fn check_report(report: &VerificationReport) -> Result<(), Failure> {
    let failed: Vec<String> = report
        .inequalities
        .iter()
        .filter(|s| !s.all_passed())
        .map(|s| s.name.clone())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub u: f64,
    /// First `t` with `f_gap <= gap_tol`, if reached.
    pub steps: Option<u64>,
    /// Largest `resid_inf` over the last 10% of the trajectory, with values
    /// below the floor resolution reported as 0. Infinite for diverged runs.
    pub floor: f64,
}

/// One trajectory per constant input level; writes `sweep.csv` with columns
/// `u,steps,floor`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, Failure> {
    let obj = cfg.objective()?;
    let p = cfg.algo_params(&obj)?;
    let init = cfg.init.build(&obj)?;
    let tail_start = cfg.steps - cfg.steps / 10;
    let rows = cfg
        .sweep
        .u_levels
        .par_iter()
        .map(|&u| -> Result<SweepRow, Failure> {
            let mut steps = None;
            let mut floor = 0.0_f64;
            let outcome = run_with(&p, &obj, &init, &Schedule::Constant { c: u }, cfg.steps, |rec| {
                if steps.is_none() && rec.f_gap <= cfg.gap_tol {
                    steps = Some(rec.t);
                }
                if rec.t >= tail_start {
                    floor = floor.max(rec.resid_inf);
                }
            });
            match outcome {
                Ok(_) => {}
                Err(RunError::Setup(e)) => return Err(e.into()),
                Err(_) => floor = f64::INFINITY,
            }
            if floor < cfg.sweep.floor_resolution {
                floor = 0.0;
            }
            Ok(SweepRow { u, steps, floor })
        })
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(&cfg.out)?;
    let mut out = BufWriter::new(File::create(cfg.out.join("sweep.csv"))?);
    for line in cfg.to_pretty_json().lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "u,steps,floor")?;
    for r in &rows {
        let steps = r.steps.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", fmt_f64(r.u), steps, fmt_f64(r.floor))?;
    }
    out.flush()?;
    Ok(rows)
}

/// Spearman rank correlation with average ranks for ties. `None` when fewer
/// than two points are given or either ranking is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

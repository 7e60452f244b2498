use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmsprop_iss::{
    validate_params, AlgoParams, Objective, ObjectiveDescriptor, SamplerConfig, Schedule, State, Tolerance, DEFAULT_Q,
};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// `eta1` may be omitted, in which case it splits the slack `2 epsilon / L - eta0` evenly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub beta: f64,
    pub epsilon: f64,
    pub eta0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
}

impl ParamsConfig {
    pub fn resolve(&self, smoothness: f64) -> AlgoParams {
        match self.eta1 {
            Some(eta1) => AlgoParams::new(self.beta, self.epsilon, self.eta0, eta1),
            None => AlgoParams::with_default_eta1(self.beta, self.epsilon, self.eta0, smoothness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// `(x*, 0)`.
    Equilibrium,
    State { x: Vec<f64>, s: Vec<f64> },
    /// `x - x*` uniform on `[-x_range, x_range]^d`, `s` uniform on `[0, s_range]^d`.
    /// Falls back to the top-level seed when `seed` is absent.
    Random {
        #[serde(default = "ten")]
        x_range: f64,
        #[serde(default = "ten")]
        s_range: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Random {
            x_range: 10.0,
            s_range: 10.0,
            seed: None,
        }
    }
}

impl InitSpec {
    pub fn build(&self, obj: &Objective) -> Result<State, Failure> {
        let d = obj.dim();
        let state = match self {
            InitSpec::Equilibrium => State::at_rest(obj.x_star().to_vec()),
            InitSpec::State { x, s } => {
                if x.len() != d {
                    return Err(Failure::config(format!("init.x has length {}, objective has dimension {d}", x.len())));
                }
                State::new(x.clone(), s.clone())
            }
            InitSpec::Random { x_range, s_range, seed } => {
                let seed = seed.ok_or_else(|| Failure::config("random init needs a seed"))?;
                if !(x_range.is_finite() && *x_range >= 0.0 && s_range.is_finite() && *s_range >= 0.0) {
                    return Err(Failure::config("init ranges must be finite and nonnegative"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = obj
                    .x_star()
                    .iter()
                    .map(|c| c + rng.random_range(-x_range..=*x_range))
                    .collect();
                let s = (0..d).map(|_| rng.random_range(0.0..=*s_range)).collect();
                State::new(x, s)
            }
        };
        state.map_err(|e| Failure::config(format!("init: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Constant step-size inputs, one trajectory each.
    #[serde(default = "default_u_levels")]
    pub u_levels: Vec<f64>,
    /// Floors below this are reported as 0.
    #[serde(default = "default_floor_resolution")]
    pub floor_resolution: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            u_levels: default_u_levels(),
            floor_resolution: default_floor_resolution(),
        }
    }
}

/// Everything one `run`, `verify` or `sweep` invocation needs. Missing fields
/// take the defaults below; the resolved form is embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveDescriptor,
    pub params: ParamsConfig,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Seed for every randomized component that does not carry its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub tolerance: Tolerance,
    /// `f_gap` threshold for the steps-to-tolerance statistic.
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn ten() -> f64 {
    10.0
}

fn default_u_levels() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 5.0]
}

fn default_floor_resolution() -> f64 {
    1e-12
}

fn default_schedule() -> Schedule {
    Schedule::Zero
}

fn default_steps() -> u64 {
    10_000
}

fn default_q() -> f64 {
    DEFAULT_Q
}

fn default_gap_tol() -> f64 {
    1e-3
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    /// Reference parameters `beta = 0.5, epsilon = 1, eta0 = eta1 = 0.1` on a
    /// 10-dimensional quadratic with condition number 10.
    fn default() -> Self {
        Self {
            objective: ObjectiveDescriptor::Quadratic {
                dim: 10,
                condition: 10.0,
                smoothness: 1.0,
                seed: 1,
            },
            params: ParamsConfig {
                beta: 0.5,
                epsilon: 1.0,
                eta0: 0.1,
                eta1: Some(0.1),
            },
            schedule: default_schedule(),
            steps: default_steps(),
            init: InitSpec::default(),
            q: DEFAULT_Q,
            seed: Some(0),
            sampler: SamplerConfig::default(),
            tolerance: Tolerance::default(),
            gap_tol: default_gap_tol(),
            sweep: SweepConfig::default(),
            out: default_out(),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

/// Which command the configuration is resolved for; `--tol` means the
/// inequality tolerance for `verify` and the `f_gap` threshold otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Verify,
    Sweep,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    /// Applies overrides and propagates the top-level seed into the random
    /// init and the sampler, so the result carries every seed explicitly.
    pub fn resolve(mut self, cmd: Command, ov: &Overrides) -> Result<Self, Failure> {
        if let Some(seed) = ov.seed {
            self.seed = Some(seed);
        }
        if let Some(out) = &ov.out {
            self.out = out.clone();
        }
        if let Some(tol) = ov.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Failure::config(format!("--tol must be positive, got {tol}")));
            }
            match cmd {
                Command::Verify => self.tolerance.rel = tol,
                Command::Run | Command::Sweep => self.gap_tol = tol,
            }
        }
        if let InitSpec::Random { seed, .. } = &mut self.init {
            if seed.is_none() || ov.seed.is_some() {
                *seed = self.seed;
            }
        }
        if let (Command::Verify, Some(seed)) = (cmd, self.seed) {
            self.sampler.seed = seed;
        }
        if cmd != Command::Verify && matches!(self.init, InitSpec::Random { seed: None, .. }) {
            return Err(Failure::config("random init requires a seed (config `seed` or --seed)"));
        }
        if !(self.gap_tol.is_finite() && self.gap_tol > 0.0) {
            return Err(Failure::config("gap_tol must be positive"));
        }
        if !(self.tolerance.rel >= 0.0 && self.tolerance.abs >= 0.0) {
            return Err(Failure::config("tolerance entries must be nonnegative"));
        }
        if self.sweep.u_levels.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(Failure::config("sweep u_levels must be finite and nonnegative"));
        }
        self.schedule.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(self)
    }

    pub fn objective(&self) -> Result<Objective, Failure> {
        self.objective.build().map_err(|e| Failure::config(e.to_string()))
    }

    /// Resolved parameters, checked against the preconditions.
    pub fn algo_params(&self, obj: &Objective) -> Result<AlgoParams, Failure> {
        let p = self.params.resolve(obj.smoothness());
        validate_params(&p, obj.smoothness()).map_err(Failure::Precondition)?;
        Ok(p)
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

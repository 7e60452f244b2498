//! Bounded, nonnegative step-size perturbation schedules `u(t)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::StepInput;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Zero,
    Constant {
        c: f64,
    },
    /// `c * factor^floor(t / interval)`.
    StepDecay {
        c: f64,
        interval: u64,
        factor: f64,
    },
    /// `amplitude * (1 + sin(2 pi t / period)) / 2`, which ranges over `[0, amplitude]`.
    Sinusoid {
        amplitude: f64,
        period: f64,
    },
    /// Independent uniform draws on `[0, u_max]`, random-access in `t`.
    RandomBounded {
        u_max: f64,
        seed: u64,
    },
    /// `levels[k]` on the `k`-th interval delimited by the strictly increasing
    /// `switch_times`; `levels` has one more entry than `switch_times`.
    PiecewiseAdversarial {
        levels: Vec<f64>,
        switch_times: Vec<u64>,
    },
}

impl Schedule {
    /// Alternates between `0` and `u_max` at the given times, starting at `0`.
    pub fn adversarial(u_max: f64, switch_times: Vec<u64>) -> Self {
        let levels = (0..=switch_times.len())
            .map(|k| if k % 2 == 0 { 0.0 } else { u_max })
            .collect();
        Schedule::PiecewiseAdversarial { levels, switch_times }
    }

    /// One schedule of every kind with supremum `u_max`.
    pub fn catalog(u_max: f64, seed: u64) -> Vec<Schedule> {
        vec![
            Schedule::Zero,
            Schedule::Constant { c: u_max },
            Schedule::StepDecay {
                c: u_max,
                interval: 1000,
                factor: 0.5,
            },
            Schedule::Sinusoid {
                amplitude: u_max,
                period: 250.0,
            },
            Schedule::RandomBounded { u_max, seed },
            Schedule::adversarial(u_max, vec![100, 1_000, 1_500, 10_000, 12_000, 50_000, 50_001, 80_000]),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let level = |v: f64, what: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSchedule(format!("{what} must be finite and nonnegative, got {v}")))
            }
        };
        match self {
            Schedule::Zero => Ok(()),
            Schedule::Constant { c } => level(*c, "c"),
            Schedule::StepDecay { c, interval, factor } => {
                level(*c, "c")?;
                if *interval == 0 {
                    return Err(Error::InvalidSchedule("interval must be >= 1".into()));
                }
                if !(0.0..=1.0).contains(factor) {
                    return Err(Error::InvalidSchedule(format!("factor {factor} must lie in [0, 1]")));
                }
                Ok(())
            }
            Schedule::Sinusoid { amplitude, period } => {
                level(*amplitude, "amplitude")?;
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidSchedule("period must be positive".into()));
                }
                Ok(())
            }
            Schedule::RandomBounded { u_max, .. } => level(*u_max, "u_max"),
            Schedule::PiecewiseAdversarial { levels, switch_times } => {
                if levels.len() != switch_times.len() + 1 {
                    return Err(Error::InvalidSchedule(
                        "levels must have exactly one more entry than switch_times".into(),
                    ));
                }
                if switch_times.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSchedule("switch_times must be strictly increasing".into()));
                }
                levels.iter().try_for_each(|v| level(*v, "level"))
            }
        }
    }

    /// Declared supremum of `value`.
    pub fn u_max(&self) -> f64 {
        match self {
            Schedule::Zero => 0.0,
            Schedule::Constant { c } | Schedule::StepDecay { c, .. } => *c,
            Schedule::Sinusoid { amplitude, .. } => *amplitude,
            Schedule::RandomBounded { u_max, .. } => *u_max,
            Schedule::PiecewiseAdversarial { levels, .. } => levels.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `u(t)`. Assumes a validated schedule.
    pub fn value(&self, t: u64) -> StepInput {
        let u = match self {
            Schedule::Zero => 0.0,
            Schedule::Constant { c } => *c,
            Schedule::StepDecay { c, interval, factor } => {
                let k = t / interval;
                c * factor.powi(k.min(i32::MAX as u64) as i32)
            }
            Schedule::Sinusoid { amplitude, period } => {
                let phase = std::f64::consts::TAU * (t as f64 / period).fract();
                (amplitude * 0.5 * (1.0 + phase.sin())).clamp(0.0, *amplitude)
            }
            Schedule::RandomBounded { u_max, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                // one u64 per t: two 32-bit words
                rng.set_word_pos(2 * t as u128);
                let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                u_max * unit
            }
            Schedule::PiecewiseAdversarial { levels, switch_times } => {
                let k = switch_times.partition_point(|&s| s <= t);
                levels[k]
            }
        };
        StepInput::new(u).unwrap_or(StepInput::ZERO)
    }
}

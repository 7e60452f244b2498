//! Strongly convex, globally smooth test objectives with analytically known
//! modulus `mu`, smoothness `L`, minimizer `x*` and minimum `f*`.
//!
//! Quadratics use the convention `f(x) = 1/2 (x - x*)^T Q (x - x*) + f*`, so
//! `mu = lambda_min(Q)` and `L = lambda_max(Q)`. The regularized log-cosh
//! objective `f(x) = mu_reg/2 ||x - c||^2 + sum_i log cosh(x_i - c_i)` has
//! `mu = mu_reg` and `L = mu_reg + 1`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{euclidean_norm, max_abs};

/// JSON-serializable recipe for an [`Objective`]. Randomized parts are fully
/// determined by `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveDescriptor {
    /// Random rotation of a log-spaced spectrum in `[L / condition, L]`.
    Quadratic {
        dim: usize,
        condition: f64,
        #[serde(default = "unit")]
        smoothness: f64,
        seed: u64,
    },
    /// `Q = R^T R + mu0 I` with standard normal `R`.
    RandomSpd { dim: usize, mu0: f64, seed: u64 },
    /// Explicit symmetric positive definite matrix, row-major.
    QuadraticMatrix {
        q: Vec<Vec<f64>>,
        x_star: Vec<f64>,
        #[serde(default)]
        f_star: f64,
    },
    /// Regularized log-cosh with minimizer `shift`; the shift is drawn from
    /// `seed` unless given explicitly.
    LogCoshRegularized {
        dim: usize,
        mu_reg: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<f64>>,
    },
}

fn unit() -> f64 {
    1.0
}

impl ObjectiveDescriptor {
    pub fn label(&self) -> String {
        match self {
            ObjectiveDescriptor::Quadratic { dim, condition, .. } => {
                format!("quadratic(d={dim},cond={condition})")
            }
            ObjectiveDescriptor::RandomSpd { dim, mu0, .. } => format!("random_spd(d={dim},mu0={mu0})"),
            ObjectiveDescriptor::QuadraticMatrix { x_star, .. } => {
                format!("quadratic_matrix(d={})", x_star.len())
            }
            ObjectiveDescriptor::LogCoshRegularized { dim, mu_reg, .. } => {
                format!("logcosh(d={dim},mu={mu_reg})")
            }
        }
    }

    pub fn build(&self) -> Result<Objective> {
        Objective::from_descriptor(self.clone())
    }
}

#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    Quadratic { q: DMatrix<f64> },
    LogCoshRegularized { mu_reg: f64 },
}

/// A built objective. Immutable; `eval` and `grad` are pure.
#[derive(Debug, Clone)]
pub struct Objective {
    descriptor: ObjectiveDescriptor,
    kind: ObjectiveKind,
    mu: f64,
    smoothness: f64,
    x_star: Vec<f64>,
    f_star: f64,
}

/// Verdicts of the three smoothness / strong-convexity inequalities at a pair
/// of points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MuLVerdict {
    /// `||grad f(y) - grad f(x)|| <= L ||y - x||`
    pub lipschitz: bool,
    /// `2 mu (f(x) - f*) <= ||grad f(x)||^2`
    pub gradient_dominance: bool,
    /// `f(x) - f* >= ||grad f(x)||^2 / (2L)`
    pub gap_lower: bool,
}

impl MuLVerdict {
    pub fn all(&self) -> bool {
        self.lipschitz && self.gradient_dominance && self.gap_lower
    }
}

impl Objective {
    pub fn from_descriptor(descriptor: ObjectiveDescriptor) -> Result<Self> {
        match &descriptor {
            ObjectiveDescriptor::Quadratic {
                dim,
                condition,
                smoothness,
                seed,
            } => {
                let (dim, condition, smoothness) = (*dim, *condition, *smoothness);
                if dim == 0 {
                    return Err(Error::InvalidObjective("dimension must be >= 1".into()));
                }
                if !(condition.is_finite() && condition >= 1.0) {
                    return Err(Error::InvalidObjective(format!("condition {condition} must be >= 1")));
                }
                if dim == 1 && condition != 1.0 {
                    return Err(Error::InvalidObjective("a 1-d quadratic has condition 1".into()));
                }
                if !(smoothness.is_finite() && smoothness > 0.0) {
                    return Err(Error::InvalidObjective("smoothness must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let spectrum: Vec<f64> = (0..dim)
                    .map(|i| {
                        if dim == 1 {
                            smoothness
                        } else {
                            let frac = (dim - 1 - i) as f64 / (dim - 1) as f64;
                            smoothness * condition.powf(-frac)
                        }
                    })
                    .collect();
                let gauss = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let u = gauss.qr().q();
                let q = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spectrum)) * u.transpose();
                let x_star = uniform_vec(&mut rng, dim);
                let f_star = rng.random_range(-1.0..1.0);
                Self::quadratic(descriptor, symmetrize(q), x_star, f_star)
            }
            ObjectiveDescriptor::RandomSpd { dim, mu0, seed } => {
                let (dim, mu0) = (*dim, *mu0);
                if dim == 0 {
                    return Err(Error::InvalidObjective("dimension must be >= 1".into()));
                }
                if !(mu0.is_finite() && mu0 > 0.0) {
                    return Err(Error::InvalidObjective("mu0 must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let r = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let q = r.transpose() * &r + DMatrix::identity(dim, dim) * mu0;
                let x_star = uniform_vec(&mut rng, dim);
                let f_star = rng.random_range(-1.0..1.0);
                Self::quadratic(descriptor, symmetrize(q), x_star, f_star)
            }
            ObjectiveDescriptor::QuadraticMatrix { q, x_star, f_star } => {
                let dim = x_star.len();
                if dim == 0 || q.len() != dim || q.iter().any(|row| row.len() != dim) {
                    return Err(Error::InvalidObjective("q must be a square matrix matching x_star".into()));
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| q[i][j]);
                for i in 0..dim {
                    for j in 0..i {
                        let (a, b) = (m[(i, j)], m[(j, i)]);
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(Error::InvalidObjective("q must be symmetric".into()));
                        }
                    }
                }
                let (x_star, f_star) = (x_star.clone(), *f_star);
                Self::quadratic(descriptor, symmetrize(m), x_star, f_star)
            }
            ObjectiveDescriptor::LogCoshRegularized {
                dim,
                mu_reg,
                seed,
                shift,
            } => {
                let (dim, mu_reg) = (*dim, *mu_reg);
                if dim == 0 {
                    return Err(Error::InvalidObjective("dimension must be >= 1".into()));
                }
                if !(mu_reg.is_finite() && mu_reg > 0.0) {
                    return Err(Error::InvalidObjective("mu_reg must be positive".into()));
                }
                let shift = match shift {
                    Some(c) if c.len() != dim => {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            actual: c.len(),
                        })
                    }
                    Some(c) => c.clone(),
                    None => uniform_vec(&mut ChaCha8Rng::seed_from_u64(*seed), dim),
                };
                Ok(Self {
                    descriptor,
                    kind: ObjectiveKind::LogCoshRegularized { mu_reg },
                    mu: mu_reg,
                    smoothness: mu_reg + 1.0,
                    x_star: shift,
                    f_star: 0.0,
                })
            }
        }
    }

    fn quadratic(descriptor: ObjectiveDescriptor, q: DMatrix<f64>, x_star: Vec<f64>, f_star: f64) -> Result<Self> {
        if q.iter().chain(x_star.iter()).any(|v| !v.is_finite()) || !f_star.is_finite() {
            return Err(Error::InvalidObjective("non-finite entries".into()));
        }
        let eigen = SymmetricEigen::new(q.clone());
        let mu = eigen.eigenvalues.min();
        let smoothness = eigen.eigenvalues.max();
        if !(mu > 0.0) {
            return Err(Error::InvalidObjective(format!("q is not positive definite (lambda_min = {mu})")));
        }
        Ok(Self {
            descriptor,
            kind: ObjectiveKind::Quadratic { q },
            mu,
            smoothness,
            x_star,
            f_star,
        })
    }

    pub fn descriptor(&self) -> &ObjectiveDescriptor {
        &self.descriptor
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    /// Strong convexity modulus.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Gradient Lipschitz constant.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x_star).map(|(a, b)| a - b).collect()
    }

    /// `f(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.gap(x)? + self.f_star)
    }

    /// `f(x) - f*`, evaluated without forming `f(x)` first.
    pub fn gap(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let y = self.offset(x);
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { q } => 0.5 * quad_form(q, &y),
            ObjectiveKind::LogCoshRegularized { mu_reg } => y.iter().map(|z| 0.5 * mu_reg * z * z + log_cosh(*z)).sum(),
        })
    }

    /// `f(x_new) - f(x)`, evaluated from the step `x_new - x` so the result
    /// keeps its relative accuracy when the step is small.
    pub fn gap_change(&self, x: &[f64], x_new: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(x_new)?;
        let delta: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { q } => {
                let y = self.offset(x);
                let mut linear = 0.0;
                let mut curvature = 0.0;
                for i in 0..self.dim() {
                    let col = q.column(i);
                    let qy: f64 = col.iter().zip(&y).map(|(a, b)| a * b).sum();
                    let qd: f64 = col.iter().zip(&delta).map(|(a, b)| a * b).sum();
                    linear += qy * delta[i];
                    curvature += qd * delta[i];
                }
                linear + 0.5 * curvature
            }
            ObjectiveKind::LogCoshRegularized { mu_reg } => x
                .iter()
                .zip(&delta)
                .zip(&self.x_star)
                .map(|((xi, di), ci)| {
                    let z = xi - ci;
                    0.5 * mu_reg * di * (2.0 * z + di) + log_cosh_change(z, *di)
                })
                .sum(),
        })
    }

    /// Exact analytic gradient.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let y = self.offset(x);
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { q } => (0..self.dim())
                .map(|i| q.column(i).iter().zip(&y).map(|(a, b)| a * b).sum())
                .collect(),
            ObjectiveKind::LogCoshRegularized { mu_reg } => y.iter().map(|z| mu_reg * z + z.tanh()).collect(),
        })
    }

    /// Largest absolute deviation between the analytic gradient and central
    /// differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
    pub fn check_gradient_fd(&self, x: &[f64], h: f64) -> Result<f64> {
        let g = self.grad(x)?;
        let mut probe = x.to_vec();
        let mut worst = 0.0_f64;
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let up = self.eval(&probe)?;
            probe[i] = x[i] - h;
            let down = self.eval(&probe)?;
            probe[i] = x[i];
            worst = worst.max(((up - down) / (2.0 * h) - g[i]).abs());
        }
        Ok(worst)
    }

    /// Checks the Lipschitz-gradient bound at `(x, y)` and the two gap
    /// inequalities at `x`, each with relative tolerance `tol`. The Lipschitz
    /// check also allows the rounding error of the two gradient evaluations,
    /// which dominates when `x` and `y` nearly coincide.
    pub fn check_mu_l_bounds(&self, x: &[f64], y: &[f64], tol: f64) -> Result<MuLVerdict> {
        let gx = self.grad(x)?;
        let gy = self.grad(y)?;
        let diff: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let step: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let d = self.dim() as f64;
        let rounding = 4.0
            * d
            * f64::EPSILON
            * (euclidean_norm(&gx)
                + euclidean_norm(&gy)
                + self.smoothness * (euclidean_norm(&self.offset(x)) + euclidean_norm(&self.offset(y))));
        let lipschitz = euclidean_norm(&diff) <= self.smoothness * euclidean_norm(&step) * (1.0 + tol) + rounding;

        let gap = self.gap(x)?;
        let g2 = euclidean_norm(&gx).powi(2);
        let gradient_dominance = 2.0 * self.mu * gap <= g2 * (1.0 + tol);
        let gap_lower = gap >= g2 / (2.0 * self.smoothness) * (1.0 - tol);
        Ok(MuLVerdict {
            lipschitz,
            gradient_dominance,
            gap_lower,
        })
    }

    /// Infinity norm of the gradient.
    pub fn grad_inf(&self, x: &[f64]) -> Result<f64> {
        Ok(max_abs(&self.grad(x)?))
    }
}

impl Serialize for Objective {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Objective {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let descriptor = ObjectiveDescriptor::deserialize(deserializer)?;
        Objective::from_descriptor(descriptor).map_err(serde::de::Error::custom)
    }
}

/// The default objective catalog: dimensions {1, 2, 10}; quadratics with
/// condition numbers {1, 10, 100} (a 1-d quadratic only has condition 1) and
/// `L = 1`; regularized log-cosh with `mu_reg` in {0.1, 1}.
pub fn catalog() -> Vec<ObjectiveDescriptor> {
    let mut out = Vec::new();
    let mut seed = 0x5eed_0000_u64;
    for dim in [1usize, 2, 10] {
        for condition in [1.0, 10.0, 100.0] {
            if dim == 1 && condition != 1.0 {
                continue;
            }
            seed += 1;
            out.push(ObjectiveDescriptor::Quadratic {
                dim,
                condition,
                smoothness: 1.0,
                seed,
            });
        }
        for mu_reg in [0.1, 1.0] {
            seed += 1;
            out.push(ObjectiveDescriptor::LogCoshRegularized {
                dim,
                mu_reg,
                seed,
                shift: None,
            });
        }
    }
    out
}

fn uniform_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn symmetrize(q: DMatrix<f64>) -> DMatrix<f64> {
    (&q + q.transpose()) * 0.5
}

fn quad_form(q: &DMatrix<f64>, y: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| y[i] * q.column(i).iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// `log(cosh(z))` without overflow and with full relative accuracy near 0.
pub(crate) fn log_cosh(z: f64) -> f64 {
    let a = z.abs();
    if a < 1.0 {
        // cosh z - 1 = 2 sinh^2(z/2)
        (2.0 * (0.5 * a).sinh().powi(2)).ln_1p()
    } else {
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// `log cosh(z + d) - log cosh(z)` via `cosh(z + d) / cosh(z) = cosh d + tanh z sinh d`.
fn log_cosh_change(z: f64, d: f64) -> f64 {
    if d.abs() > 20.0 {
        return log_cosh(z + d) - log_cosh(z);
    }
    (2.0 * (0.5 * d).sinh().powi(2) + z.tanh() * d.sinh()).ln_1p()
}

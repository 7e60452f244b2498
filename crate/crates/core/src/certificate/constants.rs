use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::LyapunovSpec;
use crate::objectives::Objective;
use crate::roots::{bisect_increasing, expand_upper};

/// Default exponent of the state-space partition, the midpoint of `(0, 1/4)`.
pub const DEFAULT_Q: f64 = 0.125;

/// Every derived constant of the decrease argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateConstants {
    /// Strong convexity modulus of the objective the constants were built for.
    pub mu: f64,
    pub c_gamma: f64,
    pub c_l: f64,
    pub eta2: f64,
    pub a53: f64,
    pub a61: f64,
    pub a62: f64,
    pub a7: f64,
    pub c_m: f64,
    pub gamma_hat1: f64,
    pub gamma_hat2: f64,
    pub r_hat1: f64,
    pub r_hat2: f64,
    pub r_hat3: f64,
    pub r_hat4: f64,
    pub r_hat5: f64,
    pub q: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Root of `epsilon = z sqrt(r_hat4 z^(2q) + r_hat5)`.
    pub z_star: f64,
}

pub fn make_constants(spec: &LyapunovSpec, obj: &Objective, q: f64) -> Result<CertificateConstants> {
    if !(q > 0.0 && q < 0.25) {
        return Err(Error::ExponentOutOfRange(q));
    }
    if obj.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            actual: obj.dim(),
        });
    }
    let beta = spec.params.beta;
    let eps = spec.params.epsilon;
    let eta0 = spec.params.eta0;
    let eta1 = spec.params.eta1;
    let l = spec.smoothness;
    let d = spec.dim as f64;
    let mu = obj.mu();
    let gamma1 = spec.gamma1;

    let c_gamma = (8.0 + beta) / (9.0 / (1.0 - beta).sqrt() + 3.0);
    let c_l = l * d / beta;
    let eta2 = eta1 * eps * l / 2.0;
    let a53 = gamma1 * eps * c_l.sqrt() / 6.0;
    let a61 = (2.0 * (1.0 - beta)).sqrt() / 2.0;
    let a62 = (2.0 * beta).sqrt() / 2.0;
    let a7 = eps * a62 / 6.0;
    let c_m = 2.0 * eps * (l * c_l).sqrt() / (12.0 * beta * d.sqrt() + eta0 * gamma1 * eps * c_l.sqrt());
    let gamma_hat1 = gamma1 * d.sqrt() / (2.0 * mu).sqrt();
    let gamma_hat2 = gamma1 * c_l.sqrt() / std::f64::consts::SQRT_2;
    let r_hat1 = mu / d.sqrt();
    let r_hat2 = (l * l * d / (mu * mu)).powf(1.0 + q);
    let r_hat3 = (1.0 - beta) * r_hat2;
    let r_hat4 = r_hat3 * (l * l * d).powf(1.0 + q);
    let r_hat5 = beta * l * l * d;
    let eps1 = beta;
    let eps2 = (q * beta * (1.0 + q).powf(-(q + 1.0) / q)).sqrt();

    let lhs = |z: f64| z * (r_hat4 * z.powf(2.0 * q) + r_hat5).sqrt();
    let hi = expand_upper(lhs, eps, 1.0).ok_or(Error::RootNotBracketed { low: 0.0, high: f64::MAX })?;
    let z_star = bisect_increasing(lhs, eps, 0.0, hi, 1e-16, 400);

    Ok(CertificateConstants {
        mu,
        c_gamma,
        c_l,
        eta2,
        a53,
        a61,
        a62,
        a7,
        c_m,
        gamma_hat1,
        gamma_hat2,
        r_hat1,
        r_hat2,
        r_hat3,
        r_hat4,
        r_hat5,
        q,
        eps1,
        eps2,
        z_star,
    })
}

impl CertificateConstants {
    pub fn fields(&self) -> [(&'static str, f64); 20] {
        [
            ("mu", self.mu),
            ("c_gamma", self.c_gamma),
            ("c_L", self.c_l),
            ("eta2", self.eta2),
            ("a53", self.a53),
            ("a61", self.a61),
            ("a62", self.a62),
            ("a7", self.a7),
            ("c_m", self.c_m),
            ("gamma_hat1", self.gamma_hat1),
            ("gamma_hat2", self.gamma_hat2),
            ("r_hat1", self.r_hat1),
            ("r_hat2", self.r_hat2),
            ("r_hat3", self.r_hat3),
            ("r_hat4", self.r_hat4),
            ("r_hat5", self.r_hat5),
            ("q", self.q),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("z_star", self.z_star),
        ]
    }
}

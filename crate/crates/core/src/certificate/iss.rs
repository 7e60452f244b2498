//! The two-region analysis and the final decrease
//! `Delta V <= -alpha_V(||(x - x*, s)||_inf) + chi_V(u)`.

use serde::{Deserialize, Serialize};

use super::Certificate;
use crate::lyapunov::Transition;
use crate::objectives::Objective;
use crate::roots::{bisect_increasing, expand_upper};
use crate::types::{euclidean_norm, max_abs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VThresholds {
    pub v1: f64,
    pub v2: f64,
    pub v1_candidates: [f64; 2],
    pub v2_candidates: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFamily {
    pub psi11: f64,
    pub psi12: f64,
    pub psi21: f64,
    pub psi22: f64,
    pub psi23: f64,
}

/// `S1 = {||s||_inf >= (L ||x - x*||_2)^(2+2q)}` and its complement `S2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    S1,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssCheck {
    pub region: Region,
    /// Margin of the bound specific to `region`.
    pub region_margin: f64,
    /// Margin of `Delta V <= -alpha_V + chi_V`.
    pub global_margin: f64,
    pub alpha: f64,
    pub chi: f64,
}

impl Certificate {
    pub fn v_thresholds(&self, u: f64) -> VThresholds {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let eta0 = self.spec.params.eta0;
        let l = self.spec.smoothness;
        let c = &self.consts;
        let q = c.q;
        let p3 = self.p_terms(u).p3;
        let v1_candidates = [eps.powf(1.0 / (1.0 + q)), (6.0 * p3 / beta).powf(1.0 / q)];
        let v2_candidates = [
            self.eta(u) * 2.0 * (2.0 * l * c.c_l).sqrt(),
            eps * eps * c.c_gamma / c.a7,
            ((eps + c.eps2) / (c.r_hat3 + c.eps1).sqrt()).powf(1.0 / (1.0 + q)),
            (p3 * 8.0 * (std::f64::consts::SQRT_2 + 1.0) * (2.0 * l).sqrt() * (c.r_hat3 + c.eps1)
                / (eta0 * self.spec.gamma1 * (c.a7 * c.c_gamma).sqrt()))
            .powf(2.0 / (1.0 - 4.0 * q)),
        ];
        VThresholds {
            v1: v1_candidates[0].max(v1_candidates[1]),
            v2: v2_candidates.iter().copied().fold(0.0, f64::max),
            v1_candidates,
            v2_candidates,
        }
    }

    /// `-(beta/3) g^(2+2q) / (eps + g^(1+q)) + p3(u) g`
    pub fn rho3(&self, g_inf: f64, u: f64) -> f64 {
        let q = self.consts.q;
        let beta = self.spec.params.beta;
        let gq = g_inf.powf(1.0 + q);
        -(beta / 3.0) * gq * gq / (self.spec.params.epsilon + gq) + self.p_terms(u).p3 * g_inf
    }

    /// `-(eta0/2) rho1 g^2 rho2 / (eps + sqrt(r_hat3 g^(2+2q) + beta g^2))^2 + p3(u) g`
    pub fn rho4(&self, g_inf: f64, u: f64) -> f64 {
        let q = self.consts.q;
        let beta = self.spec.params.beta;
        let g2 = g_inf * g_inf;
        let denom = self.spec.params.epsilon + (self.consts.r_hat3 * g_inf.powf(2.0 + 2.0 * q) + beta * g2).sqrt();
        -(self.spec.params.eta0 / 2.0) * self.rho1(g_inf, u) * g2 * self.rho2(g_inf) / (denom * denom)
            + self.p_terms(u).p3 * g_inf
    }

    pub fn psi_family(&self, z: f64) -> PsiFamily {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let eta0 = self.spec.params.eta0;
        let gamma0 = self.spec.gamma0;
        let c = &self.consts;
        let q = c.q;
        let psi11 = beta / 3.0 * z / (eps + z.sqrt());
        let rz = (c.r_hat1 * z).powf(1.0 + q);
        let psi12 = beta / 3.0 * rz * rz / (eps + rz);
        let psi21 = beta * z / (eps + z.sqrt());
        let z2 = z * z;
        let denom = eps + (c.r_hat4 * z.powf(2.0 + 2.0 * q) + c.r_hat5 * z2).sqrt();
        let psi22 = eta0 * gamma0 * c.r_hat1 * c.r_hat1 / 2.0 * z2 * self.rho2(c.r_hat1 * z) / (denom * denom);
        let w = c.a7 * c.r_hat1 * z / c.c_gamma;
        let root_gap = w / ((eps * eps + w).sqrt() + eps);
        let lead = eta0 * gamma0 * c.r_hat1 * c.r_hat1 * c.c_gamma / 4.0;
        let psi23 = if z <= c.z_star {
            lead / (eps * eps) * z2 * root_gap
        } else {
            lead * root_gap / (c.r_hat4 * z.powf(2.0 * q) + c.r_hat5)
        };
        PsiFamily {
            psi11,
            psi12,
            psi21,
            psi22,
            psi23,
        }
    }

    /// `min{psi11, psi12, psi21, psi23}`.
    pub fn alpha_v(&self, z: f64) -> f64 {
        let p = self.psi_family(z);
        p.psi11.min(p.psi12).min(p.psi21).min(p.psi23)
    }

    /// `p2(u) + p3(u) v1(u)`, the input term on `S1`.
    pub fn chi1(&self, u: f64) -> f64 {
        let p = self.p_terms(u);
        p.p2 + p.p3 * self.v_thresholds(u).v1
    }

    /// `p2(u) + p3(u) v2(u)`, the input term on `S2`.
    pub fn chi2(&self, u: f64) -> f64 {
        let p = self.p_terms(u);
        p.p2 + p.p3 * self.v_thresholds(u).v2
    }

    /// `p2(u) + p3(u) max{v1(u), v2(u)}`.
    pub fn chi_v(&self, u: f64) -> f64 {
        let p = self.p_terms(u);
        let v = self.v_thresholds(u);
        p.p2 + p.p3 * v.v1.max(v.v2)
    }

    pub fn alpha_chi(&self, z: f64, u: f64) -> (f64, f64) {
        (self.alpha_v(z), self.chi_v(u))
    }

    /// Smallest `z` (to relative accuracy 1e-12) with `alpha_V(z) >= target`,
    /// by bisection. Infinite when no finite `z` reaches the target.
    pub fn alpha_inverse(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        if !target.is_finite() {
            return f64::INFINITY;
        }
        let alpha = |z: f64| self.alpha_v(z);
        match expand_upper(alpha, target, 1.0) {
            Some(hi) => bisect_increasing(alpha, target, 0.0, hi, 1e-12, 400),
            None => f64::INFINITY,
        }
    }

    pub fn region(&self, obj: &Objective, x: &[f64], s: &[f64]) -> Region {
        let y: Vec<f64> = x.iter().zip(obj.x_star()).map(|(a, b)| a - b).collect();
        let threshold = (self.spec.smoothness * euclidean_norm(&y)).powf(2.0 + 2.0 * self.consts.q);
        if max_abs(s) >= threshold {
            Region::S1
        } else {
            Region::S2
        }
    }

    /// Right-hand side of the bound for `region`: `-psi11(S) - psi12(Y) + chi1(u)`
    /// on `S1`, `-psi21(S) - psi22(Y) + chi2(u)` on `S2`, where `S = ||s||_inf`
    /// and `Y = ||x - x*||_inf`.
    pub fn region_rhs(&self, region: Region, s_inf: f64, y_inf: f64, u: f64) -> f64 {
        let ps = self.psi_family(s_inf);
        let py = self.psi_family(y_inf);
        match region {
            Region::S1 => -ps.psi11 - py.psi12 + self.chi1(u),
            Region::S2 => -ps.psi21 - py.psi22 + self.chi2(u),
        }
    }

    pub fn check_iss_decrease(&self, obj: &Objective, tr: &Transition) -> IssCheck {
        let x = tr.state.x();
        let s = tr.state.s();
        let region = self.region(obj, x, s);
        let s_inf = max_abs(s);
        let y_inf = x.iter().zip(obj.x_star()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let u = tr.u.value();
        let (alpha, chi) = self.alpha_chi(s_inf.max(y_inf), u);
        IssCheck {
            region,
            region_margin: self.region_rhs(region, s_inf, y_inf, u) - tr.delta_v,
            global_margin: -alpha + chi - tr.delta_v,
            alpha,
            chi,
        }
    }
}

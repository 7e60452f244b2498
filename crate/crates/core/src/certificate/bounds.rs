//! The mean-value point, the per-coordinate `kappa_i` bound and the refined
//! bound that depends only on `||g||_inf`, `||s||_inf` and `u`.

use serde::{Deserialize, Serialize};

use super::Certificate;
use crate::error::{Error, Result};
use crate::lyapunov::Transition;
use crate::types::max_abs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LTerms {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTerms {
    /// `Gamma_hat_1(u)`
    pub big_gamma_hat1: f64,
    /// `Gamma_hat_2(u) = Gamma_hat_1(u) / (epsilon beta)`
    pub big_gamma_hat2: f64,
    /// `Gamma(u) = (d - 1) Gamma_hat_2(u)`
    pub big_gamma: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

/// Relative gap below which `f0(x+)` and `f0(x)` are treated as equal.
const XI_EQUAL_REL: f64 = 1e-14;

impl Certificate {
    /// Closed-form bracket `[max{0, g^2/(4L) - eta^2 c_L}, d g^2 / (2 mu) + eta^2 c_L / 2]`
    /// for the mean-value point, with `g = ||grad f(x)||_inf`.
    pub fn bound_xi(&self, g_inf: f64, u: f64) -> (f64, f64) {
        let eta = self.eta(u);
        let l = self.spec.smoothness;
        let d = self.spec.dim as f64;
        let g2 = g_inf * g_inf;
        let lower = (g2 / (4.0 * l) - eta * eta * self.consts.c_l).max(0.0);
        let upper = d * g2 / (2.0 * self.consts.mu) + eta * eta * self.consts.c_l / 2.0;
        (lower, upper)
    }

    /// The point `xi` between `f0(x)` and `f0(x+)` with
    /// `gamma'(xi) (f0(x+) - f0(x)) = gamma(f0(x+)) - gamma(f0(x))`.
    ///
    /// Because `gamma'` is `gamma0 + gamma1 sqrt(w)`, the identity solves in
    /// closed form: `sqrt(xi) = (2/3)(a + sqrt(ab) + b) / (sqrt(a) + sqrt(b))`.
    pub fn solve_xi(&self, tr: &Transition) -> Result<f64> {
        let (a, b) = (tr.gap, tr.gap_next);
        let (lo, hi) = (a.min(b), a.max(b));
        if hi - lo <= XI_EQUAL_REL * hi {
            return Ok(a);
        }
        let (ra, rb) = (a.sqrt(), b.sqrt());
        let root = (2.0 / 3.0) * (a + ra * rb + b) / (ra + rb);
        let xi = root * root;
        if !xi.is_finite() {
            return Err(Error::XiNotBracketed {
                target: xi,
                low: lo,
                high: hi,
            });
        }
        Ok(xi.clamp(lo, hi))
    }

    /// Relative residual of the mean-value identity divided by `f0(x+) - f0(x)`:
    /// `|gamma'(xi) - (gamma(b) - gamma(a)) / (b - a)| / gamma'(xi)`. Zero when
    /// the two gaps coincide.
    pub fn xi_residual(&self, tr: &Transition, xi: f64) -> f64 {
        let (a, b) = (tr.gap, tr.gap_next);
        if (a - b).abs() <= XI_EQUAL_REL * a.max(b) {
            return 0.0;
        }
        let gp = self.spec.gamma_prime_unchecked(xi);
        (gp - self.spec.gamma_divided_difference(a, b)).abs() / gp
    }

    /// `kappa_i = -eta gamma'(xi)(eps + sqrt(s_i))(eps + sqrt(s+_i))
    ///            + eta^2 gamma'(xi) L/2 (eps + sqrt(s_i)) + beta (eps + sqrt(s+_i))^2`.
    pub fn kappa(&self, tr: &Transition, xi: f64, i: usize) -> f64 {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let l = self.spec.smoothness;
        let eta = tr.eta;
        let gp = self.spec.gamma_prime_unchecked(xi);
        let a = eps + tr.state.s()[i].sqrt();
        let b = eps + tr.next.s()[i].sqrt();
        -eta * gp * a * b + eta * eta * gp * l / 2.0 * a + beta * b * b
    }

    /// The same quantity in the regrouped form used to bound it term by term.
    pub fn kappa_rearranged(&self, tr: &Transition, xi: f64, i: usize) -> f64 {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let l = self.spec.smoothness;
        let eta = tr.eta;
        let eg = eta * self.spec.gamma_prime_unchecked(xi);
        let rs = tr.state.s()[i].sqrt();
        let rp = tr.next.s()[i].sqrt();
        -rp * (eg * rs - beta * rp) - eg * rs * (eps - eta * l / 2.0) - eps * rp * eg * (1.0 - 2.0 * beta / eg)
            - eps * (eg * (eps - eta * l / 2.0) - beta * eps)
    }

    /// `-sum beta s_i / (eps + sqrt(s_i)) + sum g_i^2 kappa_i / ((eps + sqrt(s+_i))^2 (eps + sqrt(s_i)))`.
    pub fn intermediate_rhs(&self, tr: &Transition, xi: f64) -> f64 {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        (0..self.spec.dim)
            .map(|i| {
                let s = tr.state.s()[i];
                let a = eps + s.sqrt();
                let b = eps + tr.next.s()[i].sqrt();
                let g = tr.grad[i];
                -beta * s / a + g * g * self.kappa(tr, xi, i) / (b * b * a)
            })
            .sum()
    }

    /// Margin of `Delta V <= intermediate_rhs`.
    pub fn check_intermediate_bound(&self, tr: &Transition) -> Result<f64> {
        let xi = self.solve_xi(tr)?;
        Ok(self.intermediate_rhs(tr, xi) - tr.delta_v)
    }

    pub fn l_terms(&self, u: f64) -> LTerms {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let eta0 = self.spec.params.eta0;
        let l = self.spec.smoothness;
        let eta = self.eta(u);
        let c = &self.consts;
        let l1 = eta * 2.0 * (l * c.c_l).sqrt() / self.spec.gamma0;
        let l2 = 2.0 * l.sqrt() / self.spec.gamma1 + eta * c.c_m;
        let l3 = l1 + l2;
        let l4 = eta0 * l / 2.0 - eps - eps / 6.0 * c.a61 + u * l / 2.0 + u * c.a53 * (1.0 - beta).sqrt() / self.spec.gamma0;
        let l5 = eps * l / 2.0 + c.a53 * beta.sqrt() * l3;
        LTerms { l1, l2, l3, l4, l5 }
    }

    pub fn p_terms(&self, u: f64) -> PTerms {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let eta = self.eta(u);
        let d = self.spec.dim as f64;
        let LTerms { l4, l5, .. } = self.l_terms(u);
        let positive_l4 = l4.max(0.0);
        let big_gamma_hat1 = positive_l4 * positive_l4 / (4.0 * self.consts.c_gamma) + u * l5;
        let big_gamma_hat2 = big_gamma_hat1 / (eps * beta);
        let big_gamma = (d - 1.0) * big_gamma_hat2;
        let p1 = eta * big_gamma + eta * positive_l4 / beta + u * eta * l5 / (eps * beta);
        let p2 = p1 * (self.spec.gamma0 + eta * self.consts.gamma_hat2);
        let p3 = p1 * self.consts.gamma_hat1;
        PTerms {
            big_gamma_hat1,
            big_gamma_hat2,
            big_gamma,
            p1,
            p2,
            p3,
        }
    }

    /// Lower bound on `gamma'(xi)`: `gamma0 + gamma1 sqrt(max{0, g^2/(4L) - eta^2 c_L})`.
    pub fn rho1(&self, g_inf: f64, u: f64) -> f64 {
        let (lower, _) = self.bound_xi(g_inf, u);
        self.spec.gamma0 + self.spec.gamma1 * lower.sqrt()
    }

    /// `2 c_gamma (sqrt(eps^2 + (a7 g + eta2) / c_gamma) - eps)`, the minimum over
    /// `s_m >= 0` of `(c_gamma s_m + a7 g + eta2) / (eps + sqrt(s_m))`.
    pub fn rho2(&self, g_inf: f64) -> f64 {
        let eps = self.spec.params.epsilon;
        let c = &self.consts;
        let x = (c.a7 * g_inf + c.eta2) / c.c_gamma;
        2.0 * c.c_gamma * x / ((eps * eps + x).sqrt() + eps)
    }

    /// The minimizing `s_m = (sqrt(eps^2 + (a7 g + eta2) / c_gamma) - eps)^2`.
    pub fn rho2_argmin(&self, g_inf: f64) -> f64 {
        let eps = self.spec.params.epsilon;
        let c = &self.consts;
        let x = (c.a7 * g_inf + c.eta2) / c.c_gamma;
        let r = x / ((eps * eps + x).sqrt() + eps);
        r * r
    }

    /// `(c_gamma s_m + a7 g + eta2) / (eps + sqrt(s_m))`, minimized by `rho2`.
    pub fn rho2_objective(&self, s_m: f64, g_inf: f64) -> f64 {
        let c = &self.consts;
        (c.c_gamma * s_m + c.a7 * g_inf + c.eta2) / (self.spec.params.epsilon + s_m.sqrt())
    }

    /// Upper bound on `Delta V` in terms of `||s||_inf`, `||g||_inf` and `u`:
    /// `-beta S/(eps + sqrt S) + p2 + p3 G - eta0 rho1 G^2 rho2 / (eps + sqrt((1-beta) S + beta G^2))^2`.
    pub fn refined_rhs(&self, s_inf: f64, g_inf: f64, u: f64) -> f64 {
        let eps = self.spec.params.epsilon;
        let beta = self.spec.params.beta;
        let eta0 = self.spec.params.eta0;
        let p = self.p_terms(u);
        let denom = eps + ((1.0 - beta) * s_inf + beta * g_inf * g_inf).sqrt();
        -beta * s_inf / (eps + s_inf.sqrt()) + p.p2 + p.p3 * g_inf
            - eta0 * self.rho1(g_inf, u) * g_inf * g_inf * self.rho2(g_inf) / (denom * denom)
    }

    /// Margin of `Delta V <= refined_rhs`.
    pub fn check_refined_bound(&self, tr: &Transition) -> f64 {
        let rhs = self.refined_rhs(max_abs(tr.state.s()), max_abs(&tr.grad), tr.u.value());
        rhs - tr.delta_v
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::omega::{Omega, Subordinated, TruncatedSeries};
use super::{AngularKernel, AngularSampler, KernelError};
use crate::sphere_spectral::angle_from_cos;

/// Radial part `α(r)` of a collision kernel, `r = |v − w|/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alpha {
    /// `r^γ`
    Power { gamma: f64 },
    /// `(r² + 1/k²)^{γ/2}`
    Regularized { gamma: f64, k: usize },
    Constant { value: f64 },
}

impl Alpha {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Alpha::Power { gamma } => r.powf(gamma),
            Alpha::Regularized { gamma, k } => {
                let kf = k as f64;
                (r * r + 1.0 / (kf * kf)).powf(0.5 * gamma)
            }
            Alpha::Constant { value } => value,
        }
    }

    /// `sup_r α(r)`, finite unless the kernel is a pure power.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            Alpha::Power { .. } => None,
            Alpha::Regularized { gamma, k } => {
                if gamma <= 0.0 {
                    Some((k as f64).powf(-gamma))
                } else {
                    None
                }
            }
            Alpha::Constant { value } => Some(value),
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Alpha::Power { gamma } | Alpha::Regularized { gamma, .. } => gamma,
            Alpha::Constant { .. } => 0.0,
        }
    }
}

/// C² cutoff equal to 1 on `[−1, 1 − 1/k]` and 0 on `[1 − 1/(2k), 1]`.
pub fn psi_k(k: usize, c: f64) -> f64 {
    let kf = k as f64;
    let x = (c - (1.0 - 1.0 / kf)) * 2.0 * kf;
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
    }
}

/// Default truncation schedule `ε_k = 1/k²`.
pub fn default_eps(k: usize) -> f64 {
    1.0 / (k as f64 * k as f64)
}

/// Points of `[−1, 1]` used to check the construction: uniform on
/// `[−1, 1 − 1/k]` and on `[1 − 1/k, 1]`, endpoints included.
pub fn check_grid(k: usize) -> Vec<f64> {
    let split = 1.0 - 1.0 / k as f64;
    let n = 2000;
    let mut out: Vec<f64> = (0..n).map(|i| -1.0 + (split + 1.0) * i as f64 / n as f64).collect();
    out.extend((0..=n).map(|i| split + (1.0 - split) * i as f64 / n as f64));
    out
}

/// The bounded approximation `b^k = b(ψ_k + (1 − ψ_k) b̃^k / b̃)` of a
/// singular angular kernel, with `b̃^k` the subordinated kernel restricted to
/// `t ≥ ε_k`.
#[derive(Debug, Clone)]
pub struct RegularizedKernel {
    pub k: usize,
    pub eps: f64,
    pub base: AngularKernel,
    pub tilde: Arc<Subordinated>,
    pub tilde_k: Arc<TruncatedSeries>,
    /// `b = b̃` exactly, so `b^k = ψ_k b̃ + (1 − ψ_k) b̃^k`.
    base_is_tilde: bool,
    pub angular: AngularKernel,
    /// `min_{[1−1/k, 1]} b^k` on the check grid.
    pub rho: f64,
    /// `max b^k` on the check grid.
    pub sup: f64,
    /// `max b̃/b̃^k` over `[−1, 1 − 1/(2k)]` on the check grid.
    pub truncation_ratio: f64,
}

fn bk_value(base: &AngularKernel, tilde: &Subordinated, tilde_k: &TruncatedSeries, same: bool, k: usize, c: f64) -> f64 {
    let psi = psi_k(k, c);
    if psi == 1.0 {
        return base.eval(c);
    }
    let tk = tilde_k.eval(c);
    if same {
        if psi == 0.0 {
            return tk;
        }
        let th = angle_from_cos(c);
        return psi * base.eval_theta(th) + (1.0 - psi) * tk;
    }
    let th = angle_from_cos(c).max(1e-12);
    let b = base.eval_theta(th);
    let bt = tilde.eval_theta(th);
    b * (psi + (1.0 - psi) * tk / bt)
}

impl RegularizedKernel {
    /// `b^k` for `b = b̃ = ∫ Φ_t ω dt`.
    pub fn from_omega(omega: Omega, k: usize, eps: f64) -> Result<Self, KernelError> {
        let sub = Arc::new(Subordinated::new(omega)?);
        let base = AngularKernel::subordinated(sub.clone());
        Self::build(base, sub, k, eps, true)
    }

    /// `b^k` for a general `b` sharing the singularity of `b̃`.
    pub fn from_parts(base: AngularKernel, tilde: Arc<Subordinated>, k: usize, eps: f64) -> Result<Self, KernelError> {
        Self::build(base, tilde, k, eps, false)
    }

    fn build(base: AngularKernel, tilde: Arc<Subordinated>, k: usize, eps: f64, same: bool) -> Result<Self, KernelError> {
        if k == 0 {
            return Err(KernelError::Invalid("k must be at least 1".into()));
        }
        if !tilde.omega.is_singular() {
            return Err(KernelError::Invalid("ω gives a bounded b̃; nothing to regularize".into()));
        }
        let tilde_k = Arc::new(tilde.truncated(eps)?);
        let split = 1.0 - 1.0 / k as f64;
        let half = 1.0 - 0.5 / k as f64;
        let mut rho = f64::INFINITY;
        let mut sup = 0.0f64;
        let mut ratio = 1.0f64;
        for c in check_grid(k) {
            let v = bk_value(&base, &tilde, &tilde_k, same, k, c);
            if !v.is_finite() || v < 0.0 {
                return Err(KernelError::Invalid(format!("b^k({c}) = {v}")));
            }
            sup = sup.max(v);
            if c >= split {
                rho = rho.min(v);
            }
            if c <= half {
                ratio = ratio.max(tilde.eval(c) / tilde_k.eval(c));
            }
        }
        let bound = sup * (1.0 + 1e-9);
        let angular = {
            let (base, tilde, tilde_k) = (base.clone(), tilde.clone(), tilde_k.clone());
            AngularKernel::from_theta_fn(
                format!("{}^{k}", base.name),
                move |th| bk_value(&base, &tilde, &tilde_k, same, k, th.cos()),
                Some(bound),
                None,
            )
        };
        Ok(RegularizedKernel {
            k,
            eps,
            base,
            tilde,
            tilde_k,
            base_is_tilde: same,
            angular,
            rho,
            sup,
            truncation_ratio: ratio,
        })
    }

    pub fn eval(&self, c: f64) -> f64 {
        bk_value(&self.base, &self.tilde, &self.tilde_k, self.base_is_tilde, self.k, c)
    }

    /// `u_k` with `∫_{u_k}^∞ Φ_u(1) ω(u) du = ρ_k`, by bisection in `log u`.
    pub fn u_k(&self, tol: f64) -> Result<f64, KernelError> {
        solve_u(&self.tilde.omega, self.rho, tol)
    }

    /// `ω^k(u) = min(u^{−s}, u_k^{−s})`.
    pub fn omega_k(u: f64, u_k: f64, s: f64) -> f64 {
        u.max(u_k).powf(-s)
    }

    /// `κ^k(u) = s u^{−1−s} 1_{u ≥ u_k}`.
    pub fn kappa_k(u: f64, u_k: f64, s: f64) -> f64 {
        if u >= u_k {
            s * u.powf(-1.0 - s)
        } else {
            0.0
        }
    }

    pub fn sampler(&self) -> Result<AngularSampler, KernelError> {
        AngularSampler::new(&self.angular, super::SAMPLER_CELLS)
    }
}

/// Solve `∫_u^∞ Φ_t(1) ω(t) dt = target` for `u`.
pub fn solve_u(omega: &Omega, target: f64, tol: f64) -> Result<f64, KernelError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(KernelError::Invalid(format!("target {target} must be positive")));
    }
    let f = |u: f64| -> Result<f64, KernelError> { Ok(TruncatedSeries::new(omega, u)?.at_one()) };
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo)? < target {
        lo *= 0.5;
        if lo < 1e-9 {
            return Err(KernelError::Invalid(format!("target {target} out of reach")));
        }
    }
    while f(hi)? > target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(KernelError::Invalid(format!("target {target} below the tail")));
        }
    }
    while (hi - lo) > tol * lo {
        let mid = (lo * hi).sqrt();
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Local constant of the Λ bound.
pub const LAMBDA_LOC: f64 = 5.5;

/// `3 ∫(1 − e^{−2Λ_loc t}) ω / ∫(1 − e^{−6t}) ω` with `ω` restricted to
/// `t ≥ ε`.
pub fn lambda_lower_bound(omega: &Omega, eps: f64) -> Result<f64, KernelError> {
    let num = omega.one_minus_exp_integral(2.0 * LAMBDA_LOC, eps)?;
    let den = omega.one_minus_exp_integral(6.0, eps)?;
    if !(num.is_finite() && den.is_finite() && den > 0.0) {
        return Err(KernelError::NonIntegrable("Λ bound integrals".into()));
    }
    Ok(3.0 * num / den)
}

/// `ε → 0` value of the bound for `ω ∝ t^{−1−s}`.
pub fn lambda_bound_closed_form(s: f64) -> f64 {
    3.0 * (2.0 * LAMBDA_LOC / 6.0).powf(s)
}

/// `2√(Λ(1 − λ)) − |γ|`.
pub fn h1_margin(lambda_bound: f64, slack: f64, gamma: f64) -> f64 {
    2.0 * (lambda_bound * (1.0 - slack)).sqrt() - gamma.abs()
}

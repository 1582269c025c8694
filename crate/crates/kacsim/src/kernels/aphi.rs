use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Alpha, AngularKernel, KernelError};
use crate::geometry::{to_frame, Vec3};
use crate::sphere_spectral::{one_minus_legendre, SingularRadialRule};

/// Test functions `φ` on R³ with bounded second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestPhi {
    Constant { value: f64 },
    /// `a·v`
    Linear { a: Vec3 },
    /// `|v|²`
    Energy,
    /// `e^{−|v − center|²/2}`
    GaussianBump { center: Vec3 },
}

impl TestPhi {
    pub fn eval(&self, v: Vec3) -> f64 {
        match *self {
            TestPhi::Constant { value } => value,
            TestPhi::Linear { a } => a.dot(v),
            TestPhi::Energy => v.norm_sq(),
            TestPhi::GaussianBump { center } => (-0.5 * (v - center).norm_sq()).exp(),
        }
    }

    /// `‖∇²φ‖_∞` in operator norm.
    pub fn hessian_bound(&self) -> f64 {
        match self {
            TestPhi::Constant { .. } | TestPhi::Linear { .. } => 0.0,
            TestPhi::Energy => 2.0,
            TestPhi::GaussianBump { .. } => 1.0,
        }
    }

    /// `φ(z + rσ') + φ(z − rσ')`.
    pub fn pair_sum(&self, z: Vec3, r: f64, sigma_p: Vec3) -> f64 {
        match *self {
            TestPhi::GaussianBump { center } => {
                let d = z - center;
                2.0 * (-0.5 * (d.norm_sq() + r * r)).exp() * (r * d.dot(sigma_p)).cosh()
            }
            _ => self.eval(z + sigma_p * r) + self.eval(z - sigma_p * r),
        }
    }

    /// `φ(v') + φ(w') − φ(v) − φ(w)` for `v, w = z ± rσ`, `v', w' = z ± rσ'`,
    /// given `δ = σ' − σ`; free of cancellation for small `δ`.
    pub fn pair_change(&self, z: Vec3, r: f64, sigma: Vec3, delta: Vec3) -> f64 {
        match *self {
            TestPhi::Constant { .. } | TestPhi::Linear { .. } | TestPhi::Energy => 0.0,
            TestPhi::GaussianBump { center } => {
                // cosh a − cosh b = 2 sinh((a+b)/2) sinh((a−b)/2)
                let d = z - center;
                let sum = r * d.dot(sigma * 2.0 + delta);
                let diff = r * d.dot(delta);
                4.0 * (-0.5 * (d.norm_sq() + r * r)).exp() * (0.5 * sum).sinh() * (0.5 * diff).sinh()
            }
        }
    }
}

/// Polar rule about `σ` for the `σ'` integral of `A(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct APhiRule {
    pub panels: usize,
    pub per_panel: usize,
    pub n_psi: usize,
}

impl Default for APhiRule {
    fn default() -> Self {
        APhiRule { panels: 8, per_panel: 16, n_psi: 32 }
    }
}

impl APhiRule {
    pub fn doubled(&self) -> Self {
        APhiRule { panels: 2 * self.panels, n_psi: 2 * self.n_psi, ..*self }
    }
}

/// `A(φ)(v, w) = ½ α(r) ∫ [φ(v') − φ(v) + φ(w') − φ(w)] b(σ·σ') dσ'`.
///
/// The `σ'` integral runs in geodesic polar coordinates about `σ`; for a
/// kernel singular like `θ^{−2−2s}` the radial substitution `θ = π y^p`,
/// `p = 1/(2−2s)`, makes the azimuthally averaged second-order difference
/// integrable term by term.
pub fn a_phi(phi: &TestPhi, v: Vec3, w: Vec3, alpha: &Alpha, b: &AngularKernel, rule: &APhiRule) -> Result<f64, KernelError> {
    let frame = to_frame(v, w).map_err(|_| KernelError::Invalid("A(φ) needs v ≠ w".into()))?;
    let p = match b.singularity {
        Some(s) => 1.0 / (2.0 - 2.0 * s),
        None => 1.0,
    };
    let radial = SingularRadialRule::with_exponent(p, rule.panels, rule.per_panel);
    let (e1, e2) = frame.sigma.orthonormal_pair();
    let dpsi = 2.0 * PI / rule.n_psi as f64;
    let mut acc = 0.0;
    for (th, wr) in radial.thetas.iter().zip(&radial.weights) {
        if *th == 0.0 || *wr == 0.0 {
            continue;
        }
        let st = th.sin();
        let omc = 2.0 * (0.5 * th).sin().powi(2);
        let mut mean = 0.0;
        for q in 0..rule.n_psi {
            let psi = (q as f64 + 0.5) * dpsi;
            let delta = (e1 * psi.cos() + e2 * psi.sin()) * st - frame.sigma * omc;
            mean += phi.pair_change(frame.z, frame.r, frame.sigma, delta);
        }
        acc += wr * dpsi * mean * b.eval_theta(*th);
    }
    Ok(0.5 * alpha.eval(frame.r) * acc)
}

/// `|A(φ)(v, w)| / (‖∇²φ‖_∞ b̄ |v − w|^{γ+2})`, the constant realized at one
/// pair.
pub fn a_phi_constant(value: f64, phi: &TestPhi, v: Vec3, w: Vec3, bbar: f64, gamma: f64) -> f64 {
    value.abs() / (phi.hessian_bound() * bbar * (v - w).norm().powf(gamma + 2.0))
}

/// `μ_ℓ = 2π ∫ (1 − P_ℓ(c)) b(c) dc` for `ℓ ≤ lmax`.
pub fn zonal_multipliers(b: &AngularKernel, lmax: usize) -> Vec<f64> {
    let p = match b.singularity {
        Some(s) => 1.0 / (2.0 - 2.0 * s),
        None => 1.0,
    };
    let rule = SingularRadialRule::with_exponent(p, 64, 16);
    let mut mu = vec![0.0; lmax + 1];
    for (th, w) in rule.thetas.iter().zip(&rule.weights) {
        if *th == 0.0 {
            continue;
        }
        let kw = 2.0 * PI * w * b.eval_theta(*th);
        let q = one_minus_legendre(lmax, *th);
        for l in 1..=lmax {
            mu[l] += q[l] * kw;
        }
    }
    mu
}

/// Modified spherical Bessel functions `i_ℓ(x)`, `ℓ ≤ lmax`, by downward
/// recurrence normalized to `i_0 = sinh x / x`.
pub fn modified_spherical_bessel(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = lmax + 30 + x.ceil() as usize;
    let (mut hi, mut cur) = (0.0f64, 1e-280f64);
    for l in (1..=start).rev() {
        // i_{ℓ−1} = i_{ℓ+1} + (2ℓ+1)/x i_ℓ
        let lo = hi + (2 * l + 1) as f64 / x * cur;
        if l <= lmax {
            out[l] = cur;
        }
        hi = cur;
        cur = lo;
        if cur > 1e250 {
            hi *= 1e-250;
            cur *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    out[0] = cur;
    let i0 = if x.abs() < 1e-8 { 1.0 + x * x / 6.0 } else { x.sinh() / x };
    let scale = i0 / cur;
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Series evaluation of `A(φ)` for the Gaussian bump `φ = e^{−|v − a|²/2}`
/// from the zonal multipliers of `b`:
/// `A = −α(r) e^{−(|d|²+r²)/2} Σ_{ℓ even} (2ℓ+1) i_ℓ(r|d|) μ_ℓ P_ℓ(d̂·σ)`
/// with `d = z − a`.
#[derive(Debug, Clone)]
pub struct GaussianBumpA {
    pub center: Vec3,
    pub mu: Vec<f64>,
}

/// Largest degree kept by [`GaussianBumpA`].
pub const BUMP_LMAX: usize = 160;

impl GaussianBumpA {
    pub fn new(center: Vec3, b: &AngularKernel) -> Self {
        GaussianBumpA { center, mu: zonal_multipliers(b, BUMP_LMAX) }
    }

    pub fn eval(&self, v: Vec3, w: Vec3, alpha: &Alpha) -> f64 {
        let d = (v + w) * 0.5 - self.center;
        let diff = v - w;
        let r = 0.5 * diff.norm();
        let dn = d.norm();
        if r == 0.0 || dn == 0.0 {
            return 0.0;
        }
        let rho = r * dn;
        let x = (d.dot(diff) / (dn * 2.0 * r)).clamp(-1.0, 1.0);
        let lmax = ((rho.ceil() as usize) + 40).min(BUMP_LMAX);
        let bes = modified_spherical_bessel(lmax, rho);
        let weight = (-0.5 * (dn * dn + r * r)).exp();
        // Legendre recurrence in ℓ
        let (mut p0, mut p1) = (1.0, x);
        let mut acc = 0.0;
        for l in 2..=lmax {
            let lf = l as f64;
            let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
            if l % 2 == 0 {
                acc += (2.0 * lf + 1.0) * bes[l] * self.mu[l] * p2;
            }
            p0 = p1;
            p1 = p2;
        }
        -alpha.eval(r) * weight * acc
    }
}

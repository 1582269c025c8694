use std::f64::consts::PI;

use super::SpectralError;
use crate::quadrature::composite_gl;

/// Largest degree the heat-kernel series may use before reporting failure.
pub const HEAT_SERIES_CAP: usize = 20_000;

/// Per-term tolerance at which the heat-kernel series is truncated.
pub const HEAT_SERIES_TOL: f64 = 1e-14;

/// `Φ_t(c) = Σ_ℓ (2ℓ+1)/(4π) e^{−ℓ(ℓ+1)t} P_ℓ(c)`.
pub fn heat_kernel(c: f64, t: f64) -> Result<f64, SpectralError> {
    heat_kernel_capped(c, t, HEAT_SERIES_CAP)
}

pub fn heat_kernel_capped(c: f64, t: f64, cap: usize) -> Result<f64, SpectralError> {
    if t.is_nan() || t <= 0.0 {
        return Err(SpectralError::NegativeTime(t));
    }
    let c = c.clamp(-1.0, 1.0);
    let needed = heat_series_length(t);
    if needed > cap {
        return Err(SpectralError::HeatKernelCap { t, needed, cap });
    }
    let mut p0 = 1.0;
    let mut p1 = c;
    let mut acc = 1.0 / (4.0 * PI);
    for l in 1..=needed {
        let lf = l as f64;
        let p = if l == 1 {
            p1
        } else {
            let p2 = ((2.0 * lf - 1.0) * c * p1 - (lf - 1.0) * p0) / lf;
            p0 = p1;
            p1 = p2;
            p2
        };
        acc += (2.0 * lf + 1.0) / (4.0 * PI) * (-lf * (lf + 1.0) * t).exp() * p;
    }
    Ok(acc)
}

/// Smallest ℓ with `(2ℓ+1) e^{−ℓ(ℓ+1)t} / 4π` below the truncation tolerance.
pub fn heat_series_length(t: f64) -> usize {
    let mut l = 1usize;
    loop {
        let lf = l as f64;
        if (2.0 * lf + 1.0) / (4.0 * PI) * (-lf * (lf + 1.0) * t).exp() < HEAT_SERIES_TOL {
            return l;
        }
        l += 1;
        if l > 10 * HEAT_SERIES_CAP {
            return l;
        }
    }
}

/// `cos a − cos b` without cancellation.
#[inline]
pub fn cos_diff(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a + b)).sin() * (0.5 * (b - a)).sin()
}

/// Heat kernel at geodesic angle `theta` from the closed integral formula
/// `√2 e^{t/4} (4πt)^{−3/2} Σ_n (−1)^n ∫_θ^π (φ+2πn) e^{−(φ+2πn)²/4t} (cos θ − cos φ)^{−1/2} dφ`,
/// keeping `n ∈ {−1, 0, 1}`. Accurate for small `t`, where the series is long.
pub fn heat_kernel_small_time(theta: f64, t: f64) -> f64 {
    let pref = 2f64.sqrt() * (t / 4.0).exp() / (4.0 * PI * t).powf(1.5);
    pref * angular_integral(theta, |psi| psi * (-psi * psi / (4.0 * t)).exp())
}

/// `Σ_n (−1)^n ∫_θ^π h(φ + 2πn) (cos θ − cos φ)^{−1/2} dφ` over `n ∈ {−1, 0, 1}`,
/// computed with `φ = θ cosh y`, which removes the endpoint singularity.
pub(crate) fn angular_integral<H: Fn(f64) -> f64>(theta: f64, h: H) -> f64 {
    let theta = theta.clamp(1e-12, PI);
    if theta >= PI {
        return 0.0;
    }
    let ymax = (PI / theta).acosh();
    let panels = ((ymax / 0.5).ceil() as usize).max(4);
    let rule = composite_gl(0.0, ymax, panels, 12);
    let mut acc = 0.0;
    for (y, w) in rule.nodes.iter().zip(&rule.weights) {
        let phi = theta * y.cosh();
        let dphi = theta * y.sinh();
        let den = cos_diff(theta, phi);
        let jac = if den > 0.0 {
            dphi / den.sqrt()
        } else {
            (2.0 * theta / theta.sin()).sqrt()
        };
        let mut s = h(phi);
        s -= h(phi - 2.0 * PI);
        s -= h(phi + 2.0 * PI);
        acc += w * jac * s;
    }
    acc
}

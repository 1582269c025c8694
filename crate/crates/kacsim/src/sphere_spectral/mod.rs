//! Band-limited calculus on S²: real spherical-harmonic transforms on a
//! Gauss–Legendre grid, heat flow, the fractional Laplacian in spectral,
//! subordinated and kernel form, and Sobolev seminorms.

mod double;
mod fractional;
mod heat;
mod plan;
mod selftest;

use std::sync::Arc;

use thiserror::Error;

pub use double::{double_integral, DoubleRule, PointData};
pub use fractional::{
    angle_from_cos, c_s, c_s_quadrature, kappa_s, chi_s_diagonal_constant, one_minus_legendre, tail_laplace,
    upper_gamma, FracKernel, SingularRadialRule,
};
pub use heat::{cos_diff, heat_kernel, heat_kernel_capped, heat_kernel_small_time, heat_series_length};
pub use selftest::{self_test, SelfTestConfig, SelfTestReport, HEAT_MASS_TOL, KERNEL_FORM_TOL, ROUND_TRIP_TOL};
pub use plan::{legendre_table, lm_index, HarmonicSpectrum, PointLegendre, SphereGrid, SpherePlan};

use crate::geometry::{tangent_diff_sq_unchecked, Vec3};

/// Default band limit.
pub const DEFAULT_BAND_LIMIT: usize = 32;

/// Relative positivity floor applied before logarithms and divisions.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size mismatch: expected {expected} values, found {found}")]
    BandLimitMismatch { expected: usize, found: usize },
    #[error("grid {n_theta}x{n_phi} too small for band limit {band_limit}")]
    GridTooSmall { band_limit: usize, n_theta: usize, n_phi: usize },
    #[error("power {0} outside the admissible range")]
    InvalidPower(f64),
    #[error("negative or invalid time {0}")]
    NegativeTime(f64),
    #[error("heat kernel at t={t} needs degree {needed}, above the cap {cap}")]
    HeatKernelCap { t: f64, needed: usize, cap: usize },
    #[error("kernel evaluated at its singular point c = 1")]
    SingularPoint,
    #[error("function is not positive on the grid (min {0})")]
    NotPositive(f64),
}

/// Grid values on a plan, with an optional non-negativity flag.
#[derive(Debug, Clone)]
pub struct SphereFunction {
    pub plan: Arc<SpherePlan>,
    pub values: Vec<f64>,
    pub nonnegative: bool,
}

impl SphereFunction {
    pub fn from_values(plan: Arc<SpherePlan>, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != plan.len() {
            return Err(SpectralError::BandLimitMismatch { expected: plan.len(), found: values.len() });
        }
        Ok(SphereFunction { plan, values, nonnegative: false })
    }

    pub fn from_fn<F: Fn(Vec3) -> f64>(plan: Arc<SpherePlan>, f: F) -> Self {
        let values = plan.sample(f);
        SphereFunction { plan, values, nonnegative: false }
    }

    pub fn from_spectrum(plan: Arc<SpherePlan>, spec: &HarmonicSpectrum) -> Self {
        let values = plan.synthesis(spec);
        SphereFunction { plan, values, nonnegative: false }
    }

    pub fn band_limit(&self) -> usize {
        self.plan.band_limit
    }

    pub fn spectrum(&self) -> HarmonicSpectrum {
        self.plan.analysis(&self.values).expect("grid matches plan")
    }

    pub fn integral(&self) -> f64 {
        self.plan.integrate(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Clamp to `POSITIVITY_FLOOR · max` and flag as non-negative.
    pub fn floored(mut self) -> Self {
        floor_positive(&mut self.values);
        self.nonnegative = true;
        self
    }

    pub fn scaled(&self, a: f64) -> Self {
        SphereFunction {
            plan: self.plan.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
            nonnegative: self.nonnegative && a >= 0.0,
        }
    }
}

/// Apply the positivity floor `1e−12 · max` in place.
pub fn floor_positive(values: &mut [f64]) {
    let m = values.iter().cloned().fold(0.0f64, f64::max);
    let floor = POSITIVITY_FLOOR * m;
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
}

/// Analysis of a grid function.
pub fn analysis(f: &SphereFunction) -> Result<HarmonicSpectrum, SpectralError> {
    f.plan.analysis(&f.values)
}

/// Synthesis on a plan; spectra with a smaller band limit are zero-padded.
pub fn synthesis(plan: &Arc<SpherePlan>, spec: &HarmonicSpectrum) -> Result<SphereFunction, SpectralError> {
    if spec.band_limit > plan.band_limit {
        return Err(SpectralError::BandLimitMismatch { expected: plan.band_limit, found: spec.band_limit });
    }
    Ok(SphereFunction::from_spectrum(plan.clone(), spec))
}

/// Eigenvalue `λ_ℓ = ℓ(ℓ+1)` of `−Δ`.
#[inline]
pub fn eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

/// `(−Δ)^s` by multiplication with `λ_ℓ^s`, `s ∈ (0, 1]`.
pub fn laplacian(spec: &HarmonicSpectrum, s: f64) -> Result<HarmonicSpectrum, SpectralError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(SpectralError::InvalidPower(s));
    }
    Ok(spec.map_degree(|l| if l == 0 { 0.0 } else { eigenvalue(l).powf(s) }))
}

/// Heat semigroup on coefficients, `e^{−λ_ℓ t}`.
pub fn heat_spectrum(spec: &HarmonicSpectrum, t: f64) -> Result<HarmonicSpectrum, SpectralError> {
    if t.is_nan() || t < 0.0 {
        return Err(SpectralError::NegativeTime(t));
    }
    Ok(spec.map_degree(|l| (-eigenvalue(l) * t).exp()))
}

/// Heat flow of a grid function. Non-negative inputs stay non-negative via
/// the positivity floor.
pub fn heat_flow(f: &SphereFunction, t: f64) -> Result<SphereFunction, SpectralError> {
    if t.is_nan() || t < 0.0 {
        return Err(SpectralError::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let spec = heat_spectrum(&analysis(f)?, t)?;
    let mut out = SphereFunction::from_spectrum(f.plan.clone(), &spec);
    if f.nonnegative {
        out = out.floored();
    }
    Ok(out)
}

/// `(Σ λ_ℓ^ν |ĝ^{ℓ,m}|²)^{1/2}`.
pub fn sobolev_seminorm(spec: &HarmonicSpectrum, nu: f64) -> f64 {
    sobolev_seminorm_sq(spec, nu).sqrt()
}

/// `Σ λ_ℓ^ν |ĝ^{ℓ,m}|²`.
pub fn sobolev_seminorm_sq(spec: &HarmonicSpectrum, nu: f64) -> f64 {
    spec.degree_power()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, p)| eigenvalue(l).powf(nu) * p)
        .sum()
}

/// `(−Δ)^s` through the kernel form, using the zonal multipliers of `χ_s`.
pub fn frac_laplacian_kernel_form(spec: &HarmonicSpectrum, s: f64) -> Result<HarmonicSpectrum, SpectralError> {
    let k = FracKernel::shared(s)?;
    let mu = k.kernel_multipliers(spec.band_limit);
    Ok(spec.map_degree(|l| mu[l]))
}

/// `χ_s(c)` from the subordination integral.
pub fn chi_s(c: f64, s: f64) -> Result<f64, SpectralError> {
    FracKernel::shared(s)?.chi(c)
}

/// `½∬ (g(σ') − g(σ))² χ_s(σ·σ') dσ dσ'` by double-sphere quadrature.
pub fn gagliardo_seminorm(spec: &HarmonicSpectrum, s: f64, rule: &DoubleRule) -> Result<f64, SpectralError> {
    let k = FracKernel::shared(s)?;
    let plan = SpherePlan::shared(spec.band_limit);
    let v = double_integral(&plan, &[spec], false, |th| k.chi_theta(th), rule, |a, b| {
        let d = b.values[0] - a.values[0];
        d * d
    });
    Ok(0.5 * v)
}

/// `½∬ |∇g(σ') − ∇g(σ)|²_{σ',σ} χ_s(σ·σ') dσ dσ'`, which equals the squared
/// `Ḣ^{1+s}` seminorm.
pub fn gagliardo_grad_seminorm(f: &SphereFunction, s: f64, rule: &DoubleRule) -> Result<f64, SpectralError> {
    let spec = analysis(f)?;
    gagliardo_grad_seminorm_spec(&spec, s, rule)
}

pub fn gagliardo_grad_seminorm_spec(spec: &HarmonicSpectrum, s: f64, rule: &DoubleRule) -> Result<f64, SpectralError> {
    let k = FracKernel::shared(s)?;
    let plan = SpherePlan::shared(spec.band_limit);
    let v = double_integral(&plan, &[spec], true, |th| k.chi_theta(th), rule, |a, b| {
        tangent_diff_sq_unchecked(b.grads[0], a.grads[0], b.sigma, a.sigma)
    });
    Ok(0.5 * v)
}

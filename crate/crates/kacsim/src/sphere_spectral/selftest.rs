use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{heat_kernel, laplacian, FracKernel, HarmonicSpectrum, SpectralError, SpherePlan};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfTestConfig {
    pub band_limit: usize,
    pub seed: u64,
    pub heat_times: Vec<f64>,
    /// Band limit of the inputs for the kernel-form comparison.
    pub kernel_band_limit: usize,
    pub kernel_points: usize,
    pub s: f64,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        SelfTestConfig {
            band_limit: 32,
            seed: 1,
            heat_times: vec![0.01, 0.1, 1.0],
            kernel_band_limit: 12,
            kernel_points: 16,
            s: 0.75,
        }
    }
}

pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const HEAT_MASS_TOL: f64 = 1e-10;
pub const KERNEL_FORM_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub band_limit: usize,
    /// Max abs difference of grid values after synthesis, analysis, synthesis.
    pub round_trip_error: f64,
    /// Max over times of `|∫ Φ_t(σ·σ') dσ' − 1|`.
    pub heat_mass_error: f64,
    /// Max abs difference of the kernel-form and spectral `(−Δ)^s g` at the
    /// test points, relative to the largest spectral value.
    pub kernel_form_rel_error: f64,
    pub round_trip_pass: bool,
    pub heat_mass_pass: bool,
    pub kernel_form_pass: bool,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.round_trip_pass && self.heat_mass_pass && self.kernel_form_pass
    }
}

fn random_spectrum(l: usize, rng: &mut ChaCha8Rng) -> HarmonicSpectrum {
    let mut s = HarmonicSpectrum::zeros(l);
    for ll in 0..=l {
        for m in -(ll as i64)..=(ll as i64) {
            s.set(ll, m, rng.random_range(-1.0..1.0) / (1.0 + ll as f64));
        }
    }
    s
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Transform round trip, heat-kernel mass and kernel-form fractional
/// Laplacian against the spectral one.
pub fn self_test(cfg: &SelfTestConfig) -> Result<SelfTestReport, SpectralError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plan = SpherePlan::shared(cfg.band_limit);

    let spec = random_spectrum(cfg.band_limit, &mut rng);
    let values = plan.synthesis(&spec);
    let again = plan.synthesis(&plan.analysis(&values)?);
    let round_trip_error = values.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let points = plan.grid.points();
    let mut heat_mass_error = 0.0f64;
    for &t in &cfg.heat_times {
        let sigma = random_unit(&mut rng);
        let vals: Vec<f64> = points.iter().map(|p| heat_kernel(sigma.dot(*p), t)).collect::<Result<_, _>>()?;
        heat_mass_error = heat_mass_error.max((plan.integrate(&vals) - 1.0).abs());
    }

    let g = random_spectrum(cfg.kernel_band_limit, &mut rng);
    let spectral = laplacian(&g, cfg.s)?;
    let kernel = FracKernel::shared(cfg.s)?;
    let n_psi = 4 * cfg.kernel_band_limit + 8;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for _ in 0..cfg.kernel_points {
        let p = random_unit(&mut rng);
        let want = spectral.eval_at(p);
        let got = kernel.apply_at(&g, p, 24, n_psi);
        err = err.max((got - want).abs());
        scale = scale.max(want.abs());
    }
    let kernel_form_rel_error = err / scale;

    Ok(SelfTestReport {
        band_limit: cfg.band_limit,
        round_trip_error,
        heat_mass_error,
        kernel_form_rel_error,
        round_trip_pass: round_trip_error <= ROUND_TRIP_TOL,
        heat_mass_pass: heat_mass_error <= HEAT_MASS_TOL,
        kernel_form_pass: kernel_form_rel_error <= KERNEL_FORM_TOL,
    })
}

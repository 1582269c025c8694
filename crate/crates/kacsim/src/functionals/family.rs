use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{Mat3, Vec3};
use crate::sphere_spectral::{HarmonicSpectrum, SphereFunction, SpherePlan};

/// Smooth positive test functions on S².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `e^{u}` for a random band-limited `u` with RMS `amplitude`.
    ExpField { spectrum: HarmonicSpectrum },
    /// `e^{κ(μ·σ − 1)}`.
    VonMises { mu: Vec3, kappa: f64 },
    Mixture { components: Vec<(f64, Vec3, f64)> },
    /// `q(σ) + q(−σ)`.
    Symmetric { inner: Box<TestFunction> },
}

impl TestFunction {
    pub fn exp_field(seed: u64, band: usize, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spec = HarmonicSpectrum::zeros(band);
        for l in 1..=band {
            for m in -(l as i64)..=(l as i64) {
                let x: f64 = rng.sample(StandardNormal);
                spec.set(l, m, x / (1.0 + l as f64).powi(2));
            }
        }
        let rms = (spec.norm_sq() / (4.0 * std::f64::consts::PI)).sqrt();
        for c in &mut spec.coeffs {
            *c *= amplitude / rms;
        }
        TestFunction::ExpField { spectrum: spec }
    }

    pub fn symmetric(inner: TestFunction) -> Self {
        TestFunction::Symmetric { inner: Box::new(inner) }
    }

    pub fn eval(&self, p: Vec3) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::ExpField { spectrum } => spectrum.eval_at(p).exp(),
            TestFunction::VonMises { mu, kappa } => (kappa * (mu.dot(p) - 1.0)).exp(),
            TestFunction::Mixture { components } => {
                components.iter().map(|(w, mu, k)| w * (k * (mu.dot(p) - 1.0)).exp()).sum()
            }
            TestFunction::Symmetric { inner } => inner.eval(p) + inner.eval(-p),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, TestFunction::Symmetric { .. } | TestFunction::Constant { .. })
    }

    /// Grid values on `plan`.
    pub fn sample(&self, plan: &Arc<SpherePlan>) -> SphereFunction {
        let values = match self {
            TestFunction::ExpField { spectrum } if spectrum.band_limit <= plan.band_limit => {
                plan.synthesis(spectrum).into_iter().map(f64::exp).collect()
            }
            _ => plan.sample(|p| self.eval(p)),
        };
        SphereFunction { plan: plan.clone(), values, nonnegative: true }
    }

    /// Grid values of `g ∘ R`.
    pub fn sample_rotated(&self, plan: &Arc<SpherePlan>, rot: &Mat3) -> SphereFunction {
        let values = plan.sample(|p| self.eval(rot.apply(p)));
        SphereFunction { plan: plan.clone(), values, nonnegative: true }
    }
}

/// Seeded, deterministic list of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub members: Vec<(u64, TestFunction)>,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
    v.normalized()
}

impl TestFunctionFamily {
    /// `n` members cycling through the generator kinds; member `i` has seed
    /// `master_seed + i`.
    pub fn generate(n: usize, master_seed: u64) -> Self {
        let members = (0..n)
            .map(|i| {
                let seed = master_seed.wrapping_add(i as u64);
                (seed, Self::member(i, seed))
            })
            .collect();
        TestFunctionFamily { members }
    }

    /// `n` antipodally symmetric members.
    pub fn generate_symmetric(n: usize, master_seed: u64) -> Self {
        let members = (0..n)
            .map(|i| {
                let seed = master_seed.wrapping_add(i as u64);
                let f = Self::member(i, seed);
                (seed, if f.is_symmetric() { f } else { TestFunction::symmetric(f) })
            })
            .collect();
        TestFunctionFamily { members }
    }

    fn member(i: usize, seed: u64) -> TestFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        match i % 5 {
            0 => TestFunction::exp_field(seed, 4, rng.random_range(0.2..0.9)),
            1 => TestFunction::VonMises { mu: random_unit(&mut rng), kappa: rng.random_range(0.5..4.0) },
            2 => {
                let n = 2 + rng.random_range(0..2);
                let components = (0..n)
                    .map(|_| (rng.random_range(0.2..1.0), random_unit(&mut rng), rng.random_range(1.0..5.0)))
                    .collect();
                TestFunction::Mixture { components }
            }
            3 => TestFunction::symmetric(TestFunction::exp_field(seed, 3, rng.random_range(0.2..0.7))),
            _ => TestFunction::symmetric(TestFunction::VonMises {
                mu: random_unit(&mut rng),
                kappa: rng.random_range(0.5..3.0),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

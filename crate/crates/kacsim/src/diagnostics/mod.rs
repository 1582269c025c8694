//! Estimators and residuals on particle ensembles: moments, entropy and
//! Fisher information of pooled marginals, the weak distance, weak-form
//! residuals, pair closeness and the two-particle entropy production.

mod estimators;
mod knn;
mod production;
mod records;
mod weak;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::kernels::KernelError;

pub use estimators::{
    entropy_knn, entropy_knn_grouped, fisher_bandwidth, fisher_kde, fisher_kde_grouped, sample_se, Estimate,
    DUPLICATE_TOL, ENTROPY_MIN_SAMPLES, FISHER_MIN_SAMPLES,
};
pub use knn::PointGrid;
pub use production::{entropy_production_2, ProductionEstimate, ProductionRule};
pub use records::{
    checkpoint_records, monitor_monotone, pair_inverse_square, DiagnosticsConfig, DiagnosticsRecord, MonitorResult,
    Quantity,
};
pub use weak::{
    bump_family, weak_distance, weak_form_residual, BumpFunction, WeakIntegrals, WeakResidual, BUMP_FAMILY_SIZE,
    BUMP_FAMILY_VERSION,
};

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("estimator needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("time quadrature needs at least {need} checkpoints, got {got}")]
    TooFewCheckpoints { need: usize, got: usize },
    #[error("quadrature did not converge: {coarse:e} vs refined {refined:e}")]
    Quadrature { coarse: f64, refined: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Uniformly weighted samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    samples: Vec<Vec3>,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<Vec3>) -> Result<Self, DiagError> {
        if samples.is_empty() {
            return Err(DiagError::Invalid("empty sample".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(DiagError::Invalid("non-finite sample".into()));
        }
        Ok(EmpiricalMeasure { samples })
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> Vec3 {
        self.samples.iter().fold(Vec3::ZERO, |a, v| a + *v) / self.len() as f64
    }

    /// Root mean per-coordinate variance.
    pub fn spread(&self) -> f64 {
        let m = self.mean();
        (self.samples.iter().map(|v| (*v - m).norm_sq()).sum::<f64>() / (3.0 * self.len() as f64)).sqrt()
    }

    /// `(1/n) Σ φ(x_i)`.
    pub fn integrate<F: Fn(Vec3) -> f64>(&self, f: F) -> f64 {
        self.samples.iter().map(|v| f(*v)).sum::<f64>() / self.len() as f64
    }
}

/// `(1/n) Σ ⟨v_i⟩^ℓ` with `⟨v⟩ = √(1 + |v|²)`, one value per order.
pub fn moments(mu: &EmpiricalMeasure, orders: &[f64]) -> Result<Vec<f64>, DiagError> {
    if orders.iter().any(|l| !(*l >= 0.0)) {
        return Err(DiagError::Invalid("moment orders must be non-negative".into()));
    }
    Ok(orders.iter().map(|&l| mu.integrate(|v| (1.0 + v.norm_sq()).powf(0.5 * l))).collect())
}

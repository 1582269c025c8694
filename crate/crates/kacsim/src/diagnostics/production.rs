use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiagError;
use crate::geometry::Vec3;
use crate::kernels::{zonal_multipliers, Alpha, AngularKernel};
use crate::quadrature::{gauss_hermite, gauss_legendre};
use crate::sphere_spectral::{SphereGrid, SpherePlan};

/// Tensor Gauss–Hermite in `z` about `center` with length scale `z_scale`,
/// Gauss–Legendre in `r` on `[0, r_extent]`, and a band-limited harmonic
/// transform in `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductionRule {
    pub center: Vec3,
    pub z_scale: f64,
    pub z_nodes: usize,
    pub r_extent: f64,
    pub r_nodes: usize,
    pub band_limit: usize,
}

impl Default for ProductionRule {
    fn default() -> Self {
        ProductionRule { center: Vec3::ZERO, z_scale: 1.0, z_nodes: 8, r_extent: 6.0, r_nodes: 12, band_limit: 8 }
    }
}

impl ProductionRule {
    pub fn doubled(&self) -> Self {
        ProductionRule {
            z_nodes: 2 * self.z_nodes,
            r_nodes: 2 * self.r_nodes,
            band_limit: 2 * self.band_limit,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductionEstimate {
    /// Value with the doubled rule.
    pub value: f64,
    pub coarse: f64,
    pub rel_change: f64,
}

/// Largest tolerated ratio between the coarse and the doubled-rule value.
pub const REFINEMENT_RATIO: f64 = 1.1;
/// Values below this are treated as zero in the refinement check.
const ZERO_FLOOR: f64 = 1e-12;

/// `D₂(f) = ∬ (√(f(v')f(w')) − √(f(v)f(w)))² B dσ' dσ 8r² dz dr`, with the
/// doubled rule as a convergence check.
///
/// For fixed `(z, r)` put `h(σ) = √(f(z + rσ) f(z − rσ))`; then
/// `∬ (h(σ') − h(σ))² b(σ·σ') dσ dσ' = 2 Σ_ℓ μ_ℓ ‖h_ℓ‖²` with `μ_ℓ` the zonal
/// multipliers of `b`, which also covers singular `b`.
pub fn entropy_production_2<F>(f: F, alpha: &Alpha, b: &AngularKernel, rule: &ProductionRule) -> Result<ProductionEstimate, DiagError>
where
    F: Fn(Vec3) -> f64 + Sync,
{
    let coarse = production_at(&f, alpha, b, rule);
    let value = production_at(&f, alpha, b, &rule.doubled());
    if !(coarse.is_finite() && value.is_finite()) || coarse < 0.0 || value < 0.0 {
        return Err(DiagError::Quadrature { coarse, refined: value });
    }
    let (lo, hi) = (coarse.min(value), coarse.max(value));
    if hi > ZERO_FLOOR && hi > REFINEMENT_RATIO * lo.max(ZERO_FLOOR) {
        return Err(DiagError::Quadrature { coarse, refined: value });
    }
    let rel_change = if hi > 0.0 { (value - coarse).abs() / hi } else { 0.0 };
    Ok(ProductionEstimate { value, coarse, rel_change })
}

fn production_at<F: Fn(Vec3) -> f64 + Sync>(f: &F, alpha: &Alpha, b: &AngularKernel, rule: &ProductionRule) -> f64 {
    let l = rule.band_limit;
    // Smallest grid integrating degree-2L products exactly.
    let plan = SpherePlan::from_grid(SphereGrid::with_sizes(l, l + 1, 2 * l + 1).expect("minimal grid is valid"));
    let sphere = plan.grid.points();
    let mu = zonal_multipliers(b, l);
    let (zx, zw) = gauss_hermite(rule.z_nodes);
    let (rx, rw) = gauss_legendre(rule.r_nodes);
    let s = rule.z_scale;
    let rs: Vec<(f64, f64)> = rx.iter().zip(&rw).map(|(x, w)| (0.5 * rule.r_extent * (x + 1.0), 0.5 * rule.r_extent * w)).collect();
    let mut nodes = Vec::with_capacity(rule.z_nodes.pow(3));
    for (a, wa) in zx.iter().zip(&zw) {
        for (bb, wb) in zx.iter().zip(&zw) {
            for (c, wc) in zx.iter().zip(&zw) {
                let x = Vec3::new(*a, *bb, *c);
                nodes.push((rule.center + x * s, wa * wb * wc * x.norm_sq().exp() * s * s * s));
            }
        }
    }
    nodes
        .par_iter()
        .map(|(z, wz)| {
            let mut vals = vec![0.0; sphere.len()];
            let mut acc = 0.0;
            for &(r, wr) in &rs {
                for (v, u) in vals.iter_mut().zip(&sphere) {
                    *v = (f(*z + *u * r) * f(*z - *u * r)).max(0.0).sqrt();
                }
                if vals.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let spec = plan.analysis(&vals).expect("grid values match the plan");
                let power = spec.degree_power();
                let inner: f64 = power.iter().zip(&mu).skip(1).map(|(p, m)| p * m).sum();
                acc += wr * 8.0 * r * r * alpha.eval(r) * 2.0 * inner;
            }
            wz * acc
        })
        .sum()
}

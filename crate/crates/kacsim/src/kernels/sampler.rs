use std::f64::consts::PI;

use rand::Rng;

use super::{AngularKernel, KernelError};
use crate::geometry::Vec3;
use crate::quadrature::gauss_legendre;

/// Inverse-CDF sampler of `c = σ·σ'` with density proportional to `b(c)`,
/// from cell masses on a uniform grid of `[−1, 1]`. Within a cell the
/// inverse CDF is linear.
#[derive(Debug, Clone)]
pub struct AngularSampler {
    cells: usize,
    /// Cumulative masses `∫_{−1}^{c_i} b`, `cells + 1` entries.
    cdf: Vec<f64>,
}

impl AngularSampler {
    pub fn new(b: &AngularKernel, cells: usize) -> Result<Self, KernelError> {
        if !b.is_bounded() {
            return Err(KernelError::Unbounded(b.name.clone()));
        }
        if cells == 0 {
            return Err(KernelError::Invalid("sampler needs at least one cell".into()));
        }
        let (x, w) = gauss_legendre(6);
        let h = 2.0 / cells as f64;
        let mut cdf = Vec::with_capacity(cells + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            let a = -1.0 + h * i as f64;
            let mut m = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let c = a + 0.5 * h * (1.0 + xi);
                let v = b.eval(c);
                if !v.is_finite() || v < 0.0 {
                    return Err(KernelError::Tabulation { c, value: v });
                }
                m += 0.5 * h * wi * v;
            }
            acc += m;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(KernelError::Invalid(format!("{} has zero mass", b.name)));
        }
        Ok(AngularSampler { cells, cdf })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// `∫_{−1}^1 b(c) dc` of the tabulation.
    pub fn mass(&self) -> f64 {
        self.cdf[self.cells]
    }

    /// `‖b‖_{L¹(S²)} = 2π ∫ b dc` of the tabulation.
    pub fn l1_norm(&self) -> f64 {
        2.0 * PI * self.mass()
    }

    /// Probability of the cell `[c_i, c_{i+1}]`.
    pub fn cell_probability(&self, i: usize) -> f64 {
        (self.cdf[i + 1] - self.cdf[i]) / self.mass()
    }

    /// Sampled density at `c`, piecewise constant per cell.
    pub fn density(&self, c: f64) -> f64 {
        let h = 2.0 / self.cells as f64;
        let i = (((c + 1.0) / h).floor() as usize).min(self.cells - 1);
        self.cell_probability(i) / h
    }

    /// `E[1 − c]` under the tabulated law.
    pub fn mean_one_minus_c(&self) -> f64 {
        let h = 2.0 / self.cells as f64;
        (0..self.cells)
            .map(|i| self.cell_probability(i) * (1.0 - (-1.0 + h * (i as f64 + 0.5))))
            .sum()
    }

    pub fn sample_c<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.mass();
        let i = (self.cdf.partition_point(|v| *v <= u).max(1) - 1).min(self.cells - 1);
        let m = self.cdf[i + 1] - self.cdf[i];
        let f = if m > 0.0 { ((u - self.cdf[i]) / m).clamp(0.0, 1.0) } else { 0.5 };
        let h = 2.0 / self.cells as f64;
        (-1.0 + h * (i as f64 + f)).clamp(-1.0, 1.0)
    }

    /// `σ'` with density `b(σ·σ')/‖b‖_{L¹}`: tabulated `c` and a uniform
    /// azimuth about `σ`.
    pub fn sample_sigma_prime<R: Rng + ?Sized>(&self, rng: &mut R, sigma: Vec3) -> Vec3 {
        let c = self.sample_c(rng);
        let phi = 2.0 * PI * rng.random::<f64>();
        let (e1, e2) = sigma.orthonormal_pair();
        let st = (1.0 - c * c).max(0.0).sqrt();
        let (sp, cp) = phi.sin_cos();
        (sigma * c + (e1 * cp + e2 * sp) * st).normalized()
    }
}

use serde::{Deserialize, Serialize};

use super::{FunctionalError, LogData};
use crate::geometry::tangent_diff_sq_unchecked;
use crate::quadrature::log_gl;
use crate::sphere_spectral::{
    double_integral, eigenvalue, kappa_s, sobolev_seminorm_sq, DoubleRule, FracKernel, SpherePlan,
};

/// Log-spaced Gauss–Legendre nodes on `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub panels: usize,
    pub per_panel: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_min: 1e-6, t_max: 50.0, panels: 16, per_panel: 8 }
    }
}

impl TimeGrid {
    pub fn doubled(&self) -> Self {
        TimeGrid { panels: 2 * self.panels, ..*self }
    }
}

/// Time weights for `K^ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Weight {
    /// `t^{−s}`
    Power { s: f64 },
    /// `min(t^{−s}, u^{−s})`
    Capped { s: f64, u: f64 },
}

impl Weight {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Weight::Power { s } => t.powf(-s),
            Weight::Capped { s, u } => t.max(u).powf(-s),
        }
    }

    /// `∫_0^{t0} ω`.
    pub fn head(&self, t0: f64) -> f64 {
        match *self {
            Weight::Power { s } => t0.powf(1.0 - s) / (1.0 - s),
            Weight::Capped { s, u } => {
                if t0 <= u {
                    t0 * u.powf(-s)
                } else {
                    u.powf(1.0 - s) + (t0.powf(1.0 - s) - u.powf(1.0 - s)) / (1.0 - s)
                }
            }
        }
    }
}

/// Heat-flow history of one positive function on a time grid:
/// `⟨I'(g), g − g_t⟩` and `‖√g_t‖²_{Ḣ²}` at every node.
#[derive(Debug, Clone)]
pub struct HeatTrace {
    pub grid: TimeGrid,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub pairing: Vec<f64>,
    pub sqrt_h2: Vec<f64>,
    /// `‖√g‖²_{Ḣ²}` at `t = 0`.
    pub sqrt_h2_initial: f64,
    /// `d/dt ⟨I'(g), g − g_t⟩` at `t = 0`.
    pub pairing_slope: f64,
    /// `lim_{t→∞} ⟨I'(g), g − g_t⟩`.
    pub pairing_limit: f64,
}

impl HeatTrace {
    pub fn new(ld: &LogData, grid: TimeGrid) -> Self {
        let rule = log_gl(grid.t_min, grid.t_max, grid.panels, grid.per_panel);
        let d = ld.fisher_derivative();
        let lmax = ld.g_spec.band_limit;
        let per_degree: Vec<f64> = (0..=lmax)
            .map(|l| (l * l..(l + 1) * (l + 1)).map(|k| d.coeffs[k] * ld.g_spec.coeffs[k]).sum())
            .collect();
        let pairing_at = |t: f64| -> f64 {
            (1..=lmax).map(|l| -per_degree[l] * (-eigenvalue(l) * t).exp_m1()).sum()
        };
        let pairing: Vec<f64> = rule.nodes.iter().map(|t| pairing_at(*t)).collect();
        let plan = &ld.plan;
        let sqrt_h2: Vec<f64> = rule
            .nodes
            .iter()
            .map(|t| {
                let gt = ld.g_spec.map_degree(|l| (-eigenvalue(l) * t).exp());
                let vals = plan.synthesis(&gt);
                sqrt_h2_of_values(plan, vals)
            })
            .collect();
        HeatTrace {
            grid,
            pairing,
            sqrt_h2,
            sqrt_h2_initial: sqrt_h2_of_values(plan, ld.g.clone()),
            pairing_slope: (1..=lmax).map(|l| per_degree[l] * eigenvalue(l)).sum(),
            pairing_limit: (1..=lmax).map(|l| per_degree[l]).sum(),
            nodes: rule.nodes,
            weights: rule.weights,
        }
    }

    /// `K^ω(g) = ∫ ‖√g_t‖²_{Ḣ²} ω(t) dt`.
    pub fn k_omega(&self, w: Weight) -> f64 {
        let body: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.sqrt_h2)
            .map(|((t, wt), h)| wt * h * w.eval(*t))
            .sum();
        body + self.sqrt_h2_initial * w.head(self.grid.t_min)
    }

    /// `K^s(g)`.
    pub fn k_s(&self, s: f64) -> f64 {
        self.k_omega(Weight::Power { s })
    }

    /// `⟨I'(g), (−Δ)^s g⟩ = κ_s ∫ ⟨I'(g), g − g_t⟩ t^{−1−s} dt`.
    pub fn frac_dissipation(&self, s: f64) -> f64 {
        let body: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.pairing)
            .map(|((t, wt), p)| wt * p * t.powf(-1.0 - s))
            .sum();
        let head = self.pairing_slope * self.grid.t_min.powf(1.0 - s) / (1.0 - s);
        let tail = self.pairing_limit * self.grid.t_max.powf(-s) / s;
        kappa_s(s) * (body + head + tail)
    }
}

fn sqrt_h2_of_values(plan: &SpherePlan, mut vals: Vec<f64>) -> f64 {
    crate::sphere_spectral::floor_positive(&mut vals);
    for v in vals.iter_mut() {
        *v = v.sqrt();
    }
    sobolev_seminorm_sq(&plan.analysis(&vals).unwrap(), 2.0)
}

/// `∬ g(σ) |∇log g(σ') − ∇log g(σ)|²_{σ',σ} χ_s(σ·σ') dσ dσ'` with both
/// spectra truncated to `band_limit`.
pub fn frac_dissipation_double(ld: &LogData, s: f64, band_limit: usize) -> Result<f64, FunctionalError> {
    let k = FracKernel::shared(s)?;
    let plan = SpherePlan::shared(band_limit);
    let g = ld.g_spec.with_band_limit(band_limit);
    let u = ld.u_spec.with_band_limit(band_limit);
    let rule = DoubleRule::for_band_limit(band_limit, s);
    Ok(double_integral(&plan, &[&g, &u], true, |th| k.chi_theta(th), &rule, |a, b| {
        a.values[0] * tangent_diff_sq_unchecked(b.grads[1], a.grads[1], b.sigma, a.sigma)
    }))
}

/// Both sides of the `Λ_b` inequality for one symmetric function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when both sides vanish.
    pub ratio: Option<f64>,
}

/// `½∬ g|∇log g' − ∇log g|² b` against `∬ (g'−g)²/(g+g') b` for an
/// antipodally symmetric `g`, spectra truncated to `band_limit`.
pub fn lambda_b_estimate<B: Fn(f64) -> f64 + Sync>(
    ld: &LogData,
    b: B,
    band_limit: usize,
) -> Result<LambdaEstimate, FunctionalError> {
    let grid = &ld.plan.grid;
    let (nt, np) = (grid.n_theta, grid.n_phi);
    let mut dev = 0.0f64;
    let scale = ld.g.iter().cloned().fold(0.0, f64::max);
    for i in 0..nt {
        for j in 0..np {
            let a = ld.g[i * np + j];
            let b = ld.g[(nt - 1 - i) * np + (j + np / 2) % np];
            dev = dev.max((a - b).abs() / scale);
        }
    }
    if dev > 1e-10 || np % 2 == 1 {
        return Err(FunctionalError::Asymmetric(dev));
    }
    let plan = SpherePlan::shared(band_limit);
    let g = ld.g_spec.with_band_limit(band_limit);
    let u = ld.u_spec.with_band_limit(band_limit);
    let rule = DoubleRule::bounded(band_limit);
    let kern = |th: f64| b(th.cos());
    let lhs = 0.5
        * double_integral(&plan, &[&g, &u], true, kern, &rule, |x, y| {
            x.values[0] * tangent_diff_sq_unchecked(y.grads[1], x.grads[1], y.sigma, x.sigma)
        });
    let rhs = double_integral(&plan, &[&g], false, kern, &rule, |x, y| {
        let d = y.values[0] - x.values[0];
        d * d / (x.values[0] + y.values[0])
    });
    let ratio = if lhs.abs() < 1e-14 && rhs.abs() < 1e-14 { None } else { Some(lhs / rhs) };
    Ok(LambdaEstimate { lhs, rhs, ratio })
}

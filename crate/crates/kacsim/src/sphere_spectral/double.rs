use std::f64::consts::PI;

use rayon::prelude::*;

use super::fractional::SingularRadialRule;
use super::plan::{HarmonicSpectrum, PointLegendre, SpherePlan};
use crate::geometry::Vec3;

/// Inner rule for `∬ F(σ, σ') K(σ·σ') dσ dσ'`: around every outer grid node,
/// geodesic polar coordinates with `θ = π y^p` in Gauss–Legendre panels and
/// `n_psi` equiangular azimuths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleRule {
    pub panels: usize,
    pub per_panel: usize,
    pub n_psi: usize,
    pub exponent: f64,
}

impl DoubleRule {
    /// Rule sized for band limit `l` and a kernel singular like `θ^{−2−2s}`.
    pub fn for_band_limit(l: usize, s: f64) -> Self {
        DoubleRule {
            panels: (l / 4).max(3),
            per_panel: 16,
            n_psi: 2 * l + 6,
            exponent: 1.0 / (2.0 - 2.0 * s),
        }
    }

    /// Rule for a bounded kernel.
    pub fn bounded(l: usize) -> Self {
        DoubleRule { panels: (l / 4).max(3), per_panel: 16, n_psi: 2 * l + 6, exponent: 1.0 }
    }

    pub fn refined(&self) -> Self {
        DoubleRule { panels: 2 * self.panels, n_psi: 2 * self.n_psi, ..*self }
    }
}

/// Values and tangent gradients of several spectra at one point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub sigma: Vec3,
    pub values: Vec<f64>,
    pub grads: Vec<Vec3>,
}

impl PointData {
    fn new(n: usize) -> Self {
        PointData { sigma: Vec3::ZERO, values: vec![0.0; n], grads: vec![Vec3::ZERO; n] }
    }
}

struct OrderSums {
    a: Vec<f64>,
    b: Vec<f64>,
    da: Vec<f64>,
    db: Vec<f64>,
}

/// `∬ f(σ, σ') K(θ(σ, σ')) dσ dσ'` with σ on the plan's grid and σ' on a
/// polar rule around σ. `f` sees the spectra's values (and gradients when
/// `with_gradients`) at both points.
pub fn double_integral<K, F>(
    plan: &SpherePlan,
    specs: &[&HarmonicSpectrum],
    with_gradients: bool,
    kernel: K,
    rule: &DoubleRule,
    f: F,
) -> f64
where
    K: Fn(f64) -> f64 + Sync,
    F: Fn(&PointData, &PointData) -> f64 + Sync,
{
    let grid = &plan.grid;
    let nt = grid.n_theta;
    let np = grid.n_phi;
    let ns = specs.len();
    let lmax = specs.iter().map(|s| s.band_limit).max().unwrap_or(0);

    let outer_vals: Vec<Vec<f64>> = specs.iter().map(|s| plan.synthesis(s)).collect();
    let outer_grads: Vec<Vec<Vec3>> = if with_gradients {
        specs.iter().map(|s| plan.gradient(s)).collect()
    } else {
        Vec::new()
    };

    let radial = SingularRadialRule::with_exponent(rule.exponent, rule.panels, rule.per_panel);
    let dpsi = 2.0 * PI / rule.n_psi as f64;
    let radial_w: Vec<f64> = radial
        .thetas
        .iter()
        .zip(&radial.weights)
        .map(|(th, w)| if *th > 0.0 { w * dpsi * kernel(*th) } else { 0.0 })
        .collect();

    (0..nt)
        .into_par_iter()
        .map(|i| {
            let (st, ct) = (grid.sin_theta[i], grid.cos_theta[i]);
            let sigma0 = Vec3::new(st, 0.0, ct);
            let e1 = Vec3::new(ct, 0.0, -st);
            let e2 = Vec3::new(0.0, 1.0, 0.0);
            let mut work = PointLegendre::new(lmax);
            let mut sums: Vec<OrderSums> = (0..ns)
                .map(|_| OrderSums {
                    a: vec![0.0; lmax + 1],
                    b: vec![0.0; lmax + 1],
                    da: vec![0.0; lmax + 1],
                    db: vec![0.0; lmax + 1],
                })
                .collect();
            let mut outer: Vec<PointData> = (0..np)
                .map(|j| {
                    let mut d = PointData::new(ns);
                    d.sigma = grid.point(i, j);
                    for k in 0..ns {
                        d.values[k] = outer_vals[k][i * np + j];
                        if with_gradients {
                            d.grads[k] = outer_grads[k][i * np + j];
                        }
                    }
                    d
                })
                .collect();
            let mut inner = PointData::new(ns);
            let mut cm = vec![0.0; lmax + 1];
            let mut sm = vec![0.0; lmax + 1];
            let mut acc = 0.0;
            for (th, wr) in radial.thetas.iter().zip(&radial_w) {
                if *wr == 0.0 {
                    continue;
                }
                let (s_th, c_th) = th.sin_cos();
                for q in 0..rule.n_psi {
                    let psi = q as f64 * dpsi;
                    let p = sigma0 * c_th + (e1 * psi.cos() + e2 * psi.sin()) * s_th;
                    work.fill(p);
                    for (k, spec) in specs.iter().enumerate() {
                        let o = &mut sums[k];
                        work.order_sums(spec, &mut o.a, &mut o.b, &mut o.da, &mut o.db);
                    }
                    let cz = p.z.clamp(-1.0, 1.0);
                    let rho = (p.x * p.x + p.y * p.y).sqrt();
                    let rho_safe = rho.max(1e-300);
                    let phi0 = p.y.atan2(p.x);
                    let mut ring_acc = 0.0;
                    for (j, od) in outer.iter_mut().enumerate() {
                        let al = phi0 + grid.phi[j];
                        let (sa, ca) = al.sin_cos();
                        cm[0] = 1.0;
                        sm[0] = 0.0;
                        for m in 1..=lmax {
                            cm[m] = cm[m - 1] * ca - sm[m - 1] * sa;
                            sm[m] = sm[m - 1] * ca + cm[m - 1] * sa;
                        }
                        inner.sigma = Vec3::new(rho * ca, rho * sa, cz);
                        let e_t = Vec3::new(cz * ca, cz * sa, -rho);
                        let e_p = Vec3::new(-sa, ca, 0.0);
                        for (k, o) in sums.iter().enumerate() {
                            let mut v = 0.0;
                            for m in 0..=lmax {
                                v += o.a[m] * cm[m] + o.b[m] * sm[m];
                            }
                            inner.values[k] = v;
                            if with_gradients {
                                let (mut dth, mut dph) = (0.0, 0.0);
                                for m in 0..=lmax {
                                    dth += o.da[m] * cm[m] + o.db[m] * sm[m];
                                    dph += m as f64 * (o.b[m] * cm[m] - o.a[m] * sm[m]);
                                }
                                inner.grads[k] = e_t * dth + e_p * (dph / rho_safe);
                            }
                        }
                        ring_acc += f(od, &inner);
                    }
                    acc += wr * ring_acc;
                }
            }
            acc * grid.weight(i)
        })
        .sum()
}

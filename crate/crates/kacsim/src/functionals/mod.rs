//! Fisher-information functionals on S² and the inequalities relating them.

mod family;
mod suite;
mod time;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use family::{TestFunction, TestFunctionFamily};
pub use suite::{inequality_suite, InequalityKind, SuiteConfig, SuiteSummary, C0, C1};
pub use time::{frac_dissipation_double, lambda_b_estimate, HeatTrace, LambdaEstimate, TimeGrid, Weight};

use crate::geometry::{b_field, Vec3};
use crate::sphere_spectral::{
    eigenvalue, floor_positive, HarmonicSpectrum, SpectralError, SphereFunction, SpherePlan,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("function is not positive on the grid (min {min}, max {max})")]
    NotPositive { min: f64, max: f64 },
    #[error("function is not antipodally symmetric (deviation {0})")]
    Asymmetric(f64),
    #[error("NaN in report {0}")]
    NaN(String),
    #[error("empty test-function family")]
    EmptyFamily,
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// One functional value or inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub name: String,
    pub seed: u64,
    pub s: Option<f64>,
    pub value: f64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub margin: Option<f64>,
    pub degenerate: bool,
    pub band_limit: usize,
    pub grid: String,
    pub note: String,
}

impl FunctionalReport {
    pub fn value(name: &str, seed: u64, value: f64, plan: &SpherePlan) -> Self {
        FunctionalReport {
            name: name.to_string(),
            seed,
            s: None,
            value,
            lhs: None,
            rhs: None,
            ratio: None,
            margin: None,
            degenerate: false,
            band_limit: plan.band_limit,
            grid: format!("{}x{}", plan.grid.n_theta, plan.grid.n_phi),
            note: String::new(),
        }
    }

    /// `lhs ≥ threshold · rhs`; ratio `lhs/rhs` and margin `ratio − threshold`.
    /// Both sides below `1e−14` is recorded as degenerate.
    pub fn inequality(name: &str, seed: u64, lhs: f64, rhs: f64, threshold: f64, plan: &SpherePlan) -> Self {
        let mut r = Self::value(name, seed, lhs, plan);
        r.lhs = Some(lhs);
        r.rhs = Some(rhs);
        if lhs.abs() < 1e-14 && rhs.abs() < 1e-14 {
            r.degenerate = true;
            r.note = "degenerate: both sides vanish".into();
        } else {
            let ratio = lhs / rhs;
            r.ratio = Some(ratio);
            r.margin = Some(ratio - threshold);
        }
        r
    }

    pub fn check_nan(&self) -> Result<(), FunctionalError> {
        let vals = [Some(self.value), self.lhs, self.rhs, self.ratio, self.margin];
        if vals.iter().flatten().any(|v| v.is_nan()) {
            return Err(FunctionalError::NaN(self.name.clone()));
        }
        Ok(())
    }
}

/// A positive function with `u = log g` and `∇u` precomputed on its plan.
#[derive(Debug, Clone)]
pub struct LogData {
    pub plan: Arc<SpherePlan>,
    pub g: Vec<f64>,
    pub g_spec: HarmonicSpectrum,
    pub u_spec: HarmonicSpectrum,
    pub grad_u: Vec<Vec3>,
}

impl LogData {
    pub fn new(f: &SphereFunction) -> Result<Self, FunctionalError> {
        check_positive(&f.values)?;
        let mut g = f.values.clone();
        floor_positive(&mut g);
        let plan = f.plan.clone();
        let u: Vec<f64> = g.iter().map(|v| v.ln()).collect();
        let u_spec = plan.analysis(&u)?;
        let grad_u = plan.gradient(&u_spec);
        let g_spec = plan.analysis(&g)?;
        Ok(LogData { plan, g, g_spec, u_spec, grad_u })
    }

    fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let v: Vec<f64> = (0..self.g.len()).map(f).collect();
        self.plan.integrate(&v)
    }

    /// `∫ g |∇ log g|²`.
    pub fn fisher(&self) -> f64 {
        self.integrate(|i| self.g[i] * self.grad_u[i].norm_sq())
    }

    /// `Σ_{k,l} ∫ g |b_k·∇(b_l·∇ log g)|²`.
    pub fn cal_k(&self) -> f64 {
        let pts = self.plan.grid.points();
        let mut acc = vec![0.0; self.g.len()];
        for l in 1..=3 {
            let w: Vec<f64> = pts
                .iter()
                .zip(&self.grad_u)
                .map(|(p, gu)| b_field(l, *p).unwrap().dot(*gu))
                .collect();
            let gw = self.plan.gradient(&self.plan.analysis(&w).unwrap());
            for k in 1..=3 {
                for (i, p) in pts.iter().enumerate() {
                    let d = b_field(k, *p).unwrap().dot(gw[i]);
                    acc[i] += d * d;
                }
            }
        }
        self.integrate(|i| self.g[i] * acc[i])
    }

    /// `∫ g |∇ log g|⁴`.
    pub fn cal_j(&self) -> f64 {
        self.integrate(|i| self.g[i] * self.grad_u[i].norm_sq().powi(2))
    }

    /// `∫ g |∇ log g|^{2(1+s)}`.
    pub fn j_s(&self, s: f64) -> f64 {
        if s == 1.0 {
            return self.cal_j();
        }
        self.integrate(|i| self.g[i] * self.grad_u[i].norm_sq().powf(1.0 + s))
    }

    /// `p^p ∫ |∇ g^{1/p}|^p`, `p = 2(1+s)`.
    pub fn j_s_sobolev_form(&self, s: f64) -> f64 {
        let p = 2.0 * (1.0 + s);
        let h: Vec<f64> = self.g.iter().map(|v| v.powf(1.0 / p)).collect();
        let gh = self.plan.gradient(&self.plan.analysis(&h).unwrap());
        p.powf(p) * self.plan.integrate(&gh.iter().map(|x| x.norm().powf(p)).collect::<Vec<_>>())
    }

    /// Spectrum of `I'(g) = −2Δ log g − |∇ log g|²`.
    pub fn fisher_derivative(&self) -> HarmonicSpectrum {
        let sq: Vec<f64> = self.grad_u.iter().map(|x| x.norm_sq()).collect();
        let mut out = self.plan.analysis(&sq).unwrap();
        for c in &mut out.coeffs {
            *c = -*c;
        }
        let lap = self.u_spec.map_degree(|l| 2.0 * eigenvalue(l));
        out.add_scaled(&lap, 1.0);
        out
    }

    /// `⟨I'(g), h⟩ = ∫ (2∇log g·∇h − |∇log g|² h)`.
    pub fn pairing(&self, h: &HarmonicSpectrum) -> f64 {
        self.fisher_derivative().dot(h)
    }

    /// `⟨I'(g), (−Δ)^s g⟩` from the spectra.
    pub fn frac_dissipation_spectral(&self, s: f64) -> f64 {
        let d = self.fisher_derivative();
        let g = &self.g_spec;
        let mut acc = 0.0;
        for l in 1..=g.band_limit {
            let lam = eigenvalue(l).powf(s);
            for k in l * l..(l + 1) * (l + 1) {
                acc += lam * d.coeffs[k] * g.coeffs[k];
            }
        }
        acc
    }

    pub fn mass(&self) -> f64 {
        self.plan.integrate(&self.g)
    }

    /// `‖√g‖²_{Ḣ^ν}`.
    pub fn sqrt_seminorm_sq(&self, nu: f64) -> f64 {
        sqrt_seminorm_sq(&self.plan, &self.g, nu)
    }
}

/// `‖√g‖²_{Ḣ^ν}` for grid values of a non-negative `g`.
pub fn sqrt_seminorm_sq(plan: &SpherePlan, g: &[f64], nu: f64) -> f64 {
    let r: Vec<f64> = g.iter().map(|v| v.max(0.0).sqrt()).collect();
    crate::sphere_spectral::sobolev_seminorm_sq(&plan.analysis(&r).unwrap(), nu)
}

fn check_positive(values: &[f64]) -> Result<(), FunctionalError> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) || min < -1e-14 * max || min.is_nan() {
        return Err(FunctionalError::NotPositive { min, max });
    }
    Ok(())
}

/// `I(g) = ∫ g |∇ log g|²`.
pub fn fisher_sphere(g: &SphereFunction) -> Result<f64, FunctionalError> {
    Ok(LogData::new(g)?.fisher())
}

/// `K(g) = Σ_{k,l} ∫ g |b_k·∇(b_l·∇ log g)|²`.
pub fn cal_k(g: &SphereFunction) -> Result<f64, FunctionalError> {
    Ok(LogData::new(g)?.cal_k())
}

/// `J(g) = ∫ g |∇ log g|⁴`.
pub fn cal_j(g: &SphereFunction) -> Result<f64, FunctionalError> {
    Ok(LogData::new(g)?.cal_j())
}

/// `J^s(g) = ∫ g |∇ log g|^{2(1+s)}`.
pub fn j_s(g: &SphereFunction, s: f64) -> Result<f64, FunctionalError> {
    Ok(LogData::new(g)?.j_s(s))
}

/// `Σ_k b_k·∇(b_k·∇ g)` on the grid, for comparison with `Δg`.
pub fn laplacian_by_fields(plan: &SpherePlan, spec: &HarmonicSpectrum) -> Vec<f64> {
    let pts = plan.grid.points();
    let grad = plan.gradient(spec);
    let mut out = vec![0.0; pts.len()];
    for k in 1..=3 {
        let w: Vec<f64> = pts.iter().zip(&grad).map(|(p, g)| b_field(k, *p).unwrap().dot(*g)).collect();
        let gw = plan.gradient(&plan.analysis(&w).unwrap());
        for (i, p) in pts.iter().enumerate() {
            out[i] += b_field(k, *p).unwrap().dot(gw[i]);
        }
    }
    out
}

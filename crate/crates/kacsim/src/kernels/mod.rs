//! Collision kernels `B = α(r) b(σ·σ')`: power-law exponents, subordinated
//! angular kernels, their bounded approximations `b^k`, the Λ lower bound,
//! angular sampling and the weak-form operator `A(φ)`.

mod angular;
mod aphi;
mod omega;
mod regularized;
mod sampler;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use angular::{bbar, AngularKernel};
pub use aphi::{
    a_phi, a_phi_constant, modified_spherical_bessel, zonal_multipliers, APhiRule, GaussianBumpA, TestPhi, BUMP_LMAX,
};
pub use omega::{Omega, Subordinated, TruncatedSeries, TRUNCATED_SERIES_CAP};
pub use regularized::{
    check_grid, default_eps, h1_margin, lambda_bound_closed_form, lambda_lower_bound, psi_k, solve_u, Alpha,
    RegularizedKernel, LAMBDA_LOC,
};
pub use sampler::AngularSampler;

/// Cells of the tabulated angular inverse CDF.
pub const SAMPLER_CELLS: usize = 4096;
/// Default slack `λ` in `|γ| ≤ 2√(Λ(1−λ))`.
pub const DEFAULT_LAMBDA_SLACK: f64 = 0.05;
/// Bisection tolerance for `u_k`.
pub const U_K_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameter: {0}")]
    Invalid(String),
    #[error("non-integrable: {0}")]
    NonIntegrable(String),
    #[error("kernel {0} is unbounded")]
    Unbounded(String),
    #[error("tabulation failed: b({c}) = {value}")]
    Tabulation { c: f64, value: f64 },
    #[error("{0}")]
    Io(String),
}

/// Exponents of the inverse-power-law kernels with `q ∈ (2, 7/3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub q: f64,
    pub gamma: f64,
    pub s: f64,
    /// Moment order the initial datum must exceed.
    pub lbar_min: f64,
}

pub fn power_law(q: f64) -> Result<PowerLawParams, KernelError> {
    if !(q > 2.0 && q <= 7.0 / 3.0 + 1e-12) {
        return Err(KernelError::Invalid(format!("q = {q} outside (2, 7/3]")));
    }
    Ok(PowerLawParams {
        q,
        gamma: (q - 5.0) / (q - 1.0),
        s: 1.0 / (q - 1.0),
        lbar_min: (5.0 - q) * (q + 3.0) / ((q - 1.0) * (3.0 * q - 5.0)),
    })
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA_SLACK
}

fn default_b0() -> f64 {
    1.0 / (4.0 * PI)
}

fn one() -> f64 {
    1.0
}

/// Kernel block of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `b` proxied by `χ_s`, `s = 1/(q−1)`, `γ = (q−5)/(q−1)`.
    PowerLaw {
        q: f64,
        k: usize,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        eps: Option<f64>,
    },
    /// `b = χ_s`; `γ` defaults to `1 − 4s`, the power-law relation.
    FracLaplacian {
        s: f64,
        k: usize,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        eps: Option<f64>,
    },
    /// `b = ∫ Φ_t ω dt` with `ω` read from a two-column CSV.
    Table {
        omega_table_path: PathBuf,
        gamma: f64,
        k: usize,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        eps: Option<f64>,
    },
    /// `α ≡ alpha`, `b ≡ b0`.
    Maxwell {
        #[serde(default = "default_b0")]
        b0: f64,
        #[serde(default = "one")]
        alpha: f64,
    },
}

/// A bounded kernel ready for simulation.
#[derive(Debug, Clone)]
pub struct CollisionKernel {
    pub name: String,
    pub alpha: Alpha,
    pub angular: AngularKernel,
    pub sampler: Arc<AngularSampler>,
    pub regularized: Option<Arc<RegularizedKernel>>,
}

impl CollisionKernel {
    pub fn maxwell(b0: f64, alpha: f64) -> Result<Self, KernelError> {
        if !(b0 > 0.0 && alpha > 0.0 && b0.is_finite() && alpha.is_finite()) {
            return Err(KernelError::Invalid("Maxwell kernel constants must be positive".into()));
        }
        let angular = AngularKernel::constant(b0);
        let sampler = Arc::new(AngularSampler::new(&angular, SAMPLER_CELLS)?);
        Ok(CollisionKernel {
            name: "maxwell".into(),
            alpha: Alpha::Constant { value: alpha },
            angular,
            sampler,
            regularized: None,
        })
    }

    pub fn from_regularized(reg: RegularizedKernel, gamma: f64) -> Result<Self, KernelError> {
        if gamma > 0.0 {
            return Err(KernelError::Invalid(format!("γ = {gamma} must be non-positive")));
        }
        let sampler = Arc::new(reg.sampler()?);
        Ok(CollisionKernel {
            name: reg.angular.name.clone(),
            alpha: Alpha::Regularized { gamma, k: reg.k },
            angular: reg.angular.clone(),
            sampler,
            regularized: Some(Arc::new(reg)),
        })
    }

    /// `sup α`.
    pub fn alpha_bound(&self) -> f64 {
        self.alpha.bound().expect("simulation kernels have bounded α")
    }

    /// `‖b‖_{L¹(S²)}` of the tabulated angular law.
    pub fn l1_norm(&self) -> f64 {
        self.sampler.l1_norm()
    }

    /// `sup_r α(r) · ‖b‖_{L¹}`, the per-pair collision-rate envelope before
    /// the `1/(N−1)` factor.
    pub fn envelope(&self) -> f64 {
        self.alpha_bound() * self.l1_norm()
    }
}

/// Everything `kernel-info` reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelInfo {
    pub kind: String,
    pub gamma: f64,
    pub s: Option<f64>,
    pub lbar_min: Option<f64>,
    pub k: Option<usize>,
    pub eps_k: Option<f64>,
    pub bbar: f64,
    pub bbar_k: Option<f64>,
    pub sup_bk: f64,
    pub l1_bk: f64,
    pub rho_k: Option<f64>,
    pub u_k: Option<f64>,
    pub truncation_ratio: Option<f64>,
    pub lambda_bound: Option<f64>,
    pub lambda_slack: Option<f64>,
    pub h1_margin: Option<f64>,
    pub notes: Vec<String>,
}

impl KernelSpec {
    fn omega_and_gamma(&self) -> Result<(Omega, f64, Option<PowerLawParams>), KernelError> {
        match self {
            KernelSpec::PowerLaw { q, .. } => {
                let p = power_law(*q)?;
                Ok((Omega::fractional(p.s)?, p.gamma, Some(p)))
            }
            KernelSpec::FracLaplacian { s, gamma, .. } => {
                let om = Omega::fractional(*s)?;
                Ok((om, gamma.unwrap_or(1.0 - 4.0 * s), None))
            }
            KernelSpec::Table { omega_table_path, gamma, .. } => {
                Ok((Omega::from_csv(omega_table_path)?, *gamma, None))
            }
            KernelSpec::Maxwell { .. } => Err(KernelError::Invalid("Maxwell kernels have no ω".into())),
        }
    }

    fn k_lambda_eps(&self) -> (usize, f64, Option<f64>) {
        match *self {
            KernelSpec::PowerLaw { k, lambda, eps, .. }
            | KernelSpec::FracLaplacian { k, lambda, eps, .. }
            | KernelSpec::Table { k, lambda, eps, .. } => (k, lambda, eps),
            KernelSpec::Maxwell { .. } => (0, DEFAULT_LAMBDA_SLACK, None),
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            KernelSpec::Maxwell { b0, alpha } => {
                if !(*b0 > 0.0 && *alpha > 0.0) {
                    return Err(KernelError::Invalid("Maxwell kernel constants must be positive".into()));
                }
            }
            KernelSpec::PowerLaw { q, .. } => {
                power_law(*q)?;
            }
            KernelSpec::FracLaplacian { s, gamma, .. } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(KernelError::Invalid(format!("s = {s} outside (0, 1)")));
                }
                if let Some(g) = gamma {
                    if *g > 0.0 || *g <= -3.0 {
                        return Err(KernelError::Invalid(format!("γ = {g} outside (−3, 0]")));
                    }
                }
            }
            KernelSpec::Table { gamma, .. } => {
                if *gamma > 0.0 || *gamma <= -3.0 {
                    return Err(KernelError::Invalid(format!("γ = {gamma} outside (−3, 0]")));
                }
            }
        }
        let (k, lambda, eps) = self.k_lambda_eps();
        if !matches!(self, KernelSpec::Maxwell { .. }) {
            if k == 0 {
                return Err(KernelError::Invalid("k must be at least 1".into()));
            }
            if !(0.0..1.0).contains(&lambda) {
                return Err(KernelError::Invalid(format!("λ = {lambda} outside [0, 1)")));
            }
            if let Some(e) = eps {
                if !(e > 0.0) {
                    return Err(KernelError::Invalid(format!("ε = {e} must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn regularized(&self) -> Result<(RegularizedKernel, f64), KernelError> {
        self.validate()?;
        let (omega, gamma, _) = self.omega_and_gamma()?;
        let (k, _, eps) = self.k_lambda_eps();
        let reg = RegularizedKernel::from_omega(omega, k, eps.unwrap_or_else(|| default_eps(k)))?;
        Ok((reg, gamma))
    }

    pub fn build(&self) -> Result<CollisionKernel, KernelError> {
        self.validate()?;
        match *self {
            KernelSpec::Maxwell { b0, alpha } => CollisionKernel::maxwell(b0, alpha),
            _ => {
                let (reg, gamma) = self.regularized()?;
                CollisionKernel::from_regularized(reg, gamma)
            }
        }
    }

    pub fn info(&self) -> Result<KernelInfo, KernelError> {
        self.validate()?;
        if let KernelSpec::Maxwell { b0, .. } = *self {
            let ck = self.build()?;
            return Ok(KernelInfo {
                kind: "maxwell".into(),
                gamma: 0.0,
                s: None,
                lbar_min: None,
                k: None,
                eps_k: None,
                bbar: ck.angular.bbar()?,
                bbar_k: None,
                sup_bk: b0,
                l1_bk: ck.l1_norm(),
                rho_k: None,
                u_k: None,
                truncation_ratio: None,
                lambda_bound: None,
                lambda_slack: None,
                h1_margin: None,
                notes: vec![],
            });
        }
        let (omega, gamma, params) = self.omega_and_gamma()?;
        let (k, lambda, _) = self.k_lambda_eps();
        let (reg, _) = self.regularized()?;
        let s = match &omega {
            Omega::Power { s, .. } => Some(*s),
            _ => reg.base.singularity,
        };
        let lb = lambda_lower_bound(&omega, reg.eps)?;
        let mut notes = vec![format!("eps_k = {:e}; psi_k: C2 smoothstep", reg.eps)];
        if matches!(self, KernelSpec::PowerLaw { .. }) {
            notes.push("angular kernel proxied by chi_s with s = 1/(q-1)".into());
        }
        let sampler = reg.sampler()?;
        Ok(KernelInfo {
            kind: match self {
                KernelSpec::PowerLaw { .. } => "power_law",
                KernelSpec::FracLaplacian { .. } => "frac_laplacian",
                _ => "table",
            }
            .into(),
            gamma,
            s,
            lbar_min: params.map(|p| p.lbar_min),
            k: Some(k),
            eps_k: Some(reg.eps),
            bbar: reg.base.bbar()?,
            bbar_k: Some(reg.angular.bbar()?),
            sup_bk: reg.sup,
            l1_bk: sampler.l1_norm(),
            rho_k: Some(reg.rho),
            u_k: Some(reg.u_k(U_K_TOL)?),
            truncation_ratio: Some(reg.truncation_ratio),
            lambda_bound: Some(lb),
            lambda_slack: Some(lambda),
            h1_margin: Some(h1_margin(lb, lambda, gamma)),
            notes,
        })
    }
}

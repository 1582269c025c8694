use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::omega::Subordinated;
use super::KernelError;
use crate::quadrature::gauss_legendre;
use crate::sphere_spectral::{angle_from_cos, FracKernel};

type ThetaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Angular part `b(σ·σ')` of a collision kernel, evaluated through the
/// geodesic angle `θ = arccos(σ·σ')`.
#[derive(Clone)]
pub struct AngularKernel {
    pub name: String,
    eval: ThetaFn,
    /// Uniform bound, present iff the kernel is bounded.
    pub bound: Option<f64>,
    /// Exponent `s` of a `θ^{−2−2s}` singularity at `θ = 0`.
    pub singularity: Option<f64>,
    /// `b(c) = b(−c)`.
    pub antipodal: bool,
}

impl fmt::Debug for AngularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngularKernel")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .field("singularity", &self.singularity)
            .field("antipodal", &self.antipodal)
            .finish()
    }
}

impl AngularKernel {
    pub fn from_theta_fn<F>(name: impl Into<String>, f: F, bound: Option<f64>, singularity: Option<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        AngularKernel { name: name.into(), eval: Arc::new(f), bound, singularity, antipodal: false }
    }

    pub fn constant(value: f64) -> Self {
        AngularKernel {
            name: format!("constant({value})"),
            eval: Arc::new(move |_| value),
            bound: Some(value),
            singularity: None,
            antipodal: true,
        }
    }

    /// `χ_s`, the kernel of `(−Δ_σ)^s`.
    pub fn frac_laplacian(s: f64) -> Result<Self, KernelError> {
        let k = FracKernel::shared(s).map_err(|e| KernelError::Invalid(e.to_string()))?;
        Ok(AngularKernel {
            name: format!("chi_{s}"),
            eval: Arc::new(move |th| k.chi_theta(th)),
            bound: None,
            singularity: Some(s),
            antipodal: false,
        })
    }

    pub fn subordinated(sub: Arc<Subordinated>) -> Self {
        let singularity = match sub.omega {
            super::Omega::Power { s, .. } => Some(s),
            _ => {
                let a = sub.omega.small_time_exponent();
                (a < -1.0).then_some(-1.0 - a)
            }
        };
        AngularKernel {
            name: "subordinated".into(),
            eval: Arc::new(move |th| sub.eval_theta(th)),
            bound: None,
            singularity,
            antipodal: false,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let f = self.eval.clone();
        AngularKernel {
            name: format!("{factor}*{}", self.name),
            eval: Arc::new(move |th| factor * f(th)),
            bound: self.bound.map(|b| b * factor),
            ..self.clone()
        }
    }

    /// `b` at geodesic angle `θ ∈ (0, π]`.
    pub fn eval_theta(&self, theta: f64) -> f64 {
        (self.eval)(theta)
    }

    /// `b(c)` for `c ∈ [−1, 1)`; at `c = 1` only for bounded kernels.
    pub fn eval(&self, c: f64) -> f64 {
        (self.eval)(angle_from_cos(c))
    }

    pub fn is_bounded(&self) -> bool {
        self.bound.is_some()
    }

    /// `b̄ = ½ ∫ (1 − σ·σ') b(σ·σ') dσ'`.
    pub fn bbar(&self) -> Result<f64, KernelError> {
        bbar(self)
    }

    /// `‖b‖_{L¹(S²)} = 2π ∫_{−1}^1 b(c) dc`, finite only for bounded kernels.
    pub fn l1_norm(&self) -> Result<f64, KernelError> {
        if !self.is_bounded() {
            return Err(KernelError::NonIntegrable(format!("{} has no L¹ norm", self.name)));
        }
        dyadic_theta_integral(self, |th| th.sin())
    }
}

/// `b̄ = ½ · 2π ∫_{−1}^1 (1 − c) b(c) dc` with dyadic panels in `θ`
/// accumulating towards `θ = 0` and a geometric tail.
pub fn bbar(b: &AngularKernel) -> Result<f64, KernelError> {
    let v = dyadic_theta_integral(b, |th| 2.0 * (0.5 * th).sin().powi(2) * th.sin())?;
    Ok(0.5 * v)
}

const MAX_LEVELS: usize = 400;
const OVERFLOW_GUARD: f64 = 1e250;

/// `2π ∫_0^π w(θ) b(θ) dθ` over `[π/2, π]` and `[π 2^{−j−1}, π 2^{−j}]`.
fn dyadic_theta_integral<W: Fn(f64) -> f64>(b: &AngularKernel, w: W) -> Result<f64, KernelError> {
    let (x, wt) = gauss_legendre(24);
    let panel = |a: f64, c: f64| -> f64 {
        let h = 0.125 * (c - a);
        (0..4)
            .map(|q| {
                let m = a + h * (2 * q + 1) as f64;
                x.iter().zip(&wt).map(|(xi, wi)| wi * h * w(m + h * xi) * b.eval_theta(m + h * xi)).sum::<f64>()
            })
            .sum()
    };
    let mut total = panel(0.5 * PI, PI);
    let mut prev = f64::NAN;
    let mut prev_ratio = f64::NAN;
    let mut hi = 0.5 * PI;
    for level in 1..MAX_LEVELS {
        let p = panel(0.5 * hi, hi);
        hi *= 0.5;
        if !p.is_finite() || p < 0.0 {
            return Err(KernelError::NonIntegrable(format!("{}: non-finite panel", b.name)));
        }
        total += p;
        if total > OVERFLOW_GUARD {
            return Err(KernelError::NonIntegrable(format!("{}: overflow", b.name)));
        }
        if p == 0.0 || p < 1e-17 * total {
            return Ok(2.0 * PI * total);
        }
        let ratio = p / prev;
        if level > 4 {
            if ratio >= 1.0 - 1e-9 && prev_ratio >= 1.0 - 1e-9 {
                return Err(KernelError::NonIntegrable(format!("{}: panel sums do not decay", b.name)));
            }
            let drift = (ratio - prev_ratio).abs();
            if ratio < 1.0 && p * drift / ((1.0 - ratio) * (1.0 - ratio)) < 1e-15 * total {
                return Ok(2.0 * PI * (total + p * ratio / (1.0 - ratio)));
            }
        }
        prev = p;
        prev_ratio = ratio;
    }
    Err(KernelError::NonIntegrable(format!("{}: no geometric decay", b.name)))
}

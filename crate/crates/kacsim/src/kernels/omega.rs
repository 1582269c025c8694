use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::KernelError;
use crate::quadrature::{legendre_all, log_gl};
use crate::sphere_spectral::{
    angle_from_cos, eigenvalue, heat_kernel_small_time, kappa_s, tail_laplace, FracKernel,
};
use statrs::function::gamma::gamma;

/// Time weight `ω(t) ≥ 0` of a subordinated kernel `b̃ = ∫ Φ_t ω(t) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Omega {
    /// `scale · t^{−1−s}`
    Power { s: f64, scale: f64 },
    /// Log-log interpolation of `(t, ω)` pairs, extended as a power law
    /// beyond both ends.
    Table { t: Vec<f64>, w: Vec<f64> },
}

impl Omega {
    /// `κ_s t^{−1−s}`, whose subordinated kernel is `χ_s`.
    pub fn fractional(s: f64) -> Result<Self, KernelError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(KernelError::Invalid(format!("s = {s} outside (0, 1)")));
        }
        Ok(Omega::Power { s, scale: kappa_s(s) })
    }

    pub fn table(t: Vec<f64>, w: Vec<f64>) -> Result<Self, KernelError> {
        if t.len() < 2 || t.len() != w.len() {
            return Err(KernelError::Invalid("omega table needs at least two (t, w) rows".into()));
        }
        if t.windows(2).any(|p| !(p[1] > p[0])) || t[0] <= 0.0 || !t.iter().all(|x| x.is_finite()) {
            return Err(KernelError::Invalid("omega table times must be positive and increasing".into()));
        }
        if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(KernelError::Invalid("omega table values must be positive".into()));
        }
        Ok(Omega::Table { t, w })
    }

    /// Two-column CSV `t, ω(t)`; a non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self, KernelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))?;
        let (mut t, mut w) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))?;
            if rec.len() != 2 {
                return Err(KernelError::Invalid(format!("row {}: expected two columns", i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    w.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(KernelError::Invalid(format!("row {}: not numeric", i + 1))),
            }
        }
        Omega::table(t, w)
    }

    /// Log-log slopes at the left and right ends.
    fn end_slopes(t: &[f64], w: &[f64]) -> (f64, f64) {
        let n = t.len();
        let left = (w[1] / w[0]).ln() / (t[1] / t[0]).ln();
        let right = (w[n - 1] / w[n - 2]).ln() / (t[n - 1] / t[n - 2]).ln();
        (left, right)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Omega::Power { s, scale } => scale * x.powf(-1.0 - s),
            Omega::Table { t, w } => {
                let n = t.len();
                let (left, right) = Self::end_slopes(t, w);
                if x <= t[0] {
                    return w[0] * (x / t[0]).powf(left);
                }
                if x >= t[n - 1] {
                    return w[n - 1] * (x / t[n - 1]).powf(right);
                }
                let i = t.partition_point(|v| *v <= x) - 1;
                let f = (x / t[i]).ln() / (t[i + 1] / t[i]).ln();
                w[i] * (w[i + 1] / w[i]).powf(f)
            }
        }
    }

    /// Exponent `a` with `ω(t) ~ t^a` as `t → 0`.
    pub fn small_time_exponent(&self) -> f64 {
        match self {
            Omega::Power { s, .. } => -1.0 - s,
            Omega::Table { t, w } => Self::end_slopes(t, w).0,
        }
    }

    /// Exponent `a` with `ω(t) ~ t^a` as `t → ∞`.
    pub fn large_time_exponent(&self) -> f64 {
        match self {
            Omega::Power { s, .. } => -1.0 - s,
            Omega::Table { t, w } => Self::end_slopes(t, w).1,
        }
    }

    /// `b̃(1) = ∞`, i.e. `∫_0 ω(t) t^{−1} dt` diverges.
    pub fn is_singular(&self) -> bool {
        self.small_time_exponent() <= 0.0
    }

    /// `∫_ε^∞ e^{−λt} ω(t) dt`.
    pub fn laplace_tail(&self, lambda: f64, eps: f64) -> Result<f64, KernelError> {
        match self {
            Omega::Power { s, scale } => {
                if eps <= 0.0 {
                    return Err(KernelError::NonIntegrable("ω near t = 0".into()));
                }
                if lambda == 0.0 {
                    Ok(scale * eps.powf(-s) / s)
                } else {
                    Ok(scale * tail_laplace(lambda, eps, *s))
                }
            }
            Omega::Table { t, .. } => {
                if eps <= 0.0 && self.small_time_exponent() <= -1.0 {
                    return Err(KernelError::NonIntegrable("ω near t = 0".into()));
                }
                let lo = if eps > 0.0 { eps } else { t[0] * 1e-12 };
                if lambda == 0.0 {
                    let beta = self.large_time_exponent();
                    if beta >= -1.0 {
                        return Err(KernelError::NonIntegrable("ω as t → ∞".into()));
                    }
                    let hi = t[t.len() - 1].max(lo);
                    let body = if hi > lo { self.log_integral(lo, hi, |_| 1.0) } else { 0.0 };
                    return Ok(body + self.eval(hi) * hi / (-beta - 1.0));
                }
                let hi = lo + 60.0 / lambda;
                Ok(self.log_integral(lo, hi, |x| (-lambda * x).exp()))
            }
        }
    }

    /// `∫_a^b f(t) ω(t) dt` on a log-spaced rule.
    fn log_integral<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let panels = ((b / a).ln() / 0.5).ceil().max(4.0) as usize;
        log_gl(a, b, panels, 8).integrate(|x| f(x) * self.eval(x))
    }

    /// `∫_ε^∞ (1 − e^{−at}) ω(t) dt`.
    pub fn one_minus_exp_integral(&self, a: f64, eps: f64) -> Result<f64, KernelError> {
        match self {
            Omega::Power { s, scale } => {
                // a^s [Γ(1−s)/s − ∫_0^{aε} (1 − e^{−x}) x^{−1−s} dx]
                let y = a * eps.max(0.0);
                let head = if y < 1.0 {
                    let mut sum = 0.0;
                    let mut fact = 1.0;
                    for n in 1..60 {
                        fact *= n as f64;
                        let term = y.powf(n as f64 - s) / (fact * (n as f64 - s));
                        sum += if n % 2 == 1 { term } else { -term };
                        if term < 1e-18 * sum.abs() {
                            break;
                        }
                    }
                    sum
                } else {
                    gamma(1.0 - s) / s - (y.powf(-s) / s - tail_laplace(1.0, y, *s))
                };
                Ok(scale * a.powf(*s) * (gamma(1.0 - s) / s - head))
            }
            Omega::Table { t, .. } => {
                if self.small_time_exponent() <= -2.0 && eps <= 0.0 {
                    return Err(KernelError::NonIntegrable("(1 − e^{−at}) ω near t = 0".into()));
                }
                let beta = self.large_time_exponent();
                if beta >= -1.0 {
                    return Err(KernelError::NonIntegrable("ω as t → ∞".into()));
                }
                let lo = if eps > 0.0 { eps } else { t[0] * 1e-12 };
                let hi = t[t.len() - 1].max(lo * 2.0).max(60.0 / a);
                let body = self.log_integral(lo, hi, |x| -(-a * x).exp_m1());
                Ok(body + self.eval(hi) * hi / (-beta - 1.0))
            }
        }
    }
}

/// `Σ_ℓ a_ℓ P_ℓ(c)` with `a_ℓ = (2ℓ+1)/(4π) ∫_ε^∞ e^{−λ_ℓ t} ω(t) dt`: the
/// subordinated kernel with time integration restricted to `t ≥ ε`.
#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    pub eps: f64,
    pub coeffs: Vec<f64>,
}

/// Series longer than this are rejected.
pub const TRUNCATED_SERIES_CAP: usize = 50_000;

impl TruncatedSeries {
    pub fn new(omega: &Omega, eps: f64) -> Result<Self, KernelError> {
        if !(eps > 0.0) {
            return Err(KernelError::Invalid(format!("truncation time {eps} must be positive")));
        }
        let mut coeffs = Vec::new();
        let mut total = 0.0;
        for l in 0.. {
            if l > TRUNCATED_SERIES_CAP {
                return Err(KernelError::Invalid(format!("truncation time {eps} too small")));
            }
            let lam = eigenvalue(l);
            let a = (2 * l + 1) as f64 / (4.0 * PI) * omega.laplace_tail(lam, eps)?;
            coeffs.push(a);
            total += a;
            if l > 0 && lam * eps > 30.0 && a < 1e-16 * total {
                break;
            }
        }
        Ok(TruncatedSeries { eps, coeffs })
    }

    pub fn eval(&self, c: f64) -> f64 {
        let mut p = Vec::new();
        legendre_all(self.coeffs.len() - 1, c.clamp(-1.0, 1.0), &mut p);
        self.coeffs.iter().zip(&p).map(|(a, pl)| a * pl).sum()
    }

    /// Value at `c = 1`, the maximum.
    pub fn at_one(&self) -> f64 {
        self.coeffs.iter().sum()
    }
}

const SPLIT: f64 = 0.1;

/// `b̃(θ) = ∫_0^∞ Φ_t(θ) ω(t) dt`.
#[derive(Debug, Clone)]
pub struct Subordinated {
    pub omega: Omega,
    frac: Option<(Arc<FracKernel>, f64)>,
    tail: Option<TruncatedSeries>,
}

impl Subordinated {
    pub fn new(omega: Omega) -> Result<Self, KernelError> {
        match &omega {
            Omega::Power { s, scale } => {
                let fk = FracKernel::shared(*s).map_err(|e| KernelError::Invalid(e.to_string()))?;
                let factor = scale / fk.kappa;
                Ok(Subordinated { omega, frac: Some((fk, factor)), tail: None })
            }
            Omega::Table { .. } => {
                let tail = TruncatedSeries::new(&omega, SPLIT)?;
                Ok(Subordinated { omega, frac: None, tail: Some(tail) })
            }
        }
    }

    pub fn eval_theta(&self, theta: f64) -> f64 {
        if let Some((fk, factor)) = &self.frac {
            return factor * fk.chi_theta(theta);
        }
        let tail = self.tail.as_ref().expect("table kernels carry a series");
        let lo = (theta * theta / 2000.0).max(1e-300);
        let head = if lo < SPLIT {
            let panels = ((SPLIT / lo).ln() / 1.0).ceil().max(4.0) as usize;
            log_gl(lo, SPLIT, panels, 8).integrate(|t| heat_kernel_small_time(theta, t) * self.omega.eval(t))
        } else {
            0.0
        };
        head + tail.eval(theta.cos())
    }

    pub fn eval(&self, c: f64) -> f64 {
        self.eval_theta(angle_from_cos(c))
    }

    pub fn truncated(&self, eps: f64) -> Result<TruncatedSeries, KernelError> {
        TruncatedSeries::new(&self.omega, eps)
    }
}


use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::{gamma, gamma_ur};

use super::heat::angular_integral;
use super::plan::{HarmonicSpectrum, PointLegendre};
use super::SpectralError;
use crate::geometry::Vec3;
use crate::quadrature::{composite_gl, legendre_all, log_gl, Chebyshev};

/// `c_s = ∫_0^∞ (1 − e^{−t}) t^{−1−s} dt = Γ(1−s)/s`.
pub fn c_s(s: f64) -> f64 {
    gamma(1.0 - s) / s
}

/// Normalization `1/c_s` under which the subordinated and kernel forms
/// reproduce `λ_ℓ^s`.
pub fn kappa_s(s: f64) -> f64 {
    s / gamma(1.0 - s)
}

/// Same constant by direct quadrature of its defining integral.
pub fn c_s_quadrature(s: f64) -> f64 {
    let small = log_gl(1e-14, 1.0, 28, 16).integrate(|t| -(-t).exp_m1() * t.powf(-1.0 - s));
    let big = log_gl(1.0, 1e4, 8, 16).integrate(|t| (1.0 - (-t).exp()) * t.powf(-1.0 - s));
    // ∫_0^{1e-14} ≈ ∫ t^{-s}, ∫_{1e4}^∞ ≈ ∫ t^{-1-s}
    small + big + 1e-14f64.powf(1.0 - s) / (1.0 - s) + 1e4f64.powf(-s) / s
}

/// `lim_{θ→0} θ^{2+2s} χ_s(cos θ)`, the planar fractional-Laplacian constant in R².
pub fn chi_s_diagonal_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(1.0 + s) / (PI * gamma(-s).abs())
}

/// Split point between the closed-formula and series parts of the
/// subordination integral.
const T_SPLIT: f64 = 0.1;

/// Upper incomplete gamma `Γ(a, x)` for `a > 0`.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    if x > 700.0 {
        return 0.0;
    }
    gamma_ur(a, x) * gamma(a)
}

/// `∫_{t0}^∞ e^{−λt} t^{−1−s} dt` for `λ > 0`.
pub fn tail_laplace(lambda: f64, t0: f64, s: f64) -> f64 {
    let x = lambda * t0;
    if x > 700.0 {
        return 0.0;
    }
    lambda.powf(s) * (x.powf(-s) * (-x).exp() - upper_gamma(1.0 - s, x)) / s
}

/// Evaluator of the fractional-Laplacian kernel
/// `χ_s(c) = κ_s ∫ Φ_t(c) t^{−1−s} dt`, `κ_s = 1/c_s`.
#[derive(Debug, Clone)]
pub struct FracKernel {
    pub s: f64,
    pub kappa: f64,
    series: Vec<f64>,
    table: Chebyshev,
}

static FRAC_KERNELS: OnceLock<Mutex<HashMap<u64, Arc<FracKernel>>>> = OnceLock::new();

impl FracKernel {
    pub fn new(s: f64) -> Result<Self, SpectralError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(SpectralError::InvalidPower(s));
        }
        let mut series = vec![1.0 / (4.0 * PI) * T_SPLIT.powf(-s) / s];
        for l in 1.. {
            let lf = l as f64;
            let a = (2.0 * lf + 1.0) / (4.0 * PI) * tail_laplace(lf * (lf + 1.0), T_SPLIT, s);
            series.push(a);
            if a.abs() < 1e-18 {
                break;
            }
        }
        let mut k = FracKernel {
            s,
            kappa: kappa_s(s),
            series,
            table: Chebyshev::from_values(0.0, PI, vec![0.0, 0.0]),
        };
        let d0 = chi_s_diagonal_constant(s);
        let kref = &k;
        let table = Chebyshev::fit(0.0, PI, 128, |th| {
            if th == 0.0 {
                d0
            } else {
                th.powf(2.0 + 2.0 * s) * kref.chi_theta_direct(th)
            }
        });
        k.table = table;
        Ok(k)
    }

    /// Process-wide cached kernel for `s`.
    pub fn shared(s: f64) -> Result<Arc<FracKernel>, SpectralError> {
        let map = FRAC_KERNELS.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(k) = map.lock().unwrap().get(&s.to_bits()) {
            return Ok(k.clone());
        }
        let k = Arc::new(FracKernel::new(s)?);
        map.lock().unwrap().insert(s.to_bits(), k.clone());
        Ok(k)
    }

    /// `χ_s` at geodesic angle `θ`, from the subordination integral without
    /// tabulation.
    pub fn chi_theta_direct(&self, theta: f64) -> f64 {
        let s = self.s;
        let alpha = 1.5 + s;
        let g = |a: f64| -> f64 {
            let x0 = a / T_SPLIT;
            if x0 > 700.0 {
                return 0.0;
            }
            let main = upper_gamma(alpha, x0);
            let lo = x0.max(1e-9);
            let hi = x0 + 80.0;
            let corr = log_gl(lo, hi, 16, 10)
                .integrate(|u| u.powf(alpha - 1.0) * (-u).exp() * (a / (4.0 * u)).exp_m1());
            a.powf(-alpha) * (main + corr)
        };
        let small = 2f64.sqrt() / (4.0 * PI).powf(1.5) * angular_integral(theta, |psi| psi * g(0.25 * psi * psi));
        let mut p = Vec::new();
        legendre_all(self.series.len() - 1, theta.cos(), &mut p);
        let big: f64 = self.series.iter().zip(&p).map(|(a, pl)| a * pl).sum();
        self.kappa * (small + big)
    }

    /// `χ_s` at geodesic angle `θ ∈ (0, π]`.
    pub fn chi_theta(&self, theta: f64) -> f64 {
        self.table.eval(theta) * theta.powf(-2.0 - 2.0 * self.s)
    }

    /// `χ_s(c)` for `c ∈ [−1, 1)`.
    pub fn chi(&self, c: f64) -> Result<f64, SpectralError> {
        if c >= 1.0 {
            return Err(SpectralError::SingularPoint);
        }
        Ok(self.chi_theta(angle_from_cos(c)))
    }

    /// Empirical `c̃_s = min_{θ∈(0,π/2)} θ^{1+2s} sin θ χ_s(cos θ)` on a fine grid.
    pub fn lower_bound_constant(&self) -> f64 {
        (1..=2000)
            .map(|i| {
                let th = 0.5 * PI * i as f64 / 2000.0;
                th.powf(1.0 + 2.0 * self.s) * th.sin() * self.chi_theta(th)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Zonal multipliers `μ_ℓ = 2π ∫ (1 − P_ℓ(c)) χ_s(c) dc` of the kernel form.
    pub fn kernel_multipliers(&self, lmax: usize) -> Vec<f64> {
        let rule = SingularRadialRule::new(self.s, 24, 16);
        let mut mu = vec![0.0; lmax + 1];
        for (th, w) in rule.thetas.iter().zip(&rule.weights) {
            let k = self.chi_theta(*th) * w;
            let q = one_minus_legendre(lmax, *th);
            for l in 1..=lmax {
                mu[l] += 2.0 * PI * q[l] * k;
            }
        }
        mu
    }

    /// `(−Δ)^s g` at one point from the kernel form, with a local polar rule
    /// around `sigma`.
    pub fn apply_at(&self, spec: &HarmonicSpectrum, sigma: Vec3, panels: usize, n_psi: usize) -> f64 {
        let rule = SingularRadialRule::new(self.s, panels, 16);
        let sigma = sigma.normalized();
        let (e1, e2) = sigma.orthonormal_pair();
        let mut work = PointLegendre::new(spec.band_limit);
        work.fill(sigma);
        let g0 = work.value(spec);
        let mut acc = 0.0;
        for (th, w) in rule.thetas.iter().zip(&rule.weights) {
            let (st, ct) = th.sin_cos();
            let mut mean = 0.0;
            for b in 0..n_psi {
                let psi = 2.0 * PI * b as f64 / n_psi as f64;
                let p = sigma * ct + (e1 * psi.cos() + e2 * psi.sin()) * st;
                work.fill(p);
                mean += work.value(spec);
            }
            mean /= n_psi as f64;
            acc += 2.0 * PI * w * (g0 - mean) * self.chi_theta(*th);
        }
        acc
    }
}

/// `θ` from `c = cos θ`, accurate near `c = 1`.
pub fn angle_from_cos(c: f64) -> f64 {
    2.0 * ((0.5 * (1.0 - c)).max(0.0).sqrt()).min(1.0).asin()
}

/// `1 − P_ℓ(cos θ)` for ℓ ≤ lmax, stable for small θ.
pub fn one_minus_legendre(lmax: usize, theta: f64) -> Vec<f64> {
    // d_ℓ = 1 − P_ℓ satisfies the Legendre recurrence with a source term
    let c = theta.cos();
    let omc = 2.0 * (0.5 * theta).sin().powi(2);
    let mut d = vec![0.0; lmax + 1];
    if lmax >= 1 {
        d[1] = omc;
    }
    for l in 2..=lmax {
        let lf = l as f64;
        // P_ℓ = ((2ℓ−1) c P_{ℓ−1} − (ℓ−1) P_{ℓ−2}) / ℓ with P = 1 − d
        d[l] = ((2.0 * lf - 1.0) * (c * d[l - 1] + omc) - (lf - 1.0) * d[l - 2]) / lf;
    }
    d
}

/// Radial rule `θ = π y^p`, `p = 1/(2−2s)`, in Gauss–Legendre panels on
/// `y ∈ [0, 1]`; weights include `sin θ dθ`. The substitution absorbs the
/// `θ^{1−2s}` behaviour of second-order differences against `χ_s`.
#[derive(Debug, Clone)]
pub struct SingularRadialRule {
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SingularRadialRule {
    pub fn new(s: f64, panels: usize, per_panel: usize) -> Self {
        Self::with_exponent(1.0 / (2.0 - 2.0 * s), panels, per_panel)
    }

    pub fn with_exponent(p: f64, panels: usize, per_panel: usize) -> Self {
        let base = composite_gl(0.0, 1.0, panels, per_panel);
        let mut thetas = Vec::with_capacity(base.len());
        let mut weights = Vec::with_capacity(base.len());
        for (y, w) in base.nodes.iter().zip(&base.weights) {
            let th = PI * y.powf(p);
            let dth = PI * p * y.powf(p - 1.0);
            thetas.push(th);
            weights.push(w * dth * th.sin());
        }
        SingularRadialRule { thetas, weights }
    }
}

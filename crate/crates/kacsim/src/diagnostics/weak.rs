use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::sample_se;
use super::{DiagError, EmpiricalMeasure};
use crate::geometry::Vec3;
use crate::kernels::{CollisionKernel, GaussianBumpA, TestPhi};
use crate::quadrature::gauss_legendre;
use crate::simulator::Ensemble;

/// Identifier of the enumeration below; bump it whenever the family changes.
pub const BUMP_FAMILY_VERSION: &str = "dyadic-bump-v1";
pub const BUMP_FAMILY_SIZE: usize = 64;

/// `max |β'|` for `β(x) = (1 − x²)³`, attained at `x² = 1/5`.
const BETA_D1: f64 = 1.717_300_206_588_085;
/// `max |β''| = |β''(0)|`.
const BETA_D2: f64 = 6.0;

/// `a · Π_i β((v_i − c_i)/w)` with `β(x) = (1 − x²)³₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub level: u32,
    pub center: Vec3,
    pub width: f64,
    pub amplitude: f64,
}

fn beta(x: f64) -> f64 {
    let u = 1.0 - x * x;
    if u <= 0.0 {
        0.0
    } else {
        u * u * u
    }
}

impl BumpFunction {
    fn new(level: u32, center: Vec3, width: f64) -> Self {
        // ‖φ‖∞ + ‖∇φ‖∞ + ‖∇²φ‖∞ ≤ 1 with the Hessian bounded by its
        // largest absolute row sum.
        let grad = 3f64.sqrt() * BETA_D1 / width;
        let hess = (BETA_D2 + 2.0 * BETA_D1 * BETA_D1) / (width * width);
        BumpFunction { level, center, width, amplitude: 1.0 / (1.0 + grad + hess) }
    }

    pub fn eval(&self, v: Vec3) -> f64 {
        let d = (v - self.center) / self.width;
        self.amplitude * beta(d.x) * beta(d.y) * beta(d.z)
    }
}

/// The fixed family `φ_1, …, φ_64`: bumps of half-width `h_j = 2^{1−j}`
/// centred on `h_j Z³ ∩ [−2, 2]³`, ordered by level, then by distance of
/// the centre from the origin, then lexicographically.
pub fn bump_family() -> Vec<BumpFunction> {
    let mut out = Vec::with_capacity(BUMP_FAMILY_SIZE);
    let mut level = 0u32;
    while out.len() < BUMP_FAMILY_SIZE {
        let h = 2f64.powi(1 - level as i32);
        let m = (2.0 / h).round() as i64;
        let mut centers: Vec<(i64, i64, i64)> = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    centers.push((a, b, c));
                }
            }
        }
        centers.sort_by_key(|&(a, b, c)| (a * a + b * b + c * c, a, b, c));
        for (a, b, c) in centers {
            if out.len() == BUMP_FAMILY_SIZE {
                break;
            }
            out.push(BumpFunction::new(level, Vec3::new(a as f64, b as f64, c as f64) * h, h));
        }
        level += 1;
    }
    out
}

/// `∫ φ_n dμ` for every member of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakIntegrals {
    pub version: String,
    pub values: Vec<f64>,
}

impl WeakIntegrals {
    pub fn from_empirical(mu: &EmpiricalMeasure) -> Self {
        let fam = bump_family();
        WeakIntegrals { version: BUMP_FAMILY_VERSION.into(), values: fam.iter().map(|p| mu.integrate(|v| p.eval(v))).collect() }
    }

    /// Integrals against a density by tensor Gauss–Legendre on each support.
    pub fn from_density<F: Fn(Vec3) -> f64>(f: F, nodes: usize) -> Self {
        let (x, w) = gauss_legendre(nodes);
        let values = bump_family()
            .iter()
            .map(|p| {
                let h = p.width;
                let mut acc = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    for (yj, wj) in x.iter().zip(&w) {
                        for (zk, wk) in x.iter().zip(&w) {
                            let v = p.center + Vec3::new(*xi, *yj, *zk) * h;
                            acc += wi * wj * wk * p.eval(v) * f(v);
                        }
                    }
                }
                acc * h * h * h
            })
            .collect();
        WeakIntegrals { version: BUMP_FAMILY_VERSION.into(), values }
    }
}

/// `Σ_{n ≤ 64} 2^{−n} |∫ φ_n dμ − ∫ φ_n dν|`.
pub fn weak_distance(mu: &WeakIntegrals, nu: &WeakIntegrals) -> Result<f64, DiagError> {
    if mu.version != nu.version || mu.values.len() != nu.values.len() {
        return Err(DiagError::Invalid(format!("bump families differ: {} vs {}", mu.version, nu.version)));
    }
    Ok(mu.values.iter().zip(&nu.values).enumerate().map(|(n, (a, b))| 0.5f64.powi(n as i32 + 1) * (a - b).abs()).sum())
}

/// Trace of `F_{φ,t} = ∫φ dμ_t − ∫φ dμ_0 − ∫_0^t ∫ A(φ) dν_τ dτ` over the
/// checkpoints, with trapezoidal time quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub times: Vec<f64>,
    /// Replica average of `|F_{φ,t}|` at each checkpoint.
    pub mean_abs: Vec<f64>,
    pub se: Vec<f64>,
    /// `F_{φ,t}` per replica at the last checkpoint.
    pub final_values: Vec<f64>,
}

pub const MIN_RESIDUAL_CHECKPOINTS: usize = 8;

pub fn weak_form_residual(ens: &Ensemble, phi: &TestPhi, kernel: &CollisionKernel) -> Result<WeakResidual, DiagError> {
    let times = &ens.checkpoints;
    if times.len() < MIN_RESIDUAL_CHECKPOINTS {
        return Err(DiagError::TooFewCheckpoints { need: MIN_RESIDUAL_CHECKPOINTS, got: times.len() });
    }
    if times[0] != 0.0 {
        return Err(DiagError::Invalid("the first checkpoint must be t = 0".into()));
    }
    let bump = match phi {
        TestPhi::GaussianBump { center } => Some(GaussianBumpA::new(*center, &kernel.angular)),
        _ => None,
    };
    let n = ens.n;
    let traces: Vec<Vec<f64>> = ens
        .replicas
        .par_iter()
        .map(|rep| {
            let mass: Vec<f64> =
                rep.snapshots.iter().map(|s| s.iter().map(|v| phi.eval(*v)).sum::<f64>() / n as f64).collect();
            let flux: Vec<f64> = rep
                .snapshots
                .iter()
                .map(|s| match &bump {
                    Some(a) => pair_average(s, |v, w| a.eval(v, w, &kernel.alpha)),
                    None => 0.0,
                })
                .collect();
            let mut out = Vec::with_capacity(times.len());
            let mut integral = 0.0;
            for c in 0..times.len() {
                if c > 0 {
                    integral += 0.5 * (times[c] - times[c - 1]) * (flux[c] + flux[c - 1]);
                }
                out.push(mass[c] - mass[0] - integral);
            }
            out
        })
        .collect();
    let mut mean_abs = Vec::with_capacity(times.len());
    let mut se = Vec::with_capacity(times.len());
    for c in 0..times.len() {
        let a: Vec<f64> = traces.iter().map(|t| t[c].abs()).collect();
        mean_abs.push(a.iter().sum::<f64>() / a.len() as f64);
        se.push(if a.len() > 1 { sample_se(&a) } else { f64::NAN });
    }
    Ok(WeakResidual {
        times: times.clone(),
        mean_abs,
        se,
        final_values: traces.iter().map(|t| *t.last().unwrap()).collect(),
    })
}

/// `∫ g dν` for the off-diagonal pair measure of `v` and symmetric `g`.
fn pair_average<G: Fn(Vec3, Vec3) -> f64>(v: &[Vec3], g: G) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += g(v[i], v[j]);
        }
    }
    2.0 * acc / (n * (n - 1)) as f64
}

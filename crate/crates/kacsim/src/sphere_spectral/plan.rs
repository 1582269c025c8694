use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::geometry::Vec3;
use crate::quadrature::gauss_legendre;

/// Gauss–Legendre nodes in `c = cos θ` times equiangular nodes in `φ`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub band_limit: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// `cos θ_i`, ascending.
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub gl_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphereGrid {
    pub fn new(band_limit: usize) -> Self {
        Self::with_sizes(band_limit, 2 * band_limit + 2, 2 * (2 * band_limit + 1)).unwrap()
    }

    pub fn with_sizes(band_limit: usize, n_theta: usize, n_phi: usize) -> Result<Self, SpectralError> {
        if n_theta < band_limit + 1 || n_phi < 2 * band_limit + 1 {
            return Err(SpectralError::GridTooSmall { band_limit, n_theta, n_phi });
        }
        let (cos_theta, gl_weights) = gauss_legendre(n_theta);
        let sin_theta = cos_theta.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let phi = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Ok(SphereGrid { band_limit, n_theta, n_phi, cos_theta, sin_theta, gl_weights, phi })
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of every node on ring `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.gl_weights[i] * 2.0 * PI / self.n_phi as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Vec3 {
        let (s, c) = (self.sin_theta[i], self.cos_theta[i]);
        Vec3::new(s * self.phi[j].cos(), s * self.phi[j].sin(), c)
    }

    pub fn points(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_theta {
            for j in 0..self.n_phi {
                out.push(self.point(i, j));
            }
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.n_theta).map(|i| self.weight(i) * self.n_phi as f64).sum()
    }
}

/// Index of real harmonic `(ℓ, m)` in a coefficient vector.
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Coefficients `ĝ^{ℓ,m}` in the orthonormal real harmonic basis,
/// `m > 0` ↔ `cos(mφ)`, `m < 0` ↔ `sin(|m|φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum {
    pub band_limit: usize,
    pub coeffs: Vec<f64>,
}

impl HarmonicSpectrum {
    pub fn zeros(band_limit: usize) -> Self {
        HarmonicSpectrum { band_limit, coeffs: vec![0.0; (band_limit + 1) * (band_limit + 1)] }
    }

    /// Single harmonic with unit coefficient.
    pub fn unit(band_limit: usize, l: usize, m: i64) -> Self {
        let mut s = Self::zeros(band_limit);
        s.set(l, m, 1.0);
        s
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.band_limit || m.unsigned_abs() as usize > l {
            return 0.0;
        }
        self.coeffs[l * l + (l as i64 + m) as usize]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        let i = l * l + (l as i64 + m) as usize;
        self.coeffs[i] = v;
    }

    /// Multiply every degree-ℓ coefficient by `f(ℓ)`.
    pub fn map_degree<F: Fn(usize) -> f64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for l in 0..=self.band_limit {
            let a = f(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= a;
            }
        }
        out
    }

    /// Zero-pad or truncate to another band limit.
    pub fn with_band_limit(&self, band_limit: usize) -> Self {
        let mut out = Self::zeros(band_limit);
        let n = (band_limit.min(self.band_limit) + 1).pow(2);
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// `Σ_m |ĝ^{ℓ,m}|²` for each degree.
    pub fn degree_power(&self) -> Vec<f64> {
        (0..=self.band_limit)
            .map(|l| self.coeffs[l * l..(l + 1) * (l + 1)].iter().map(|c| c * c).sum())
            .collect()
    }

    pub fn add_scaled(&mut self, other: &Self, a: f64) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }

    /// Value at an arbitrary unit vector.
    pub fn eval_at(&self, p: Vec3) -> f64 {
        let mut work = PointLegendre::new(self.band_limit);
        work.fill(p);
        work.value(self)
    }

    /// Value and tangent gradient at an arbitrary unit vector.
    pub fn eval_with_gradient(&self, p: Vec3) -> (f64, Vec3) {
        let mut work = PointLegendre::new(self.band_limit);
        work.fill(p);
        (work.value(self), work.gradient(self))
    }
}

/// Normalized associated Legendre values and their θ-derivatives for the real
/// basis, `√2` included for `m > 0`, indexed by `tri(ℓ, m)`.
pub fn legendre_table(lmax: usize, c: f64, s: f64, p: &mut [f64], dp: &mut [f64]) {
    let n = tri(lmax, lmax) + 1;
    debug_assert!(p.len() >= n && dp.len() >= n);
    // complex-normalized recurrences without the Condon–Shortley phase
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[tri(m, m)] = pmm;
        if m < lmax {
            p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * c * pmm;
        }
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri(l, m)] = a * (c * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    for l in 0..=lmax {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let up = if m < l { p[tri(l, m + 1)] } else { 0.0 };
            dp[tri(l, m)] = if m == 0 {
                -(lf * (lf + 1.0)).sqrt() * up
            } else {
                0.5 * (((lf + mf) * (lf - mf + 1.0)).sqrt() * p[tri(l, m - 1)]
                    - ((lf + mf + 1.0) * (lf - mf)).sqrt() * up)
            };
        }
    }
    let r2 = 2f64.sqrt();
    for l in 1..=lmax {
        for m in 1..=l {
            p[tri(l, m)] *= r2;
            dp[tri(l, m)] *= r2;
        }
    }
}

/// Scratch space for evaluating spectra at one arbitrary point.
#[derive(Debug, Clone)]
pub struct PointLegendre {
    lmax: usize,
    p: Vec<f64>,
    dp: Vec<f64>,
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
    sin_t: f64,
    e_theta: Vec3,
    e_phi: Vec3,
}

impl PointLegendre {
    pub fn new(lmax: usize) -> Self {
        let n = tri(lmax, lmax) + 1;
        PointLegendre {
            lmax,
            p: vec![0.0; n],
            dp: vec![0.0; n],
            cos_m: vec![0.0; lmax + 1],
            sin_m: vec![0.0; lmax + 1],
            sin_t: 0.0,
            e_theta: Vec3::ZERO,
            e_phi: Vec3::ZERO,
        }
    }

    pub fn fill(&mut self, p: Vec3) {
        let c = p.z.clamp(-1.0, 1.0);
        let rho = (p.x * p.x + p.y * p.y).sqrt();
        let s = rho.max(1e-300);
        let ph = p.y.atan2(p.x);
        legendre_table(self.lmax, c, rho, &mut self.p, &mut self.dp);
        for m in 0..=self.lmax {
            let a = m as f64 * ph;
            self.cos_m[m] = a.cos();
            self.sin_m[m] = a.sin();
        }
        self.sin_t = s;
        let (cp, sp) = (ph.cos(), ph.sin());
        self.e_theta = Vec3::new(c * cp, c * sp, -rho);
        self.e_phi = Vec3::new(-sp, cp, 0.0);
    }

    pub fn value(&self, spec: &HarmonicSpectrum) -> f64 {
        let lmax = self.lmax.min(spec.band_limit);
        let mut acc = 0.0;
        for l in 0..=lmax {
            acc += spec.get(l, 0) * self.p[tri(l, 0)];
            for m in 1..=l {
                let pl = self.p[tri(l, m)];
                acc += pl * (spec.get(l, m as i64) * self.cos_m[m] + spec.get(l, -(m as i64)) * self.sin_m[m]);
            }
        }
        acc
    }

    /// Per-order sums `A_m = Σ_ℓ ĝ^{ℓ,m} P̄_ℓ^m`, `B_m = Σ_ℓ ĝ^{ℓ,−m} P̄_ℓ^m`
    /// and their θ-derivatives; the point's azimuth is not applied.
    pub fn order_sums(&self, spec: &HarmonicSpectrum, a: &mut [f64], b: &mut [f64], da: &mut [f64], db: &mut [f64]) {
        let lmax = self.lmax.min(spec.band_limit);
        for m in 0..=lmax {
            let (mut sa, mut sb, mut sda, mut sdb) = (0.0, 0.0, 0.0, 0.0);
            for l in m..=lmax {
                let k = tri(l, m);
                let ca = spec.get(l, m as i64);
                let cb = if m > 0 { spec.get(l, -(m as i64)) } else { 0.0 };
                sa += ca * self.p[k];
                sb += cb * self.p[k];
                sda += ca * self.dp[k];
                sdb += cb * self.dp[k];
            }
            a[m] = sa;
            b[m] = sb;
            da[m] = sda;
            db[m] = sdb;
        }
    }

    pub fn gradient(&self, spec: &HarmonicSpectrum) -> Vec3 {
        let lmax = self.lmax.min(spec.band_limit);
        let mut dth = 0.0;
        let mut dph = 0.0;
        for l in 0..=lmax {
            dth += spec.get(l, 0) * self.dp[tri(l, 0)];
            for m in 1..=l {
                let (a, b) = (spec.get(l, m as i64), spec.get(l, -(m as i64)));
                dth += self.dp[tri(l, m)] * (a * self.cos_m[m] + b * self.sin_m[m]);
                dph += m as f64 * self.p[tri(l, m)] * (b * self.cos_m[m] - a * self.sin_m[m]);
            }
        }
        self.e_theta * dth + self.e_phi * (dph / self.sin_t)
    }
}

/// Precomputed transform tables for one grid.
#[derive(Debug)]
pub struct SpherePlan {
    pub grid: SphereGrid,
    pub band_limit: usize,
    /// `[tri(ℓ,m) * n_theta + i]`
    plm: Vec<f64>,
    dplm: Vec<f64>,
    /// `[m * n_phi + j]`
    cos_mphi: Vec<f64>,
    sin_mphi: Vec<f64>,
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<SpherePlan>>>> = OnceLock::new();

impl SpherePlan {
    pub fn new(band_limit: usize) -> Self {
        Self::from_grid(SphereGrid::new(band_limit))
    }

    /// Process-wide shared plan with the default grid for `band_limit`.
    pub fn shared(band_limit: usize) -> Arc<SpherePlan> {
        let map = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = map.lock().unwrap();
        guard.entry(band_limit).or_insert_with(|| Arc::new(SpherePlan::new(band_limit))).clone()
    }

    pub fn from_grid(grid: SphereGrid) -> Self {
        let l = grid.band_limit;
        let nt = grid.n_theta;
        let np = grid.n_phi;
        let ntri = tri(l, l) + 1;
        let mut plm = vec![0.0; ntri * nt];
        let mut dplm = vec![0.0; ntri * nt];
        let mut p = vec![0.0; ntri];
        let mut dp = vec![0.0; ntri];
        for i in 0..nt {
            legendre_table(l, grid.cos_theta[i], grid.sin_theta[i], &mut p, &mut dp);
            for k in 0..ntri {
                plm[k * nt + i] = p[k];
                dplm[k * nt + i] = dp[k];
            }
        }
        let mut cos_mphi = vec![0.0; (l + 1) * np];
        let mut sin_mphi = vec![0.0; (l + 1) * np];
        for m in 0..=l {
            for j in 0..np {
                let a = m as f64 * grid.phi[j];
                cos_mphi[m * np + j] = a.cos();
                sin_mphi[m * np + j] = a.sin();
            }
        }
        SpherePlan { grid, band_limit: l, plm, dplm, cos_mphi, sin_mphi }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Quadrature of grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let np = self.grid.n_phi;
        (0..self.grid.n_theta)
            .map(|i| self.grid.weight(i) * values[i * np..(i + 1) * np].iter().sum::<f64>())
            .sum()
    }

    /// Grid values of `f(point)`.
    pub fn sample<F: Fn(Vec3) -> f64>(&self, f: F) -> Vec<f64> {
        self.grid.points().into_iter().map(f).collect()
    }

    pub fn analysis(&self, values: &[f64]) -> Result<HarmonicSpectrum, SpectralError> {
        if values.len() != self.len() {
            return Err(SpectralError::BandLimitMismatch { expected: self.len(), found: values.len() });
        }
        let l = self.band_limit;
        let nt = self.grid.n_theta;
        let np = self.grid.n_phi;
        // ring Fourier sums a_m(i), b_m(i)
        let mut a = vec![0.0; (l + 1) * nt];
        let mut b = vec![0.0; (l + 1) * nt];
        for i in 0..nt {
            let row = &values[i * np..(i + 1) * np];
            let w = self.grid.weight(i);
            for m in 0..=l {
                let cm = &self.cos_mphi[m * np..(m + 1) * np];
                let sm = &self.sin_mphi[m * np..(m + 1) * np];
                let mut sa = 0.0;
                let mut sb = 0.0;
                for j in 0..np {
                    sa += row[j] * cm[j];
                    sb += row[j] * sm[j];
                }
                a[m * nt + i] = sa * w;
                b[m * nt + i] = sb * w;
            }
        }
        let mut out = HarmonicSpectrum::zeros(l);
        for ll in 0..=l {
            for m in 0..=ll {
                let pr = &self.plm[tri(ll, m) * nt..(tri(ll, m) + 1) * nt];
                let am = &a[m * nt..(m + 1) * nt];
                let ca: f64 = pr.iter().zip(am).map(|(x, y)| x * y).sum();
                out.set(ll, m as i64, ca);
                if m > 0 {
                    let bm = &b[m * nt..(m + 1) * nt];
                    let cb: f64 = pr.iter().zip(bm).map(|(x, y)| x * y).sum();
                    out.set(ll, -(m as i64), cb);
                }
            }
        }
        Ok(out)
    }

    fn ring_sums(&self, spec: &HarmonicSpectrum, table: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let l = self.band_limit.min(spec.band_limit);
        let nt = self.grid.n_theta;
        let mut am = vec![0.0; (l + 1) * nt];
        let mut bm = vec![0.0; (l + 1) * nt];
        for ll in 0..=l {
            for m in 0..=ll {
                let pr = &table[tri(ll, m) * nt..(tri(ll, m) + 1) * nt];
                let ca = spec.get(ll, m as i64);
                let cb = if m > 0 { spec.get(ll, -(m as i64)) } else { 0.0 };
                if ca != 0.0 {
                    for (x, p) in am[m * nt..(m + 1) * nt].iter_mut().zip(pr) {
                        *x += ca * p;
                    }
                }
                if cb != 0.0 {
                    for (x, p) in bm[m * nt..(m + 1) * nt].iter_mut().zip(pr) {
                        *x += cb * p;
                    }
                }
            }
        }
        (am, bm)
    }

    pub fn synthesis(&self, spec: &HarmonicSpectrum) -> Vec<f64> {
        let l = self.band_limit.min(spec.band_limit);
        let nt = self.grid.n_theta;
        let np = self.grid.n_phi;
        let (am, bm) = self.ring_sums(spec, &self.plm);
        let mut out = vec![0.0; nt * np];
        for i in 0..nt {
            let row = &mut out[i * np..(i + 1) * np];
            for m in 0..=l {
                let (ca, cb) = (am[m * nt + i], bm[m * nt + i]);
                if ca == 0.0 && cb == 0.0 {
                    continue;
                }
                let cm = &self.cos_mphi[m * np..(m + 1) * np];
                let sm = &self.sin_mphi[m * np..(m + 1) * np];
                for j in 0..np {
                    row[j] += ca * cm[j] + cb * sm[j];
                }
            }
        }
        out
    }

    /// Tangent gradient, in Cartesian components, at every grid node.
    pub fn gradient(&self, spec: &HarmonicSpectrum) -> Vec<Vec3> {
        let l = self.band_limit.min(spec.band_limit);
        let nt = self.grid.n_theta;
        let np = self.grid.n_phi;
        let (am, bm) = self.ring_sums(spec, &self.plm);
        let (dam, dbm) = self.ring_sums(spec, &self.dplm);
        let mut out = vec![Vec3::ZERO; nt * np];
        let mut dth = vec![0.0; np];
        let mut dph = vec![0.0; np];
        for i in 0..nt {
            dth.iter_mut().for_each(|x| *x = 0.0);
            dph.iter_mut().for_each(|x| *x = 0.0);
            for m in 0..=l {
                let cm = &self.cos_mphi[m * np..(m + 1) * np];
                let sm = &self.sin_mphi[m * np..(m + 1) * np];
                let (da, db) = (dam[m * nt + i], dbm[m * nt + i]);
                let (a, b) = (am[m * nt + i] * m as f64, bm[m * nt + i] * m as f64);
                for j in 0..np {
                    dth[j] += da * cm[j] + db * sm[j];
                    dph[j] += b * cm[j] - a * sm[j];
                }
            }
            let (c, s) = (self.grid.cos_theta[i], self.grid.sin_theta[i]);
            for j in 0..np {
                let (cp, sp) = (self.cos_mphi[np + j], self.sin_mphi[np + j]);
                let (cp, sp) = if l == 0 {
                    (self.grid.phi[j].cos(), self.grid.phi[j].sin())
                } else {
                    (cp, sp)
                };
                let e_t = Vec3::new(c * cp, c * sp, -s);
                let e_p = Vec3::new(-sp, cp, 0.0);
                out[i * np + j] = e_t * dth[j] + e_p * (dph[j] / s);
            }
        }
        out
    }

    /// Analysis of each Cartesian component of a vector field.
    pub fn analysis_vec(&self, field: &[Vec3]) -> Result<[HarmonicSpectrum; 3], SpectralError> {
        let xs: Vec<f64> = field.iter().map(|v| v.x).collect();
        let ys: Vec<f64> = field.iter().map(|v| v.y).collect();
        let zs: Vec<f64> = field.iter().map(|v| v.z).collect();
        Ok([self.analysis(&xs)?, self.analysis(&ys)?, self.analysis(&zs)?])
    }
}

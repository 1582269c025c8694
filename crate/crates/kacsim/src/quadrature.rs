//! One-dimensional quadrature rules shared by the spectral, kernel and
//! diagnostics code.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `P_n(z)` and `P_n'(z)` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (p, pm1) = legendre_pair(n, z);
    let d = if n == 0 { 0.0 } else { n as f64 * (z * p - pm1) / (z * z - 1.0) };
    (p, d)
}

/// `(P_n(z), P_{n−1}(z))`.
fn legendre_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Legendre polynomial `P_n(z)`.
pub fn legendre(n: usize, z: f64) -> f64 {
    legendre_pair(n, z).0
}

/// All `P_0(z) ..= P_n(z)`.
pub fn legendre_all(n: usize, z: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n == 0 {
        return;
    }
    out.push(z);
    for k in 2..=n {
        let kf = k as f64;
        let p = ((2.0 * kf - 1.0) * z * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(p);
    }
}

/// A quadrature rule as parallel node/weight arrays.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, per_panel: usize) -> Rule {
    let (x, w) = gauss_legendre(per_panel);
    let h = (b - a) / panels as f64;
    let mut rule = Rule::default();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            rule.nodes.push(lo + 0.5 * h * (xi + 1.0));
            rule.weights.push(0.5 * h * wi);
        }
    }
    rule
}

/// Gauss–Legendre rule in `log t` on `[t0, t1]`: weights already include the
/// Jacobian `t`, so `Σ w_i f(t_i) ≈ ∫ f(t) dt`.
pub fn log_gl(t0: f64, t1: f64, panels: usize, per_panel: usize) -> Rule {
    let base = composite_gl(t0.ln(), t1.ln(), panels, per_panel);
    let mut rule = Rule::default();
    for (y, w) in base.nodes.iter().zip(&base.weights) {
        let t = y.exp();
        rule.nodes.push(t);
        rule.weights.push(w * t);
    }
    rule
}

/// Trapezoid rule on `n` log-spaced nodes in `[t0, t1]`; weights include the
/// Jacobian `t`.
pub fn log_trapezoid(t0: f64, t1: f64, n: usize) -> Rule {
    assert!(n >= 2);
    let (a, b) = (t0.ln(), t1.ln());
    let h = (b - a) / (n - 1) as f64;
    let mut rule = Rule::default();
    for i in 0..n {
        let t = (a + i as f64 * h).exp();
        let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        rule.nodes.push(t);
        rule.weights.push(end * h * t);
    }
    rule
}

/// Barycentric interpolant on Chebyshev–Lobatto nodes of `[a, b]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl Chebyshev {
    /// Chebyshev–Lobatto points of `[a, b]` (n + 1 of them).
    pub fn points(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|j| {
                let x = (PI * j as f64 / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * x
            })
            .collect()
    }

    pub fn fit<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> Self {
        let nodes = Self::points(a, b, n);
        let values = nodes.iter().map(|x| f(*x)).collect();
        Chebyshev { a, b, nodes, values }
    }

    pub fn from_values(a: f64, b: f64, values: Vec<f64>) -> Self {
        let n = values.len() - 1;
        Chebyshev { a, b, nodes: Self::points(a, b, n), values }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (xj, fj)) in self.nodes.iter().zip(&self.values).enumerate() {
            let d = x - xj;
            if d == 0.0 {
                return *fj;
            }
            let mut wj = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                wj *= 0.5;
            }
            let t = wj / d;
            num += t * fj;
            den += t;
        }
        num / den
    }
}


/// Gauss–Hermite nodes and weights for `∫ g(x) e^{−x²} dx` by the
/// Golub–Welsch eigenvalue method, nodes ascending.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

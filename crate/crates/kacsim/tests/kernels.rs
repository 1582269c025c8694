use std::f64::consts::PI;
use std::io::Write;

use kacsim::functionals::{lambda_b_estimate, LogData, TestFunctionFamily};
use kacsim::geometry::{to_frame, Vec3};
use kacsim::kernels::*;
use kacsim::quadrature::log_gl;
use kacsim::sphere_spectral::{c_s, heat_kernel, FracKernel, SpherePlan};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn power_law_endpoint() {
    let p = power_law(7.0 / 3.0).unwrap();
    assert!((p.gamma + 2.0).abs() < 1e-12);
    assert!((p.s - 0.75).abs() < 1e-12);
    assert!((p.lbar_min - 16.0 / 3.0).abs() < 1e-12);
}

#[test]
fn power_law_rejects_out_of_range() {
    for q in [2.0, 1.5, 2.4, f64::NAN] {
        assert!(power_law(q).is_err(), "q = {q}");
    }
    let p = power_law(2.0 + 1e-9).unwrap();
    assert!(p.gamma > -3.0 && p.gamma < -2.99);
    assert!(p.s < 1.0 && p.s > 0.999);
}

proptest! {
    #[test]
    fn power_law_exponent_ranges(q in 2.0001f64..(7.0 / 3.0)) {
        let p = power_law(q).unwrap();
        prop_assert!(p.gamma > -3.0 && p.gamma <= -2.0 + 1e-12);
        prop_assert!(p.s >= 0.75 - 1e-12 && p.s < 1.0);
        let sum = p.gamma + 2.0 * p.s;
        prop_assert!(sum > -2.0 && sum <= 1e-12);
    }

    #[test]
    fn regularized_alpha_is_bounded_and_converges(r in 1e-3f64..10.0, k in 1usize..200, gamma in -2.99f64..-2.0) {
        let a = Alpha::Regularized { gamma, k };
        let bound = (k as f64).powf(-gamma);
        prop_assert!(a.eval(r) <= bound * (1.0 + 1e-12));
        prop_assert!(a.eval(r) <= r.powf(gamma));
        // |α^k − α| r³ ≤ C uniformly
        let exact = Alpha::Power { gamma };
        prop_assert!((a.eval(r) - exact.eval(r)).abs() * r.powi(3) <= 1.0);
    }

    #[test]
    fn psi_is_a_monotone_cutoff(c in -1.0f64..1.0, k in 1usize..100) {
        let p = psi_k(k, c);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(psi_k(k + 1, c) >= p);
        if c <= 1.0 - 1.0 / k as f64 {
            prop_assert_eq!(p, 1.0);
        }
        if c >= 1.0 - 0.5 / k as f64 {
            prop_assert_eq!(p, 0.0);
        }
    }
}

#[test]
fn alpha_regularization_converges_pointwise() {
    let gamma = -2.5;
    for r in [0.1f64, 1.0, 3.0] {
        let exact = r.powf(gamma);
        let err = |k: usize| (Alpha::Regularized { gamma, k }.eval(r) - exact).abs();
        assert!(err(1000) < err(100) && err(100) < err(10));
        assert!(err(100_000) < 1e-6 * exact);
    }
}

/// `½ κ_s ∫ (1 − e^{−2t}) t^{−1−s} dt` by quadrature: `∫(1 − c) Φ_t(c) dσ' = 1 − e^{−2t}`.
fn bbar_chi_oracle(s: f64) -> f64 {
    let body = log_gl(1e-12, 1e3, 60, 16).integrate(|t| -(-2.0 * t).exp_m1() * t.powf(-1.0 - s));
    let head = 2.0 * 1e-12f64.powf(1.0 - s) / (1.0 - s);
    let tail = 1e3f64.powf(-s) / s;
    0.5 / c_s(s) * (body + head + tail)
}

#[test]
fn bbar_of_constant_kernel() {
    let b = AngularKernel::constant(1.0 / (4.0 * PI));
    assert!((b.bbar().unwrap() - 0.5).abs() < 1e-13);
    assert!((b.l1_norm().unwrap() - 1.0).abs() < 1e-13);
}

#[test]
fn bbar_of_fractional_kernels() {
    for s in [0.5, 0.75, 0.9] {
        let v = AngularKernel::frac_laplacian(s).unwrap().bbar().unwrap();
        let oracle = bbar_chi_oracle(s);
        assert!(rel(v, oracle) < 1e-6, "s={s}: {v} vs {oracle}");
    }
    // normalized χ_{1/2}
    let v = AngularKernel::frac_laplacian(0.5).unwrap().bbar().unwrap();
    assert!((v - 0.5f64.sqrt()).abs() < 1e-8);
}

#[test]
fn bbar_of_kernel_scaled_by_c_s_squared() {
    // c_s ∫ Φ_t t^{−1−s} dt = c_s² χ_s
    let b = AngularKernel::frac_laplacian(0.5).unwrap().scaled(c_s(0.5).powi(2));
    let v = b.bbar().unwrap();
    assert!((v - 2.0 * 2f64.sqrt() * PI).abs() < 1e-7, "{v}");
}

#[test]
fn bbar_detects_non_integrable_kernels() {
    let b = AngularKernel::from_theta_fn("inv_sq", |th: f64| (1.0 - th.cos()).powi(-2), None, None);
    assert!(matches!(b.bbar(), Err(KernelError::NonIntegrable(_))));
    let b = AngularKernel::from_theta_fn("theta^-5", |th: f64| th.powi(-5), None, None);
    assert!(matches!(b.bbar(), Err(KernelError::NonIntegrable(_))));
    assert!(matches!(AngularKernel::frac_laplacian(0.75).unwrap().l1_norm(), Err(KernelError::NonIntegrable(_))));
}

fn chi_kernel(k: usize) -> RegularizedKernel {
    RegularizedKernel::from_omega(Omega::fractional(0.75).unwrap(), k, default_eps(k)).unwrap()
}

#[test]
fn bk_equals_b_away_from_the_diagonal() {
    let k = 8;
    let reg = chi_kernel(k);
    let chi = FracKernel::shared(0.75).unwrap();
    for c in check_grid(k) {
        if c <= 1.0 - 1.0 / k as f64 {
            assert_eq!(reg.eval(c), chi.chi(c).unwrap());
        }
    }
}

#[test]
fn bk_is_monotone_in_k_and_below_b() {
    let chi = FracKernel::shared(0.75).unwrap();
    let kernels: Vec<RegularizedKernel> = [4usize, 5, 6, 8, 12].iter().map(|k| chi_kernel(*k)).collect();
    for c in check_grid(4) {
        let vals: Vec<f64> = kernels.iter().map(|r| r.eval(c)).collect();
        for w in vals.windows(2) {
            assert!(w[0] <= w[1] * (1.0 + 1e-12), "c={c}: {vals:?}");
        }
        if c < 1.0 {
            let b = chi.chi(c).unwrap();
            assert!(vals[vals.len() - 1] <= b * (1.0 + 1e-12), "c={c}");
        }
    }
}

#[test]
fn bk_is_bounded_with_floor_growing() {
    let reg = chi_kernel(8);
    assert!(reg.sup.is_finite() && reg.sup > 0.0);
    let bound = reg.angular.bound.unwrap();
    for c in check_grid(8) {
        assert!(reg.eval(c) <= bound);
        if c >= 1.0 - 1.0 / 8.0 {
            assert!(reg.eval(c) >= reg.rho);
        }
    }
    let rhos: Vec<f64> = [2usize, 4, 8, 16, 32].iter().map(|k| chi_kernel(*k).rho).collect();
    for w in rhos.windows(2) {
        assert!(w[1] > 1.5 * w[0], "{rhos:?}");
    }
}

#[test]
fn bk_stays_above_a_fraction_of_chi_off_the_diagonal() {
    let k = 8;
    let reg = chi_kernel(k);
    let chi = FracKernel::shared(0.75).unwrap();
    let worst = check_grid(k)
        .into_iter()
        .filter(|c| *c < 1.0)
        .map(|c| reg.eval(c) / chi.chi(c).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(worst > 0.0);
    let plateau = check_grid(k)
        .into_iter()
        .filter(|c| *c <= 1.0 - 1.0 / k as f64)
        .map(|c| reg.eval(c) / chi.chi(c).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(plateau, 1.0);
}

#[test]
fn truncated_series_agrees_with_heat_kernel_quadrature() {
    let omega = Omega::fractional(0.75).unwrap();
    let eps = 0.05;
    let series = TruncatedSeries::new(&omega, eps).unwrap();
    for c in [-0.9, 0.0, 0.7, 0.99, 1.0] {
        let q = log_gl(eps, 40.0, 40, 16).integrate(|t| heat_kernel(c, t).unwrap() * omega.eval(t));
        let tail = omega.laplace_tail(0.0, 40.0).unwrap() / (4.0 * PI);
        assert!(rel(series.eval(c), q + tail) < 1e-9, "c={c}: {} vs {}", series.eval(c), q + tail);
    }
}

#[test]
fn u_k_solves_its_defining_equation() {
    let reg = chi_kernel(8);
    let u = reg.u_k(U_K_TOL).unwrap();
    let v = TruncatedSeries::new(&reg.tilde.omega, u).unwrap().at_one();
    assert!(rel(v, reg.rho) < 1e-9, "{v} vs {}", reg.rho);
    assert_eq!(RegularizedKernel::omega_k(0.5 * u, u, 0.75), u.powf(-0.75));
    assert_eq!(RegularizedKernel::kappa_k(0.5 * u, u, 0.75), 0.0);
}

fn write_table(t: &[f64], w: &[f64]) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "t,omega").unwrap();
    for (a, b) in t.iter().zip(w) {
        writeln!(f, "{a:e},{b:e}").unwrap();
    }
    f
}

#[test]
fn table_omega_reproduces_the_fractional_kernel() {
    let s = 0.75;
    let power = Omega::fractional(s).unwrap();
    let t: Vec<f64> = (0..=40).map(|i| 10f64.powf(-8.0 + 0.25 * i as f64)).collect();
    let w: Vec<f64> = t.iter().map(|x| power.eval(*x)).collect();
    let file = write_table(&t, &w);
    let table = Omega::from_csv(file.path()).unwrap();
    let chi = FracKernel::shared(s).unwrap();
    let sub = Subordinated::new(table.clone()).unwrap();
    for th in [0.05, 0.3, 1.0, 2.5] {
        assert!(rel(sub.eval_theta(th), chi.chi_theta(th)) < 1e-5, "θ={th}");
    }
    for eps in [1e-8, 1e-3] {
        let a = lambda_lower_bound(&table, eps).unwrap();
        let b = lambda_lower_bound(&power, eps).unwrap();
        assert!(rel(a, b) < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn bounded_omega_is_a_configuration_error() {
    let t = vec![1e-3, 1.0, 10.0];
    let w = vec![1e-3f64.sqrt(), 1.0, 0.01];
    let omega = Omega::table(t, w).unwrap();
    assert!(!omega.is_singular());
    assert!(matches!(RegularizedKernel::from_omega(omega, 8, 1e-2), Err(KernelError::Invalid(_))));
}

#[test]
fn malformed_tables_are_rejected() {
    assert!(Omega::table(vec![1.0], vec![1.0]).is_err());
    assert!(Omega::table(vec![1.0, 0.5], vec![1.0, 1.0]).is_err());
    assert!(Omega::table(vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
    assert!(matches!(Omega::from_csv(std::path::Path::new("/nonexistent/omega.csv")), Err(KernelError::Io(_))));
}

/// `∫_ε^∞ (1 − e^{−at}) t^{−1−s} dt` by log-spaced quadrature.
fn one_minus_exp_oracle(a: f64, eps: f64, s: f64) -> f64 {
    let body = log_gl(eps, 1e4, 120, 16).integrate(|t| -(-a * t).exp_m1() * t.powf(-1.0 - s));
    body + 1e4f64.powf(-s) / s
}

#[test]
fn lambda_bound_matches_quadrature() {
    let s = 0.75;
    let omega = Omega::fractional(s).unwrap();
    for eps in [1e-8, 1e-4, 1.0 / 64.0] {
        let oracle = 3.0 * one_minus_exp_oracle(11.0, eps, s) / one_minus_exp_oracle(6.0, eps, s);
        let v = lambda_lower_bound(&omega, eps).unwrap();
        assert!(rel(v, oracle) < 1e-9, "ε={eps}: {v} vs {oracle}");
    }
    let limit = lambda_lower_bound(&omega, 0.0).unwrap();
    assert!((limit - lambda_bound_closed_form(s)).abs() < 1e-12);
}

#[test]
fn lambda_bound_exceeds_three() {
    for s in [0.1, 0.5, 0.75, 0.9, 0.99] {
        let omega = Omega::fractional(s).unwrap();
        for eps in [0.0, 1e-8, 1e-2, 1.0] {
            assert!(lambda_lower_bound(&omega, eps).unwrap() > 3.0, "s={s} ε={eps}");
        }
    }
    let t = vec![1e-6, 1e-3, 1.0, 100.0];
    let w = vec![1e9, 1e4, 1.0, 1e-5];
    let omega = Omega::table(t, w).unwrap();
    assert!(lambda_lower_bound(&omega, 1e-6).unwrap() > 3.0);
}

#[test]
fn h1_margin_positive_at_the_endpoint_exponent() {
    let p = power_law(7.0 / 3.0).unwrap();
    let omega = Omega::fractional(p.s).unwrap();
    let lb = lambda_lower_bound(&omega, 1e-8).unwrap();
    assert!(h1_margin(lb, DEFAULT_LAMBDA_SLACK, p.gamma) > 0.0);
    let info = KernelSpec::PowerLaw { q: 7.0 / 3.0, k: 8, lambda: 0.05, eps: None }.info().unwrap();
    assert!(info.lambda_bound.unwrap() > 3.0);
    assert!(info.h1_margin.unwrap() > 0.0);
}

#[test]
fn estimated_lambda_respects_the_lower_bound() {
    let reg = chi_kernel(8);
    let lb = lambda_lower_bound(&reg.tilde.omega, reg.eps).unwrap();
    let plan = SpherePlan::shared(32);
    let fam = TestFunctionFamily::generate_symmetric(3, 5);
    for (seed, f) in &fam.members {
        let ld = LogData::new(&f.sample(&plan)).unwrap();
        let est = lambda_b_estimate(&ld, |c| reg.eval(c), 12).unwrap();
        assert!(est.ratio.unwrap() >= lb * (1.0 - 5e-2), "seed {seed}: {est:?} vs {lb}");
    }
}

#[test]
fn constant_kernel_sampler_is_uniform() {
    let sampler = AngularSampler::new(&AngularKernel::constant(1.0), SAMPLER_CELLS).unwrap();
    assert!((sampler.l1_norm() - 4.0 * PI).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let mut cs: Vec<f64> = (0..n).map(|_| sampler.sample_c(&mut rng)).collect();
    cs.sort_by(f64::total_cmp);
    let d = cs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = 0.5 * (c + 1.0);
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value 1.63/√n
    assert!(d < 1.63 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn sampled_sigma_prime_is_unit_with_correct_mean_deflection() {
    let reg = chi_kernel(8);
    let sampler = reg.sampler().unwrap();
    let bbar_k = reg.angular.bbar().unwrap();
    let l1 = reg.angular.l1_norm().unwrap();
    let expected = 2.0 * bbar_k / l1;
    assert!(rel(sampler.mean_one_minus_c(), expected) < 1e-4);
    assert!(rel(sampler.l1_norm(), l1) < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sigma = Vec3::new(0.3, -0.4, 0.5).normalized();
    let n = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let sp = sampler.sample_sigma_prime(&mut rng, sigma);
        assert!((sp.norm() - 1.0).abs() < 1e-12);
        let x = 1.0 - sigma.dot(sp);
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
}

#[test]
fn sampler_requires_a_bounded_kernel() {
    let b = AngularKernel::frac_laplacian(0.75).unwrap();
    assert!(matches!(AngularSampler::new(&b, 64), Err(KernelError::Unbounded(_))));
    let nan = AngularKernel::from_theta_fn("nan", |_| f64::NAN, Some(1.0), None);
    assert!(matches!(AngularSampler::new(&nan, 64), Err(KernelError::Tabulation { .. })));
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Vec3, Vec3) {
    use rand_distr::{Distribution, StandardNormal};
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    (Vec3::new(g(), g(), g()), Vec3::new(g(), g(), g()))
}

#[test]
fn a_phi_vanishes_on_collision_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let chi = AngularKernel::frac_laplacian(0.75).unwrap();
    let alpha = Alpha::Power { gamma: -2.0 };
    for _ in 0..5 {
        let (v, w) = random_pair(&mut rng);
        for phi in [TestPhi::Constant { value: 2.0 }, TestPhi::Linear { a: Vec3::new(1.0, -2.0, 0.5) }, TestPhi::Energy] {
            assert_eq!(a_phi(&phi, v, w, &alpha, &chi, &APhiRule::default()).unwrap(), 0.0);
            // direct differences agree with the closed form
            let f = to_frame(v, w).unwrap();
            let sp = Vec3::new(0.3, 0.9, -0.1).normalized();
            let direct = phi.pair_sum(f.z, f.r, sp) - phi.eval(v) - phi.eval(w);
            assert!(direct.abs() < 1e-12 * (1.0 + v.norm_sq() + w.norm_sq()));
        }
    }
    assert!(a_phi(&TestPhi::Energy, Vec3::ZERO, Vec3::ZERO, &alpha, &chi, &APhiRule::default()).is_err());
}

#[test]
fn a_phi_of_gaussian_bump_is_stable_under_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let chi = AngularKernel::frac_laplacian(0.75).unwrap();
    let bbar = chi.bbar().unwrap();
    let alpha = Alpha::Power { gamma: -2.0 };
    let phi = TestPhi::GaussianBump { center: Vec3::new(0.2, 0.1, -0.3) };
    let rule = APhiRule::default();
    for _ in 0..5 {
        let (v, w) = random_pair(&mut rng);
        let a = a_phi(&phi, v, w, &alpha, &chi, &rule).unwrap();
        let b = a_phi(&phi, v, w, &alpha, &chi, &rule.doubled()).unwrap();
        assert!((a - b).abs() <= 1e-3 * b.abs().max(1e-12), "{a} vs {b}");
        let c = a_phi_constant(b, &phi, v, w, bbar, -2.0);
        assert!(c.is_finite() && c < 10.0, "{c}");
    }
}

#[test]
fn regularized_a_phi_approaches_the_singular_one() {
    let chi = AngularKernel::frac_laplacian(0.75).unwrap();
    let phi = TestPhi::GaussianBump { center: Vec3::new(0.1, 0.0, 0.2) };
    let (v, w) = (Vec3::new(0.7, -0.2, 0.1), Vec3::new(-0.3, 0.4, 0.6));
    let rule = APhiRule::default();
    let exact = a_phi(&phi, v, w, &Alpha::Power { gamma: -2.0 }, &chi, &rule).unwrap();
    let errs: Vec<f64> = [4usize, 16, 64]
        .iter()
        .map(|&k| {
            let reg = chi_kernel(k);
            let a = a_phi(&phi, v, w, &Alpha::Regularized { gamma: -2.0, k }, &reg.angular, &rule.doubled()).unwrap();
            (a - exact).abs()
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 0.5 * errs[0], "{errs:?} vs {exact}");
}

#[test]
fn kernel_spec_parses_and_validates() {
    let spec: KernelSpec = serde_json::from_str(r#"{"type": "power_law", "q": 2.3333333333333335, "k": 8}"#).unwrap();
    assert!(matches!(spec, KernelSpec::PowerLaw { lambda, .. } if lambda == DEFAULT_LAMBDA_SLACK));
    assert!(serde_json::from_str::<KernelSpec>(r#"{"type": "power_law", "q": 2.3, "k": 8, "bogus": 1}"#).is_err());
    let bad = KernelSpec::PowerLaw { q: 2.0, k: 8, lambda: 0.05, eps: None };
    assert!(bad.build().is_err());
    let m: KernelSpec = serde_json::from_str(r#"{"type": "maxwell"}"#).unwrap();
    let ck = m.build().unwrap();
    assert!((ck.envelope() - 1.0).abs() < 1e-12);
    let info = m.info().unwrap();
    assert!((info.bbar - 0.5).abs() < 1e-12);
}

#[test]
fn collision_kernel_envelope_dominates() {
    let ck = KernelSpec::FracLaplacian { s: 0.75, k: 8, gamma: Some(-2.0), lambda: 0.05, eps: None }.build().unwrap();
    let top = ck.alpha_bound();
    assert!((top - 64.0).abs() < 1e-9);
    for r in [0.0, 1e-3, 0.1, 1.0, 10.0] {
        assert!(ck.alpha.eval(r) <= top * (1.0 + 1e-12));
    }
    assert!(ck.regularized.as_ref().unwrap().truncation_ratio >= 1.0);
}

#[test]
fn gaussian_pair_change_matches_direct_difference() {
    let phi = TestPhi::GaussianBump { center: Vec3::new(0.4, -0.1, 0.3) };
    let (v, w) = (Vec3::new(0.5, 0.2, -0.7), Vec3::new(-0.6, 0.1, 0.9));
    let f = to_frame(v, w).unwrap();
    let sp = Vec3::new(-0.2, 0.7, 0.4).normalized();
    let direct = phi.eval(f.z + sp * f.r) + phi.eval(f.z - sp * f.r) - phi.eval(v) - phi.eval(w);
    let closed = phi.pair_change(f.z, f.r, f.sigma, sp - f.sigma);
    assert!((direct - closed).abs() < 1e-14, "{direct} vs {closed}");
}

#[test]
fn modified_spherical_bessel_matches_closed_forms() {
    for x in [1e-3f64, 0.5, 3.0, 20.0] {
        let i = modified_spherical_bessel(4, x);
        let i1 = (x * x.cosh() - x.sinh()) / (x * x);
        let i2 = ((x * x + 3.0) * x.sinh() - 3.0 * x * x.cosh()) / x.powi(3);
        assert!(rel(i[0], x.sinh() / x) < 1e-14);
        assert!(rel(i[1], i1) < 1e-6 * (1.0 + 1.0 / (x * x)), "x={x}: {} vs {i1}", i[1]);
        if x > 0.1 {
            assert!(rel(i[2], i2) < 1e-10, "x={x}: {} vs {i2}", i[2]);
        } else {
            assert!(rel(i[2], x * x / 15.0) < 1e-5);
        }
    }
}

#[test]
fn zonal_multipliers_of_chi_are_eigenvalue_powers() {
    let chi = AngularKernel::frac_laplacian(0.75).unwrap();
    let mu = zonal_multipliers(&chi, 40);
    for l in [1usize, 2, 10, 40] {
        let lam = (l * (l + 1)) as f64;
        assert!(rel(mu[l], lam.powf(0.75)) < 1e-5, "ℓ={l}");
    }
}

#[test]
fn series_a_phi_matches_polar_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let center = Vec3::new(0.3, -0.2, 0.1);
    let phi = TestPhi::GaussianBump { center };
    let reg = chi_kernel(8);
    let chi = AngularKernel::frac_laplacian(0.75).unwrap();
    let cases = [
        (reg.angular.clone(), Alpha::Regularized { gamma: -2.0, k: 8 }),
        (chi, Alpha::Power { gamma: -2.0 }),
        (AngularKernel::constant(0.3), Alpha::Constant { value: 1.0 }),
    ];
    for (b, alpha) in &cases {
        let fast = GaussianBumpA::new(center, b);
        for _ in 0..6 {
            let (v, w) = random_pair(&mut rng);
            let (v, w) = (v * 1.5, w * 1.5);
            let slow = a_phi(&phi, v, w, alpha, b, &APhiRule::default().doubled()).unwrap();
            let f = fast.eval(v, w, alpha);
            assert!((f - slow).abs() < 1e-5 * slow.abs().max(1e-3 * alpha.eval(0.5 * (v - w).norm())), "{}: {f} vs {slow}", b.name);
        }
    }
}

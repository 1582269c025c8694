use kacsim::geometry::Vec3;
use kacsim::kernels::{KernelSpec, TestPhi};
use kacsim::simulator::{InitialLaw, MixtureComponent, SimConfig, SimError, Simulation};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn maxwell() -> KernelSpec {
    KernelSpec::Maxwell { b0: 1.0 / (4.0 * std::f64::consts::PI), alpha: 1.0 }
}

fn soft(k: usize) -> KernelSpec {
    KernelSpec::PowerLaw { q: 7.0 / 3.0, k, lambda: 0.05, eps: None }
}

fn config(n: usize, kernel: KernelSpec, horizon: f64, replicas: usize, seed: u64) -> SimConfig {
    SimConfig {
        n,
        kernel,
        initial: InitialLaw::default(),
        horizon,
        checkpoints: vec![],
        replicas,
        seed,
        event_log: false,
    }
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn gaussian_initial_mean_within_clt_bound() {
    let sim = Simulation::new(config(10_000, maxwell(), 1.0, 1, 11)).unwrap();
    let st = sim.init_state(0);
    let m = st.momentum() / 10_000.0;
    let bound = 4.0 / (3.0f64 * 10_000.0).sqrt();
    for c in m.to_array() {
        assert!(c.abs() < bound, "{c}");
    }
}

#[test]
fn same_seed_and_replica_is_bit_identical() {
    let sim = Simulation::new(config(50, soft(8), 0.2, 1, 5)).unwrap();
    let mut a = sim.init_state(3);
    let mut b = sim.init_state(3);
    assert_eq!(a.v, b.v);
    sim.run(&mut a, 0.2).unwrap();
    sim.run(&mut b, 0.2).unwrap();
    assert_eq!(a.v, b.v);
    assert_eq!(a.proposals, b.proposals);
    assert!(a.collisions > 0);
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let cfg = SimConfig { checkpoints: vec![0.0, 0.05, 0.1], ..config(40, soft(8), 0.1, 6, 9) };
    let sim = Simulation::new(cfg).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sim.run_ensemble().unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| sim.run_ensemble().unwrap());
    for (a, b) in one.replicas.iter().zip(&many.replicas) {
        assert_eq!(a.snapshots, b.snapshots);
    }
}

#[test]
fn configuration_errors() {
    let bad_n = Simulation::new(config(1, maxwell(), 1.0, 1, 0));
    assert!(matches!(bad_n, Err(SimError::Config(_))));
    let bad_t = Simulation::new(config(4, maxwell(), 0.0, 1, 0));
    assert!(matches!(bad_t, Err(SimError::Config(_))));
    let unsorted = SimConfig { checkpoints: vec![0.5, 0.2], ..config(4, maxwell(), 1.0, 1, 0) };
    assert!(matches!(Simulation::new(unsorted), Err(SimError::Config(_))));
    let outside = SimConfig { checkpoints: vec![0.5, 2.0], ..config(4, maxwell(), 1.0, 1, 0) };
    assert!(matches!(Simulation::new(outside), Err(SimError::Config(_))));
    let bad_q = config(4, KernelSpec::PowerLaw { q: 2.0, k: 8, lambda: 0.05, eps: None }, 1.0, 1, 0);
    assert!(matches!(Simulation::new(bad_q), Err(SimError::Kernel(_))));
    let missing = SimConfig {
        initial: InitialLaw::File { path: "/nonexistent/samples.csv".into() },
        ..config(4, maxwell(), 1.0, 1, 0)
    };
    assert!(matches!(Simulation::new(missing), Err(SimError::Io(_))));
}

#[test]
fn config_json_rejects_unknown_keys() {
    let ok = r#"{"n": 8, "kernel": {"type": "maxwell"}, "horizon": 1.0, "replicas": 2, "seed": 1}"#;
    let cfg: SimConfig = serde_json::from_str(ok).unwrap();
    assert_eq!(cfg.checkpoint_times(), vec![0.0, 1.0]);
    let bad = r#"{"n": 8, "kernel": {"type": "maxwell"}, "horizon": 1.0, "replica": 2}"#;
    assert!(serde_json::from_str::<SimConfig>(bad).is_err());
}

#[test]
fn zero_duration_run_leaves_state_unchanged() {
    let sim = Simulation::new(config(20, soft(8), 1.0, 1, 2)).unwrap();
    let mut st = sim.init_state(0);
    let before = st.v.clone();
    sim.run(&mut st, 0.0).unwrap();
    assert_eq!(st.v, before);
    assert_eq!(st.proposals, 0);
}

#[test]
fn maxwell_collision_count_is_poisson() {
    // Accepted collisions over [0, T] ~ Poisson(T·N·‖B‖/2); ‖B‖ = 1 here.
    let (n, t, reps) = (32usize, 2.0, 200usize);
    let sim = Simulation::new(config(n, maxwell(), t, reps, 77)).unwrap();
    let mean = t * n as f64 * sim.kernel.envelope() / 2.0;
    assert!((mean - 32.0).abs() < 1e-9);
    let counts: Vec<f64> = (0..reps)
        .map(|r| {
            let mut st = sim.init_state(r);
            sim.run(&mut st, t).unwrap();
            st.collisions as f64
        })
        .collect();
    // Pearson χ² over bins with expected count ≥ 5.
    let pois = statrs::distribution::Poisson::new(mean).unwrap();
    use statrs::distribution::DiscreteCDF;
    let edges: Vec<u64> = vec![0, 22, 25, 27, 29, 31, 33, 35, 37, 39, 42, u64::MAX];
    let mut stat = 0.0;
    for w in edges.windows(2) {
        let lo = w[0];
        let hi = w[1];
        let p = if hi == u64::MAX { 1.0 - pois.cdf(lo - 1) } else { pois.cdf(hi - 1) - if lo == 0 { 0.0 } else { pois.cdf(lo - 1) } };
        let expect = p * reps as f64;
        assert!(expect >= 5.0, "bin [{lo}, {hi}) expects {expect}");
        let obs = counts.iter().filter(|&&c| (c as u64) >= lo && (c as u64) < hi).count() as f64;
        stat += (obs - expect).powi(2) / expect;
    }
    let df = (edges.len() - 2) as f64;
    let pval = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    assert!(pval > 0.01, "χ² = {stat}, p = {pval}");
    let avg = counts.iter().sum::<f64>() / reps as f64;
    assert!((avg - mean).abs() < 3.0 * (mean / reps as f64).sqrt(), "{avg}");
}

#[test]
fn million_events_conserve_momentum_and_energy() {
    let n = 256;
    let sim = Simulation::new(config(n, maxwell(), 1.0, 1, 3)).unwrap();
    let mut st = sim.init_state(0);
    let horizon = 1.0e6 / sim.proposal_rate();
    sim.run(&mut st, horizon * 1.01).unwrap();
    assert!(st.collisions >= 1_000_000, "{}", st.collisions);
    let (dp, de) = st.conservation_residuals();
    assert!(dp <= 1e-12 && de <= 1e-12, "{dp:e} {de:e}");
}

#[test]
fn distinct_replicas_have_distinct_trajectories() {
    let sim = Simulation::new(config(16, soft(8), 0.5, 2, 4)).unwrap();
    let ens = sim.run_ensemble().unwrap();
    assert_ne!(ens.replicas[0].snapshots[1], ens.replicas[1].snapshots[1]);
}

#[test]
fn checkpoint_at_zero_is_initial_law() {
    let law = InitialLaw::Gaussian { mean: [1.0, -2.0, 0.5], std: 2.0 };
    let cfg = SimConfig { initial: law, checkpoints: vec![0.0, 0.5], ..config(500, soft(8), 0.5, 8, 21) };
    let sim = Simulation::new(cfg).unwrap();
    let ens = sim.run_ensemble().unwrap();
    for (r, tr) in ens.replicas.iter().enumerate() {
        assert_eq!(tr.snapshots[0], sim.init_state(r).v);
    }
    let pooled = ens.pooled(0);
    let n = pooled.len() as f64;
    let mean = pooled.iter().fold(Vec3::ZERO, |a, v| a + *v) / n;
    let var = pooled.iter().map(|v| (*v - mean).norm_sq()).sum::<f64>() / (3.0 * n);
    let expect = Vec3::new(1.0, -2.0, 0.5);
    assert!((mean - expect).norm() < 4.0 * 2.0 / n.sqrt(), "{mean:?}");
    assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0 / (3.0 * n)).sqrt(), "{var}");
}

#[test]
fn standard_error_halves_when_replicas_quadruple() {
    let phi = TestPhi::GaussianBump { center: Vec3::new(0.5, 0.0, 0.0) };
    let sizes = [64usize, 128, 256, 512, 1024];
    let cfg = SimConfig { checkpoints: vec![0.5], ..config(16, maxwell(), 0.5, 1024, 31) };
    let ens = Simulation::new(cfg).unwrap().run_ensemble().unwrap();
    let vals: Vec<f64> =
        ens.replicas.iter().map(|r| r.snapshots[0].iter().map(|v| phi.eval(*v)).sum::<f64>() / 16.0).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = sizes
        .iter()
        .map(|&r| {
            let s = &vals[..r];
            let m = s.iter().sum::<f64>() / r as f64;
            let var = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r - 1) as f64;
            ((r as f64).ln(), (var / r as f64).sqrt().ln())
        })
        .unzip();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn particles_are_exchangeable() {
    let n = 20;
    let cfg = SimConfig { checkpoints: vec![0.3], ..config(n, soft(8), 0.3, 400, 8) };
    let ens = Simulation::new(cfg).unwrap().run_ensemble().unwrap();
    let a: Vec<f64> = ens.replicas.iter().map(|r| r.snapshots[0][0].norm_sq()).collect();
    let b: Vec<f64> = ens.replicas.iter().map(|r| r.snapshots[0][n / 2 - 1].norm_sq()).collect();
    let d = ks_two_sample(a, b);
    // 5% critical value for two samples of 400
    let crit = 1.358 * (2.0f64 / 400.0).sqrt();
    assert!(d < crit, "KS {d} ≥ {crit}");
}

#[test]
fn acceptance_rate_matches_pair_statistics() {
    let n = 200;
    let sim = Simulation::new(config(n, soft(8), 1.0, 1, 13)).unwrap();
    let mut st = sim.init_state(0);
    // Expected acceptance from all pairs of the initial state; the short
    // horizon keeps the pair law close to it.
    let amax = sim.kernel.alpha_bound();
    let mut expect = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                expect += sim.kernel.alpha.eval(0.5 * (st.v[i] - st.v[j]).norm()) / amax;
            }
        }
    }
    expect /= (n * (n - 1)) as f64;
    let horizon = 2.0e5 / sim.proposal_rate();
    sim.run(&mut st, horizon).unwrap();
    let p = st.collisions as f64 / st.proposals as f64;
    let se = (p * (1.0 - p) / st.proposals as f64).sqrt();
    let mean_prob = st.acceptance_sum / st.proposals as f64;
    assert!((p - mean_prob).abs() < 3.0 * se, "{p} vs {mean_prob} (se {se})");
    // The pair law drifts slightly over the run; allow its Monte Carlo spread.
    assert!((p - expect).abs() < 3.0 * se + 0.05 * expect, "{p} vs {expect}");
}

#[test]
fn event_log_times_increase_and_csv_is_written() {
    let cfg = SimConfig { event_log: true, checkpoints: vec![0.0, 0.02], ..config(10, soft(8), 0.02, 2, 1) };
    let ens = Simulation::new(cfg).unwrap().run_ensemble().unwrap();
    for r in &ens.replicas {
        let ev = r.events.as_ref().unwrap();
        assert!(!ev.is_empty());
        assert!(ev.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(ev.iter().filter(|e| e.accepted).count() as u64, r.collisions);
    }
    let mut buf = Vec::new();
    ens.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 10);
    assert!(text.starts_with("replica,particle,t,vx,vy,vz"));
    let mut ev = Vec::new();
    ens.write_events_csv(&mut ev).unwrap();
    assert!(String::from_utf8(ev).unwrap().starts_with("replica,t,i,j"));
}

#[test]
fn file_and_mixture_initial_laws() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    std::fs::write(&path, "vx,vy,vz\n1,0,0\n0,2,0\n").unwrap();
    let cfg = SimConfig { initial: InitialLaw::File { path: path.clone() }, ..config(50, maxwell(), 1.0, 1, 0) };
    let st = Simulation::new(cfg).unwrap().init_state(0);
    assert!(st.v.iter().all(|v| *v == Vec3::new(1.0, 0.0, 0.0) || *v == Vec3::new(0.0, 2.0, 0.0)));
    std::fs::write(&path, "1,0,0\nx,y,z\n").unwrap();
    let cfg = SimConfig { initial: InitialLaw::File { path }, ..config(50, maxwell(), 1.0, 1, 0) };
    assert!(matches!(Simulation::new(cfg), Err(SimError::Io(_))));

    let comps = vec![
        MixtureComponent { weight: 1.0, mean: [-3.0, 0.0, 0.0], std: 0.1 },
        MixtureComponent { weight: 3.0, mean: [3.0, 0.0, 0.0], std: 0.1 },
    ];
    let cfg = SimConfig { initial: InitialLaw::GaussianMixture { components: comps }, ..config(4000, maxwell(), 1.0, 1, 0) };
    let st = Simulation::new(cfg).unwrap().init_state(0);
    let right = st.v.iter().filter(|v| v.x > 0.0).count() as f64 / 4000.0;
    assert!((right - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 4000.0).sqrt(), "{right}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_and_momentum_conserved_for_any_seed(seed in any::<u64>(), n in 2usize..40) {
        let sim = Simulation::new(config(n, soft(8), 0.3, 1, seed)).unwrap();
        let mut st = sim.init_state(0);
        sim.run(&mut st, 0.3).unwrap();
        let (dp, de) = st.check_conservation().unwrap();
        prop_assert!(dp <= 1e-12 && de <= 1e-12);
    }
}
